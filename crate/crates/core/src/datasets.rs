//! Dataset ingestion, z-scoring, 50/50 splitting and synthetic generators.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::rng::seeded;

/// An `n × d` feature block with optional regression targets and class
/// labels. Labels are dense ids in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
    target: Option<Vec<f64>>,
    labels: Option<Vec<usize>>,
    feature_names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: Matrix, target: Option<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let n = values.nrows();
        if let Some(t) = &target {
            if t.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "target has length {} but data has {n} rows",
                    t.len()
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "labels have length {} but data has {n} rows",
                    l.len()
                )));
            }
        }
        let feature_names = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            values,
            target,
            labels,
            feature_names,
        })
    }

    /// Builds from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return invalid("rows have unequal length");
        }
        let values = Matrix::from_fn(n, d, |i, j| rows[i][j]);
        Self::new(values, None, None)
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        if target.len() != self.n() {
            return Err(Error::DimensionMismatch("target length differs from row count".into()));
        }
        self.target = Some(target);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch("label length differs from row count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Copy of the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let values = Matrix::from_fn(indices.len(), self.d(), |i, j| self.values[(indices[i], j)]);
        DataMatrix {
            values,
            target: self.target.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect()),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Picks a column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl ColumnSelector {
    /// The last column.
    pub fn last() -> Self {
        ColumnSelector::Name("last".into())
    }

    fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<usize> {
        match self {
            ColumnSelector::Index(i) if *i < width => Ok(*i),
            ColumnSelector::Index(i) => Err(Error::IndexOutOfRange { index: *i, n: width }),
            ColumnSelector::Name(name) if name == "last" => Ok(width - 1),
            ColumnSelector::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::Data(format!("column {name:?} not found in header"))),
        }
    }

    fn index_hint(&self, width: usize) -> Option<usize> {
        match self {
            ColumnSelector::Index(i) => Some(*i),
            ColumnSelector::Name(n) if n == "last" => width.checked_sub(1),
            ColumnSelector::Name(_) => None,
        }
    }
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

fn is_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads a comma-separated file. A first row is treated as a header when it
/// holds a non-numeric cell outside the label column. Target and label
/// columns are removed from the feature block.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: Option<&ColumnSelector>,
    label_column: Option<&ColumnSelector>,
) -> Result<DataMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, target_column, label_column)
}

/// [`load_csv`] on in-memory text.
pub fn parse_csv(
    text: &str,
    target_column: Option<&ColumnSelector>,
    label_column: Option<&ColumnSelector>,
) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    let width = records[0].len();
    let label_hint = label_column.and_then(|c| c.index_hint(width));
    let named = |c: Option<&ColumnSelector>| matches!(c, Some(ColumnSelector::Name(n)) if n != "last");
    let has_header = named(target_column)
        || named(label_column)
        || records[0]
            .iter()
            .enumerate()
            .any(|(j, c)| Some(j) != label_hint && !is_numeric(c));
    let header = if has_header { Some(records.remove(0)) } else { None };
    if records.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    let line_offset = if has_header { 2 } else { 1 };
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Parse {
                row: r + line_offset,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
    }
    let target_idx = target_column.map(|c| c.resolve(header.as_deref(), width)).transpose()?;
    let label_idx = label_column.map(|c| c.resolve(header.as_deref(), width)).transpose()?;
    if target_idx.is_some() && target_idx == label_idx {
        return invalid("target and label columns coincide");
    }
    let feature_cols: Vec<usize> = (0..width)
        .filter(|j| Some(*j) != target_idx && Some(*j) != label_idx)
        .collect();

    let parse = |r: usize, j: usize| -> Result<f64> {
        let cell = &records[r][j];
        if cell.is_empty() {
            return Err(Error::Parse {
                row: r + line_offset,
                column: j + 1,
                message: "missing value".into(),
            });
        }
        cell.parse::<f64>().map_err(|_| Error::Parse {
            row: r + line_offset,
            column: j + 1,
            message: format!("non-numeric value {cell:?}"),
        })
    };

    let n = records.len();
    let mut values = Matrix::zeros(n, feature_cols.len());
    for r in 0..n {
        for (c, &j) in feature_cols.iter().enumerate() {
            values[(r, c)] = parse(r, j)?;
        }
    }
    let target = target_idx
        .map(|j| (0..n).map(|r| parse(r, j)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let labels = label_idx.map(|j| {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        records
            .iter()
            .map(|rec| {
                let next = ids.len();
                *ids.entry(rec[j].as_str()).or_insert(next)
            })
            .collect::<Vec<_>>()
    });
    let mut data = DataMatrix::new(values, target, labels)?;
    if let Some(h) = header {
        data.feature_names = feature_cols.iter().map(|&j| h[j].clone()).collect();
    }
    Ok(data)
}

/// Per-column location and scale, reusable on held-out data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// Population standard deviation (divides by `n`); zero marks a constant
    /// column.
    pub std: Vec<f64>,
}

impl ColumnStats {
    pub fn compute(values: &Matrix) -> Self {
        let n = values.nrows() as f64;
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std = Vec::with_capacity(values.ncols());
        for col in values.column_iter() {
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s <= 1e-12 * m.abs().max(1.0) { 0.0 } else { s });
        }
        Self { mean, std }
    }
}

/// Z-scores every column. When `stats` is given those statistics are used
/// verbatim (test-set use); otherwise they are computed from `data`.
pub fn standardize(data: &DataMatrix, stats: Option<&ColumnStats>) -> Result<(DataMatrix, ColumnStats)> {
    if data.n() == 0 {
        return invalid("cannot standardize an empty data set");
    }
    let stats = match stats {
        Some(s) if s.mean.len() == data.d() && s.std.len() == data.d() => s.clone(),
        Some(_) => return Err(Error::DimensionMismatch("stats do not match column count".into())),
        None => ColumnStats::compute(&data.values),
    };
    let mut out = data.clone();
    for (j, mut col) in out.values.column_iter_mut().enumerate() {
        let (m, s) = (stats.mean[j], stats.std[j]);
        for v in col.iter_mut() {
            *v = if s == 0.0 { 0.0 } else { (*v - m) / s };
        }
    }
    Ok((out, stats))
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: DataMatrix,
    pub test: DataMatrix,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// 50/50 random split with `ceil(n/2)` training rows. When `scores` are
/// supplied the rows are first grouped into leverage-score deciles and each
/// decile is split in half, so both sides see the same score distribution.
pub fn split_half(data: &DataMatrix, seed: u64, scores: Option<&[f64]>) -> Result<SplitResult> {
    let n = data.n();
    if n < 2 {
        return invalid(format!("split needs at least 2 rows, got {n}"));
    }
    let mut rng = seeded(seed);
    let order: Vec<usize> = match scores {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(s) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch("scores length differs from row count".into()));
            }
            let mut by_score: Vec<usize> = (0..n).collect();
            by_score.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
            let mut order = Vec::with_capacity(n);
            for decile in 0..10 {
                let lo = decile * n / 10;
                let hi = (decile + 1) * n / 10;
                let mut bin = by_score[lo..hi].to_vec();
                bin.shuffle(&mut rng);
                order.extend(bin);
            }
            order
        }
    };
    // Alternating assignment over the (per-decile shuffled) order keeps every
    // decile balanced to within one row and the totals at ceil/floor.
    let mut train_indices: Vec<usize> = order.iter().step_by(2).copied().collect();
    let mut test_indices: Vec<usize> = order.iter().skip(1).step_by(2).copied().collect();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(SplitResult {
        train: data.select_rows(&train_indices),
        test: data.select_rows(&test_indices),
        train_indices,
        test_indices,
    })
}

/// `x ~ N(0, I_d)`, `y = x₀ + offset + ε`, `ε ~ N(0, noise_sigma²)`.
pub fn generate_toy_regression(n: usize, d: usize, offset: f64, noise_sigma: f64, seed: u64) -> Result<DataMatrix> {
    if n == 0 || d == 0 {
        return invalid("toy regression needs n >= 1 and d >= 1");
    }
    if !(noise_sigma >= 0.0) {
        return invalid("noise_sigma must be non-negative");
    }
    let mut rng = seeded(seed);
    let mut values = Matrix::zeros(n, d);
    let mut target = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..d {
            values[(i, j)] = StandardNormal.sample(&mut rng);
        }
        let eps: f64 = if noise_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise_sigma * z
        } else {
            0.0
        };
        target.push(values[(i, 0)] + offset + eps);
    }
    DataMatrix::new(values, Some(target), None)
}

/// One isotropic Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub center: Vec<f64>,
    pub std: f64,
    pub count: usize,
}

/// Stacks the components in order; labels record the generating component.
pub fn generate_gaussian_clusters(specs: &[ClusterSpec], seed: u64) -> Result<DataMatrix> {
    let Some(first) = specs.first() else {
        return invalid("at least one cluster spec is required");
    };
    let d = first.center.len();
    if d == 0 || specs.iter().any(|s| s.center.len() != d) {
        return invalid("cluster centers must share a non-zero dimension");
    }
    if specs.iter().any(|s| s.count == 0 || !(s.std >= 0.0)) {
        return invalid("cluster counts must be >= 1 and std >= 0");
    }
    let n: usize = specs.iter().map(|s| s.count).sum();
    let mut rng = seeded(seed);
    let mut values = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, spec) in specs.iter().enumerate() {
        let noise = Normal::new(0.0, spec.std.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for _ in 0..spec.count {
            for j in 0..d {
                let e = if spec.std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                values[(row, j)] = spec.center[j] + e;
            }
            labels.push(c);
            row += 1;
        }
    }
    DataMatrix::new(values, None, Some(labels))
}

/// Five imbalanced bumps in the plane, the clustering toy set.
pub fn five_bumps(seed: u64) -> Result<DataMatrix> {
    let specs = [
        ([0.0, 0.0], 1.0, 600),
        ([6.0, 0.0], 0.6, 200),
        ([0.0, 6.0], 0.5, 100),
        ([-5.0, -5.0], 0.3, 30),
        ([6.0, 7.0], 0.25, 15),
    ]
    .map(|(c, std, count)| ClusterSpec {
        center: c.to_vec(),
        std,
        count,
    });
    generate_gaussian_clusters(&specs, seed)
}
