//! Regression error metrics and their stratification by leverage score.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{quantile_sorted, quantile as quantile_of};

/// Targets with magnitude at or below this are skipped by [`mape`].
pub const ZERO_TARGET: f64 = 1e-12;

fn check_pair(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets and {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_pair(y_true, y_pred)?;
    let (sum, count) = y_true
        .iter()
        .zip(y_pred)
        .filter(|(y, _)| y.abs() > ZERO_TARGET)
        .fold((0.0, 0usize), |(s, c), (y, p)| (s + ((y - p) / y).abs(), c + 1));
    if count == 0 {
        return invalid("MAPE undefined: every target is zero");
    }
    Ok(100.0 * sum / count as f64)
}

/// Symmetric MAPE, in percent; bounded by 200.
pub fn smape(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_pair(y_true, y_pred)?;
    let (sum, count) = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p, y.abs() + p.abs()))
        .filter(|&(_, den)| den > ZERO_TARGET)
        .fold((0.0, 0usize), |(s, c), (diff, den)| (s + 2.0 * diff.abs() / den, c + 1));
    if count == 0 {
        return invalid("SMAPE undefined: every target and prediction is zero");
    }
    Ok(100.0 * sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Mape,
    Smape,
}

impl Metric {
    pub fn eval(self, y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
        match self {
            Metric::Mape => mape(y_true, y_pred),
            Metric::Smape => smape(y_true, y_pred),
        }
    }
}

/// Bulk and tail index sets; bulk holds the scores at or below the quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    pub threshold: f64,
    pub bulk: Vec<usize>,
    pub tail: Vec<usize>,
}

pub fn stratify(scores: &[f64], quantile: f64) -> Result<Stratification> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return invalid(format!("quantile must lie in (0, 1), got {quantile}"));
    }
    let threshold = quantile_of(scores, quantile)?;
    let (bulk, tail) = (0..scores.len()).partition(|&i| scores[i] <= threshold);
    Ok(Stratification { threshold, bulk, tail })
}

/// Equal-width histogram of the scores with the metric inside each bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedError {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `None` for bins with no usable point.
    pub metric: Vec<Option<f64>>,
}

pub fn binned_error(scores: &[f64], y_true: &[f64], y_pred: &[f64], n_bins: usize) -> Result<BinnedError> {
    binned_metric(scores, y_true, y_pred, n_bins, Metric::Mape)
}

pub fn binned_metric(
    scores: &[f64],
    y_true: &[f64],
    y_pred: &[f64],
    n_bins: usize,
    metric: Metric,
) -> Result<BinnedError> {
    check_pair(y_true, y_pred)?;
    check_pair(scores, y_true)?;
    if n_bins < 1 {
        return invalid("need at least one bin");
    }
    if scores.is_empty() {
        return invalid("no points to bin");
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins)
        .map(|b| if b == n_bins { hi } else { lo + b as f64 * width })
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (i, &s) in scores.iter().enumerate() {
        let b = if width > 0.0 {
            (((s - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        members[b].push(i);
    }
    let counts = members.iter().map(Vec::len).collect();
    let metric = members
        .iter()
        .map(|m| {
            let yt: Vec<f64> = m.iter().map(|&i| y_true[i]).collect();
            let yp: Vec<f64> = m.iter().map(|&i| y_pred[i]).collect();
            metric.eval(&yt, &yp).ok()
        })
        .collect();
    Ok(BinnedError { edges, counts, metric })
}

/// Overall, bulk and tail error of one prediction run plus its histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub metric: Metric,
    pub quantile: f64,
    pub threshold: f64,
    pub overall_metric: f64,
    pub bulk_metric: Option<f64>,
    pub tail_metric: Option<f64>,
    pub bulk_count: usize,
    pub tail_count: usize,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<usize>,
    pub bin_metric: Vec<Option<f64>>,
}

/// Scalar columns of a [`StratifiedReport`], for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedRow {
    pub quantile: f64,
    pub threshold: f64,
    pub overall_metric: f64,
    pub bulk_metric: Option<f64>,
    pub tail_metric: Option<f64>,
    pub bulk_count: usize,
    pub tail_count: usize,
}

impl StratifiedReport {
    pub fn row(&self) -> StratifiedRow {
        StratifiedRow {
            quantile: self.quantile,
            threshold: self.threshold,
            overall_metric: self.overall_metric,
            bulk_metric: self.bulk_metric,
            tail_metric: self.tail_metric,
            bulk_count: self.bulk_count,
            tail_count: self.tail_count,
        }
    }
}

pub fn stratified_report(
    scores: &[f64],
    y_true: &[f64],
    y_pred: &[f64],
    quantile: f64,
    n_bins: usize,
    metric: Metric,
) -> Result<StratifiedReport> {
    check_pair(scores, y_true)?;
    let strat = stratify(scores, quantile)?;
    let subset = |idx: &[usize]| -> Option<f64> {
        let yt: Vec<f64> = idx.iter().map(|&i| y_true[i]).collect();
        let yp: Vec<f64> = idx.iter().map(|&i| y_pred[i]).collect();
        metric.eval(&yt, &yp).ok()
    };
    let bins = binned_metric(scores, y_true, y_pred, n_bins, metric)?;
    Ok(StratifiedReport {
        metric,
        quantile,
        threshold: strat.threshold,
        overall_metric: metric.eval(y_true, y_pred)?,
        bulk_metric: subset(&strat.bulk),
        tail_metric: subset(&strat.tail),
        bulk_count: strat.bulk.len(),
        tail_count: strat.tail.len(),
        bin_edges: bins.edges,
        bin_counts: bins.counts,
        bin_metric: bins.metric,
    })
}

/// Mean and 5%/95% quantiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return invalid("cannot summarize an empty sample");
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: values.len(),
        mean: crate::stats::mean(values),
        q05: quantile_sorted(&sorted, 0.05),
        q95: quantile_sorted(&sorted, 0.95),
    })
}
