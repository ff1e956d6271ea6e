//! Kernel k-means on Nyström features, and normalized mutual information.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::nystrom::NystromFactor;
use crate::par::{map_indexed, Execution};
use crate::rng::{derive_seed, seeded, weighted_index};

/// `n × s` embedding `F V_s`, with `F = K_C R⁻¹` and `V_s` the top `s`
/// eigenvectors of `FᵀF`. Its Gram matrix is the best rank-`s` part of `K̂`.
pub fn nystrom_features(factor: &NystromFactor, s: usize) -> Result<Matrix> {
    if s < 1 || s > factor.k() {
        return invalid(format!("embedding dimension {s} outside 1..={}", factor.k()));
    }
    let f = factor.features();
    let (_, vecs) = linalg::sym_eigen_desc(&f.tr_mul(&f))?;
    Ok(f * vecs.columns(0, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KmeansOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub nmi_vs_truth: Option<f64>,
}

impl ClusterResult {
    pub fn with_truth(mut self, truth: &[usize]) -> Result<Self> {
        self.nmi_vs_truth = Some(nmi(&self.assignments, truth)?);
        Ok(self)
    }

    /// `index,assignment` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "assignment"])?;
        for (i, a) in self.assignments.iter().enumerate() {
            w.write_record([i.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn kmeans(features: &Matrix, s: usize, restarts: usize, max_iter: usize, seed: u64) -> Result<ClusterResult> {
    kmeans_with(
        features,
        s,
        &KmeansOptions {
            restarts,
            max_iter,
            seed,
        },
        Execution::default(),
    )
}

/// Lloyd iterations from k-means++ seeds; the restart with the lowest
/// inertia wins, the earliest restart on ties.
pub fn kmeans_with(features: &Matrix, s: usize, opts: &KmeansOptions, exec: Execution) -> Result<ClusterResult> {
    let n = features.nrows();
    if s < 1 || s > n {
        return invalid(format!("cannot form {s} clusters from {n} points"));
    }
    if opts.restarts < 1 || opts.max_iter < 1 {
        return invalid("k-means needs at least one restart and one iteration");
    }
    let points = features.transpose();
    let runs = map_indexed(exec, opts.restarts, |r| {
        lloyd(&points, s, opts.max_iter, derive_seed(opts.seed, r as u64)).0
    });
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One k-means run on the columns of `points` (`d × n`). Also returns the
/// inertia after every assignment step.
fn lloyd(points: &Matrix, s: usize, max_iter: usize, seed: u64) -> (ClusterResult, Vec<f64>) {
    let d = points.nrows();
    let n = points.ncols();
    let p = |i: usize| &points.as_slice()[i * d..(i + 1) * d];
    let mut rng = seeded(seed);

    // k-means++
    let mut centers: Vec<Vec<f64>> = vec![p(rng.random_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(p(i), &centers[0])).collect();
    while centers.len() < s {
        let c = p(weighted_index(&mut rng, &nearest)).to_vec();
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(sq_dist(p(i), &c));
        }
        centers.push(c);
    }

    let mut assign = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let (best, bd) = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, sq_dist(p(i), ctr)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
            dist[i] = bd;
        }
        history.push(dist.iter().sum());
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; s];
        let mut counts = vec![0usize; s];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (acc, v) in sums[assign[i]].iter_mut().zip(p(i)) {
                *acc += v;
            }
        }
        for c in 0..s {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|v| v / counts[c] as f64).collect();
            } else {
                // reseed at the point farthest from its centroid
                let far = (0..n).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
                centers[c] = p(far).to_vec();
                dist[far] = 0.0;
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(p(i), &centers[assign[i]])).sum();
    let result = ClusterResult {
        assignments: assign,
        inertia,
        nmi_vs_truth: None,
    };
    (result, history)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by `√(H(A)·H(B))`. Identical partitions
/// score 1 even when both are trivial; a trivial partition against a
/// non-trivial one scores 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} labels", a.len(), b.len())));
    }
    if a.is_empty() {
        return invalid("NMI of empty labelings");
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ha == 0.0 || hb == 0.0 {
        let same = ca.len() == cb.len() && joint.len() == ca.len();
        return Ok(if same { 1.0 } else { 0.0 });
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            pxy * (pxy * n * n / (ca[&x] as f64 * cb[&y] as f64)).ln()
        })
        .sum();
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_gaussian_clusters, ClusterSpec};
    use crate::kernel::{gram, LandmarkSet};
    use crate::nystrom::build;
    use approx::assert_relative_eq;

    fn blobs(seed: u64) -> crate::datasets::DataMatrix {
        generate_gaussian_clusters(
            &[
                ClusterSpec {
                    center: vec![0.0, 0.0],
                    std: 0.1,
                    count: 30,
                },
                ClusterSpec {
                    center: vec![10.0, 10.0],
                    std: 0.1,
                    count: 20,
                },
            ],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn full_features_factor_the_kernel() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let data = crate::datasets::DataMatrix::from_rows(&rows).unwrap();
        let k = gram(&data, 1.0).unwrap();
        let n = data.n();
        let f = build(&k, &LandmarkSet::full(n)).unwrap();
        let e = nystrom_features(&f, n).unwrap();
        assert_eq!(e.ncols(), n);
        assert_relative_eq!(&e * e.transpose(), *k.matrix(), epsilon = 1e-6);
    }

    #[test]
    fn embedding_is_best_rank_s_part() {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let k = gram(&crate::datasets::DataMatrix::from_rows(&rows).unwrap(), 1.0).unwrap();
        let f = build(&k, &LandmarkSet::new(vec![0, 5, 10, 15, 20], 25).unwrap()).unwrap();
        let e = nystrom_features(&f, 3).unwrap();
        assert_eq!(e.ncols(), 3);
        let (vals, vecs) = linalg::sym_eigen_desc(&f.approximation()).unwrap();
        let top = vecs.columns(0, 3);
        let best = &top * Matrix::from_diagonal(&vals.rows(0, 3).into_owned()) * top.transpose();
        assert!((&e * e.transpose() - best).norm() <= 1e-6);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let data = blobs(2);
        let r = kmeans(data.values(), 2, 10, 300, 3).unwrap();
        assert_eq!(nmi(&r.assignments, data.labels().unwrap()).unwrap(), 1.0);
        assert_eq!(r, kmeans(data.values(), 2, 10, 300, 3).unwrap());
        let serial = kmeans_with(data.values(), 2, &KmeansOptions::new(3), Execution::Serial).unwrap();
        assert_eq!(r, serial);
    }

    #[test]
    fn one_cluster_per_point_has_zero_inertia() {
        let data = blobs(4);
        let r = kmeans(data.values(), data.n(), 2, 50, 0).unwrap();
        assert!(r.inertia.abs() < 1e-20);
        assert!(kmeans(data.values(), data.n() + 1, 2, 50, 0).is_err());
    }

    #[test]
    fn inertia_never_increases() {
        let data = crate::datasets::five_bumps(5).unwrap();
        let (_, history) = lloyd(&data.values().transpose(), 5, 300, 9);
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn nmi_conventions() {
        assert_eq!(nmi(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
        let a = [0, 0, 1, 1, 2, 2];
        let b = [0, 1, 0, 1, 1, 1];
        assert_relative_eq!(nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn independent_labelings_have_small_nmi() {
        let a: Vec<usize> = (0..10_000).map(|i| i % 2).collect();
        let b: Vec<usize> = (0..10_000).map(|i| (i / 2) % 2).collect();
        assert!(nmi(&a, &b).unwrap() < 0.05);
    }
}
