//! Marginal kernel, ridge leverage scores and effective dimension, exact and
//! recursive.

use rand::seq::index::sample_weighted;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::kernel::{cross_kernel, gram, KernelMatrix};
use crate::linalg::{self, Matrix};
use crate::par::Execution;
use crate::rng::seeded;

/// `P = K (K + αI)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalKernel {
    p: Matrix,
    alpha: f64,
}

impl MarginalKernel {
    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.p.diagonal().iter().copied().collect()
    }
}

/// Per-point ridge leverage scores at ridge `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    scores: Vec<f64>,
    alpha: f64,
    exact: bool,
}

impl LeverageScores {
    pub fn new(scores: Vec<f64>, alpha: f64, exact: bool) -> Result<Self> {
        if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !(**s > 0.0 && **s < 1.0)) {
            return invalid(format!("leverage score {i} is {s}, outside (0, 1)"));
        }
        Ok(Self { scores, alpha, exact })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn effective_dimension(&self) -> f64 {
        effective_dimension(self)
    }

    /// Scores at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.scores[i]).collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    Ok(())
}

fn shifted_factor(k: &Matrix, alpha: f64) -> Result<Matrix> {
    let mut a = k.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += alpha;
    }
    linalg::cholesky_upper(&a)
}

/// Clamps into the open unit interval.
fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
}

pub fn marginal_kernel(k: &KernelMatrix, alpha: f64) -> Result<MarginalKernel> {
    check_alpha(alpha)?;
    let r = shifted_factor(k.matrix(), alpha)?;
    let mut p = k.matrix().clone();
    linalg::solve_upper_transpose_mat(&r, &mut p);
    linalg::solve_upper_mat(&r, &mut p);
    linalg::symmetrize(&mut p);
    Ok(MarginalKernel { p, alpha })
}

/// `ℓ_i = P_ii`, via `P = I − α (K + αI)⁻¹`.
pub fn rls_exact(k: &KernelMatrix, alpha: f64) -> Result<LeverageScores> {
    check_alpha(alpha)?;
    let r = shifted_factor(k.matrix(), alpha)?;
    let scores = linalg::inverse_diagonal(&r)
        .into_iter()
        .map(|d| open_unit(1.0 - alpha * d))
        .collect();
    Ok(LeverageScores {
        scores,
        alpha,
        exact: true,
    })
}

pub fn effective_dimension(scores: &LeverageScores) -> f64 {
    crate::par::pairwise_sum(&scores.scores)
}

/// Integer subset size matching an effective dimension: `max(1, round(d))`.
pub fn subset_size(d_eff: f64) -> usize {
    (d_eff.round() as usize).max(1)
}

/// Tuning of [`rls_recursive_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrlsOptions {
    /// Largest active set scored exactly.
    pub budget: usize,
    /// Sketch size as a multiple of the estimated effective dimension.
    pub oversample: f64,
    pub seed: u64,
}

impl RrlsOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            oversample: 2.0,
            seed,
        }
    }
}

/// Approximate leverage scores without forming the full Gram matrix.
pub fn rls_recursive(data: &DataMatrix, sigma: f64, alpha: f64, n_rrls: usize, seed: u64) -> Result<LeverageScores> {
    rls_recursive_with(data, sigma, alpha, &RrlsOptions::new(n_rrls, seed))
}

/// Recursive scheme: score a uniform half of the active set (recursively, or
/// exactly once it fits the budget), draw a sketch from that half
/// proportionally to its scores, then score every active point against the
/// sketch. The ridge scales with the active set size so that every level
/// targets the same regularization per point.
pub fn rls_recursive_with(data: &DataMatrix, sigma: f64, alpha: f64, opts: &RrlsOptions) -> Result<LeverageScores> {
    check_alpha(alpha)?;
    if opts.budget < 1 {
        return invalid("RRLS budget must be at least 1");
    }
    if !(opts.oversample > 0.0) {
        return invalid("RRLS oversampling factor must be positive");
    }
    let n = data.n();
    if n <= opts.budget {
        return rls_exact(&gram(data, sigma)?, alpha);
    }
    let mut rng = seeded(opts.seed);
    let idx: Vec<usize> = (0..n).collect();
    let scores = recurse(data, &idx, sigma, alpha / n as f64, opts, &mut rng)?;
    Ok(LeverageScores {
        scores,
        alpha,
        exact: false,
    })
}

fn recurse<R: Rng>(
    data: &DataMatrix,
    idx: &[usize],
    sigma: f64,
    lambda: f64,
    opts: &RrlsOptions,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = idx.len();
    let alpha = lambda * m as f64;
    if m <= opts.budget {
        let k = gram(&data.select_rows(idx), sigma)?;
        return Ok(rls_exact(&k, alpha)?.scores);
    }
    let half_len = m.div_ceil(2);
    let mut half: Vec<usize> = rand::seq::index::sample(rng, m, half_len).into_iter().map(|p| idx[p]).collect();
    half.sort_unstable();
    let half_scores = recurse(data, &half, sigma, lambda, opts, rng)?;
    let d_half: f64 = half_scores.iter().sum();
    let size = ((opts.oversample * d_half).ceil() as usize).clamp(1, half.len());
    let picked = sample_weighted(rng, half.len(), |p| half_scores[p], size)
        .map_err(|e| Error::InvalidArgument(format!("sketch sampling failed: {e}")))?;
    let mut sketch: Vec<(usize, f64)> = picked
        .into_iter()
        .map(|p| (half[p], (size as f64 * half_scores[p] / d_half).min(1.0)))
        .collect();
    sketch.sort_unstable_by_key(|&(i, _)| i);
    score_against_sketch(data, idx, &sketch, sigma, alpha)
}

/// `ℓ̂_i = (K_ii − k_iS (K_SS + α diag(p_S))⁻¹ k_Si) / α`, clipped into
/// (0, 1). Scaling the ridge by the sketch inclusion probabilities `p_S`
/// reweights the sketch so that it stands in for the points it summarizes.
fn score_against_sketch(
    data: &DataMatrix,
    idx: &[usize],
    sketch: &[(usize, f64)],
    sigma: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    let points: Vec<usize> = sketch.iter().map(|&(i, _)| i).collect();
    let s_pts = data.select_rows(&points);
    let mut kss = gram(&s_pts, sigma)?.into_matrix();
    for (j, &(_, p)) in sketch.iter().enumerate() {
        kss[(j, j)] += alpha * p;
    }
    let r = linalg::cholesky_upper(&kss)?;
    let active = data.select_rows(idx);
    // columns of k_S· for the active points, whitened by R⁻ᵀ
    let mut w = cross_kernel(s_pts.values(), active.values(), sigma, Execution::default())?;
    linalg::solve_upper_transpose_mat(&r, &mut w);
    Ok((0..idx.len())
        .map(|j| {
            let q = linalg::dot(w.column(j).as_slice(), w.column(j).as_slice());
            open_unit((1.0 - q) / alpha)
        })
        .collect())
}
