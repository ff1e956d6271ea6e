//! Landmark samplers: uniform, leverage-proportional, exact DPP and k-DPP,
//! and the greedy log-determinant targeting swap.

use rand::seq::index::{sample, sample_weighted};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{CholeskyFactor, KernelMatrix, LandmarkSet};
use crate::leverage::LeverageScores;
use crate::linalg::{self, Matrix};
use crate::rng::{seeded, weighted_index};

fn check_size(n: usize, k: usize) -> Result<()> {
    if k > n {
        return invalid(format!("cannot draw {k} landmarks from {n} points"));
    }
    Ok(())
}

pub fn sample_uniform(n: usize, k: usize, seed: u64) -> Result<LandmarkSet> {
    check_size(n, k)?;
    uniform_with(&mut seeded(seed), n, k)
}

fn uniform_with<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<LandmarkSet> {
    LandmarkSet::from_unsorted(sample(rng, n, k).into_vec(), n)
}

/// `k` distinct indices, each successive draw proportional to the scores of
/// the points not yet chosen.
pub fn sample_rls(scores: &LeverageScores, k: usize, seed: u64) -> Result<LandmarkSet> {
    let n = scores.len();
    check_size(n, k)?;
    let s = scores.scores();
    let picked = sample_weighted(&mut seeded(seed), n, |i| s[i], k)
        .map_err(|e| Error::InvalidArgument(format!("leverage sampling failed: {e}")))?;
    LandmarkSet::from_unsorted(picked.into_vec(), n)
}

/// Eigendecomposition of the L-ensemble `L = K/α`, reusable across draws.
#[derive(Debug, Clone)]
pub struct SpectralDpp {
    values: Vec<f64>,
    vectors: Matrix,
    log_values: Vec<f64>,
}

impl SpectralDpp {
    pub fn new(k: &KernelMatrix, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        let (vals, vectors) = linalg::sym_eigen_desc(k.matrix())?;
        let values: Vec<f64> = vals.iter().map(|&v| (v / alpha).max(0.0)).collect();
        let log_values = values.iter().map(|v| v.ln()).collect();
        Ok(Self {
            values,
            vectors,
            log_values,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues of `L`, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Expected sample size `Σ λ/(1+λ)`.
    pub fn expected_size(&self) -> f64 {
        self.values.iter().map(|l| l / (1.0 + l)).sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<LandmarkSet> {
        let chosen: Vec<usize> = (0..self.n())
            .filter(|&j| {
                let l = self.values[j];
                rng.random::<f64>() < l / (1.0 + l)
            })
            .collect();
        self.sample_projection(&chosen, rng)
    }

    pub fn sample_k<R: Rng>(&self, k: usize, rng: &mut R) -> Result<LandmarkSet> {
        check_size(self.n(), k)?;
        let chosen = self.select_eigenvectors(k, rng)?;
        self.sample_projection(&chosen, rng)
    }

    /// Picks `k` eigenvector indices with probability proportional to the
    /// product of their eigenvalues. Elementary symmetric polynomials are
    /// tabulated in log space: `e_l` of a few hundred kernel eigenvalues
    /// overflows `f64` long before the subset sizes of interest.
    fn select_eigenvectors<R: Rng>(&self, k: usize, rng: &mut R) -> Result<Vec<usize>> {
        let n = self.n();
        // table[l][j] = log e_l(λ_0..λ_{j-1})
        let mut table = vec![vec![f64::NEG_INFINITY; n + 1]; k + 1];
        table[0].fill(0.0);
        for l in 1..=k {
            for j in 1..=n {
                table[l][j] = log_add(table[l][j - 1], self.log_values[j - 1] + table[l - 1][j - 1]);
            }
        }
        if table[k][n] == f64::NEG_INFINITY {
            return invalid(format!("k = {k} exceeds the numerical rank of the kernel"));
        }
        let mut out = Vec::with_capacity(k);
        let mut l = k;
        for j in (1..=n).rev() {
            if l == 0 {
                break;
            }
            let p = if j == l {
                1.0
            } else {
                (self.log_values[j - 1] + table[l - 1][j - 1] - table[l][j]).exp()
            };
            if rng.random::<f64>() < p {
                out.push(j - 1);
                l -= 1;
            }
        }
        Ok(out)
    }

    /// Samples the projection DPP spanned by the chosen eigenvectors. Each
    /// step draws a row with probability proportional to its squared
    /// residual norm, then removes that row's direction (Gram–Schmidt in the
    /// eigenvector coordinates) from every residual.
    fn sample_projection<R: Rng>(&self, chosen: &[usize], rng: &mut R) -> Result<LandmarkSet> {
        let n = self.n();
        let m = chosen.len();
        let v = Matrix::from_fn(n, m, |i, c| self.vectors[(i, chosen[c])]);
        let vt = v.transpose();
        let rows = vt.as_slice();
        let row = |i: usize| &rows[i * m..(i + 1) * m];
        let mut residual: Vec<f64> = (0..n).map(|i| linalg::dot(row(i), row(i))).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut picked = Vec::with_capacity(m);
        for _ in 0..m {
            for (i, r) in residual.iter_mut().enumerate() {
                if *r < 0.0 || picked.contains(&i) {
                    *r = 0.0;
                }
            }
            let i = weighted_index(rng, &residual);
            picked.push(i);
            let mut e = row(i).to_vec();
            for b in &basis {
                let c = linalg::dot(&e, b);
                for (x, y) in e.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let norm = linalg::dot(&e, &e).sqrt();
            if norm == 0.0 {
                return Err(Error::EigenFailure);
            }
            e.iter_mut().for_each(|x| *x /= norm);
            for (j, r) in residual.iter_mut().enumerate() {
                let c = linalg::dot(row(j), &e);
                *r -= c * c;
            }
            basis.push(e);
        }
        LandmarkSet::from_unsorted(picked, n)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Exact draw from the DPP with L-ensemble `K/α`.
pub fn sample_dpp(k: &KernelMatrix, alpha: f64, seed: u64) -> Result<LandmarkSet> {
    SpectralDpp::new(k, alpha)?.sample(&mut seeded(seed))
}

/// Exact draw from the DPP with L-ensemble `K/α` conditioned on size `size`.
pub fn sample_kdpp(k: &KernelMatrix, alpha: f64, size: usize, seed: u64) -> Result<LandmarkSet> {
    check_size(k.n(), size)?;
    SpectralDpp::new(k, alpha)?.sample_k(size, &mut seeded(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    pub k: usize,
    /// Target log-determinant of `K_CC`.
    pub d_p: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl SwapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return invalid("swap subset size must be at least 1");
        }
        if !(self.epsilon > 0.0) {
            return invalid("swap tolerance epsilon must be positive");
        }
        if self.max_iter < 1 {
            return invalid("swap max_iter must be at least 1");
        }
        if !self.d_p.is_finite() {
            return invalid("swap target log-determinant must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapResult {
    pub landmarks: LandmarkSet,
    pub achieved_logdet: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Attempts at drawing a nonsingular uniform starting subset.
const INIT_ATTEMPTS: usize = 100;

/// Moves a uniform initial subset towards log-determinant `d_p` by random
/// single-point swaps. The incoming point is drawn from the complement in
/// proportion to its leverage score when the determinant must grow and to
/// one minus its score when it must shrink; the outgoing point is uniform.
/// A swap is kept when it does not increase the distance to the target.
pub fn greedy_swap(k: &KernelMatrix, scores: &LeverageScores, config: &SwapConfig) -> Result<SwapResult> {
    config.validate()?;
    let n = k.n();
    check_size(n, config.k)?;
    if scores.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} leverage scores for {n} points",
            scores.len()
        )));
    }
    let mut rng = seeded(config.seed);
    let mut factor = initial_factor(k, config.k, &mut rng)?;
    let mut d = factor.logdet();
    let target = config.d_p;
    let mut in_set = vec![false; n];
    for &i in factor.order() {
        in_set[i] = true;
    }
    let mut complement: Vec<usize> = (0..n).filter(|&i| !in_set[i]).collect();
    let ell = scores.scores();
    let mut weights = vec![0.0; complement.len()];
    let mut iterations = 0;

    while (d - target).abs() > config.epsilon && iterations < config.max_iter && !complement.is_empty() {
        iterations += 1;
        let grow = d < target;
        for (w, &i) in weights.iter_mut().zip(&complement) {
            *w = if grow { ell[i] } else { 1.0 - ell[i] };
        }
        let slot = weighted_index(&mut rng, &weights);
        let incoming = complement[slot];
        let position = rng.random_range(0..config.k);
        let Ok(candidate) = swap(k, &factor, position, incoming) else {
            continue;
        };
        let d_new = candidate.logdet();
        if (d_new - target).abs() <= (d - target).abs() {
            complement[slot] = factor.order()[position];
            factor = candidate;
            d = d_new;
        }
    }

    Ok(SwapResult {
        landmarks: LandmarkSet::from_unsorted(factor.order().to_vec(), n)?,
        achieved_logdet: d,
        iterations,
        converged: (d - target).abs() <= config.epsilon,
    })
}

fn initial_factor<R: Rng>(k: &KernelMatrix, size: usize, rng: &mut R) -> Result<CholeskyFactor> {
    let mut last = None;
    for _ in 0..INIT_ATTEMPTS {
        let set = uniform_with(rng, k.n(), size)?;
        match CholeskyFactor::of_kernel(k, set.indices()) {
            Ok(f) => return Ok(f),
            Err(e @ Error::NotPositiveDefinite { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn swap(k: &KernelMatrix, factor: &CholeskyFactor, position: usize, incoming: usize) -> Result<CholeskyFactor> {
    let reduced = factor.remove(position)?;
    let column: Vec<f64> = reduced.order().iter().map(|&j| k.get(j, incoming)).collect();
    reduced.append(&column, k.get(incoming, incoming), incoming)
}
