//! The Nyström factor `K̂ = K_C K_CC⁻¹ K_Cᵀ` and its error diagnostics.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::kernel::{cross_gram, gram, submatrix, CholeskyFactor, KernelMatrix, LandmarkSet};
use crate::linalg::{self, Matrix};
use crate::par::{map_indexed, pairwise_sum, Execution};
use crate::rng::{derive_seed, seeded};

/// Diagonal shift of `K_CC` used when measuring approximation error.
pub const ERROR_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NystromFactor {
    landmarks: LandmarkSet,
    k_cross: Matrix,
    k_cc: Matrix,
    chol_cc: CholeskyFactor,
    jitter: f64,
}

impl NystromFactor {
    fn from_cross(landmarks: LandmarkSet, k_cross: Matrix) -> Result<Self> {
        if landmarks.is_empty() {
            return invalid("a Nyström factor needs at least one landmark");
        }
        let idx = landmarks.indices();
        let k_cc = Matrix::from_fn(idx.len(), idx.len(), |a, b| k_cross[(idx[a], b)]);
        Self::from_blocks(landmarks, k_cross, k_cc)
    }

    /// Assembles a factor from `K_C` and `K_CC` directly. The landmark set
    /// only labels the columns; its indices need not address rows of `K_C`.
    pub fn from_blocks(landmarks: LandmarkSet, k_cross: Matrix, k_cc: Matrix) -> Result<Self> {
        let k = landmarks.len();
        if k == 0 {
            return invalid("a Nyström factor needs at least one landmark");
        }
        if k_cross.ncols() != k || k_cc.shape() != (k, k) {
            return Err(Error::DimensionMismatch(format!(
                "blocks {:?} and {:?} do not match {k} landmarks",
                k_cross.shape(),
                k_cc.shape()
            )));
        }
        let chol_cc = CholeskyFactor::from_parts(linalg::cholesky_upper(&k_cc)?, landmarks.indices().to_vec());
        Ok(Self {
            landmarks,
            k_cross,
            k_cc,
            chol_cc,
            jitter: ERROR_JITTER,
        })
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }

    /// `K_C`, `n × k`.
    pub fn k_cross(&self) -> &Matrix {
        &self.k_cross
    }

    pub fn chol_cc(&self) -> &CholeskyFactor {
        &self.chol_cc
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n(&self) -> usize {
        self.k_cross.nrows()
    }

    pub fn k(&self) -> usize {
        self.landmarks.len()
    }

    pub fn k_cc(&self) -> &Matrix {
        &self.k_cc
    }

    /// `F = K_C R⁻¹`, so that `K̂ = F Fᵀ`.
    pub fn features(&self) -> Matrix {
        whitened(&self.k_cross, self.chol_cc.r())
    }

    /// Dense `K̂`.
    pub fn approximation(&self) -> Matrix {
        let f = self.features();
        &f * f.transpose()
    }

    /// Features built against `K_CC + jitter·I`.
    fn jittered_features(&self) -> Result<Matrix> {
        let mut kcc = self.k_cc.clone();
        for i in 0..kcc.nrows() {
            kcc[(i, i)] += self.jitter;
        }
        let r = linalg::cholesky_upper(&kcc)?;
        Ok(whitened(&self.k_cross, &r))
    }
}

fn whitened(k_cross: &Matrix, r: &Matrix) -> Matrix {
    let mut t = k_cross.transpose();
    linalg::solve_upper_transpose_mat(r, &mut t);
    t.transpose()
}

pub fn build(k: &KernelMatrix, landmarks: &LandmarkSet) -> Result<NystromFactor> {
    if landmarks.is_empty() {
        return invalid("a Nyström factor needs at least one landmark");
    }
    if let Some(&last) = landmarks.indices().last() {
        if last >= k.n() {
            return Err(Error::IndexOutOfRange { index: last, n: k.n() });
        }
    }
    let k_cross = Matrix::from_fn(k.n(), landmarks.len(), |i, j| k.get(i, landmarks.indices()[j]));
    NystromFactor::from_cross(landmarks.clone(), k_cross)
}

/// Builds the factor from raw data without forming the `n × n` Gram matrix.
pub fn build_from_data(data: &DataMatrix, landmarks: &LandmarkSet, sigma: f64) -> Result<NystromFactor> {
    if landmarks.is_empty() {
        return invalid("a Nyström factor needs at least one landmark");
    }
    let k_cross = cross_gram(data, landmarks, sigma)?;
    NystromFactor::from_cross(landmarks.clone(), k_cross)
}

/// `‖K − K̂‖_F / ‖K‖_F` with `K̂` formed from `K_CC + 10⁻¹²·I`.
pub fn frobenius_rel_error(k: &KernelMatrix, factor: &NystromFactor) -> Result<f64> {
    if k.n() != factor.n() {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} rows, factor {}",
            k.n(),
            factor.n()
        )));
    }
    let f = factor.jittered_features()?;
    let diff = k.matrix() - &f * f.transpose();
    Ok(diff.norm() / k.matrix().norm())
}

/// Estimates `‖K − K̂‖_F` from `n_blocks` random principal blocks of size
/// `block_size`, drawn independently of each other. Each block yields an
/// unbiased estimate of the squared norm by rescaling its diagonal and
/// off-diagonal sums to the full matrix; the estimates are averaged before
/// taking the square root. A single block covering all points is exact.
pub fn frobenius_error_sampled(
    data: &DataMatrix,
    sigma: f64,
    factor: &NystromFactor,
    n_blocks: usize,
    block_size: usize,
    seed: u64,
) -> Result<f64> {
    frobenius_error_sampled_with(data, sigma, factor, n_blocks, block_size, seed, Execution::default())
}

pub fn frobenius_error_sampled_with(
    data: &DataMatrix,
    sigma: f64,
    factor: &NystromFactor,
    n_blocks: usize,
    block_size: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    let n = data.n();
    if factor.n() != n {
        return Err(Error::DimensionMismatch(format!("data has {n} rows, factor {}", factor.n())));
    }
    if n_blocks < 1 || block_size < 1 || block_size > n {
        return invalid(format!("need 1 <= block_size <= {n} and at least one block"));
    }
    let f = factor.jittered_features()?;
    let b = block_size as f64;
    let nf = n as f64;
    let diag_scale = nf / b;
    let off_scale = if block_size > 1 { nf * (nf - 1.0) / (b * (b - 1.0)) } else { 0.0 };
    let estimates = map_indexed(exec, n_blocks, |t| -> Result<f64> {
        let mut idx = sample(&mut seeded(derive_seed(seed, t as u64)), n, block_size).into_vec();
        idx.sort_unstable();
        let kb = gram(&data.select_rows(&idx), sigma)?;
        let fb = f.select_rows(&idx);
        let diff = kb.matrix() - &fb * fb.transpose();
        let total = diff.norm_squared();
        let diag: f64 = diff.diagonal().iter().map(|v| v * v).sum();
        Ok(diag_scale * diag + off_scale * (total - diag))
    });
    let estimates: Vec<f64> = estimates.into_iter().collect::<Result<_>>()?;
    Ok((pairwise_sum(&estimates) / n_blocks as f64).max(0.0).sqrt())
}

/// Spectral summary of `K_CC` plus the approximation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub logdet: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub frob_rel_error: f64,
}

pub fn diagnostics(k: &KernelMatrix, landmarks: &LandmarkSet) -> Result<Diagnostics> {
    let factor = build(k, landmarks)?;
    let kcc = submatrix(k, landmarks)?;
    let ev = linalg::sym_eigenvalues_desc(&kcc)?;
    let (lambda_max, lambda_min) = (ev[0], *ev.last().expect("non-empty landmark set"));
    Ok(Diagnostics {
        logdet: factor.chol_cc().logdet(),
        lambda_min,
        lambda_max,
        kappa: if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY },
        frob_rel_error: frobenius_rel_error(k, &factor)?,
    })
}
