//! Kernel PCA on a Nyström factor.

use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelMatrix, LandmarkSet};
use crate::linalg::{self, Matrix};
use crate::nystrom::NystromFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    eigvals: Vec<f64>,
    eigvecs: Matrix,
    c: usize,
    n: usize,
    landmarks: LandmarkSet,
}

impl KpcaModel {
    /// The `c` retained eigenvalues of `M/n`, descending.
    pub fn eigvals_c(&self) -> &[f64] {
        &self.eigvals[..self.c]
    }

    /// All `k` eigenvalues of `M/n`, descending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Retained eigenvectors of `M`, one per column (`k × c`).
    pub fn eigvecs(&self) -> &Matrix {
        &self.eigvecs
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }
}

/// Eigendecomposition of `M/n` with `M = R⁻ᵀ K_Cᵀ K_C R⁻¹`, which shares its
/// spectrum with `K_CC^{-1/2} K_Cᵀ K_C K_CC^{-1/2}`.
pub fn fit(factor: &NystromFactor, c: usize) -> Result<KpcaModel> {
    let k = factor.k();
    if c < 1 || c > k {
        return invalid(format!("component count {c} outside 1..={k}"));
    }
    let n = factor.n();
    let f = factor.features();
    let m = f.tr_mul(&f) / n as f64;
    let (vals, vecs) = linalg::sym_eigen_desc(&m)?;
    Ok(KpcaModel {
        eigvals: vals.iter().map(|v| v.max(0.0)).collect(),
        eigvecs: vecs.columns(0, c).into_owned(),
        c,
        n,
        landmarks: factor.landmarks().clone(),
    })
}

/// `Tr(K)/n − Σ_{ℓ≤c} λ̂_{ℓ,C}`: the eigenvalue mass of `K/n` left out by the
/// approximate components.
pub fn reconstruction_error(k: &KernelMatrix, model: &KpcaModel) -> Result<f64> {
    if k.n() != model.n {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} rows, model was fit on {}",
            k.n(),
            model.n
        )));
    }
    let total = k.matrix().trace() / k.n() as f64;
    Ok(total - model.eigvals_c().iter().sum::<f64>())
}

/// Components retained when using half of the landmarks: `floor(k/2)`, at
/// least one.
pub fn half_components(k: usize) -> usize {
    (k / 2).max(1)
}
