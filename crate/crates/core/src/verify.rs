//! Exhaustive DPP enumeration on small kernels and exact checks of the
//! expectation identities and bounds satisfied by DPP landmark sets.
//!
//! Every subset `C ⊆ [n]` is visited with its probability
//! `det(L_CC) / det(I + L)`, `L = K/α`. Expectations over the empty set use
//! the zero matrix for `C K_CC⁻¹ Cᵀ` and for the Nyström approximation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::kernel::{gram, KernelMatrix};
use crate::leverage::marginal_kernel;
use crate::linalg::{self, Matrix, Vector};
use crate::par::{map_indexed, pairwise_sum, Execution};
use crate::rng::{derive_seed, seeded};
use crate::sampling::SpectralDpp;

/// Largest `n` accepted by [`enumerate_dpp`].
pub const MAX_ENUMERATION: usize = 14;

#[derive(Debug, Clone)]
pub struct DppEnumeration {
    kernel: Matrix,
    alpha: f64,
    probs: Vec<f64>,
    exec: Execution,
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

impl DppEnumeration {
    pub fn n(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Probability of each subset, indexed by its bit mask.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, subset: &[usize]) -> f64 {
        self.probs[subset.iter().fold(0, |m, &i| m | 1 << i)]
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs)
    }

    /// `Pr(i ∈ C)` for every `i`.
    pub fn inclusion_marginals(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.expectation_scalar(|c| if c.contains(&i) { 1.0 } else { 0.0 }))
            .collect()
    }

    /// `Pr({i, j} ⊆ C)`.
    pub fn pair_inclusion(&self, i: usize, j: usize) -> f64 {
        self.expectation_scalar(|c| if c.contains(&i) && c.contains(&j) { 1.0 } else { 0.0 })
    }

    /// `Σ_C Pr(C) f(C)` with pairwise summation in mask order.
    pub fn expectation_scalar<F: Fn(&[usize]) -> f64 + Sync + Send>(&self, f: F) -> f64 {
        let n = self.n();
        let terms = map_indexed(self.exec, self.probs.len(), |mask| {
            let p = self.probs[mask];
            if p == 0.0 {
                0.0
            } else {
                p * f(&members(mask, n))
            }
        });
        pairwise_sum(&terms)
    }

    /// Entrywise `Σ_C Pr(C) F(C)` for `n × n` matrix-valued `F`.
    pub fn expectation<F: Fn(&[usize]) -> Matrix + Sync + Send>(&self, f: F) -> Matrix {
        let n = self.n();
        let terms = map_indexed(self.exec, self.probs.len(), |mask| {
            let p = self.probs[mask];
            if p == 0.0 {
                Matrix::zeros(n, n)
            } else {
                f(&members(mask, n)) * p
            }
        });
        pairwise_matrix_sum(&terms, n)
    }
}

fn pairwise_matrix_sum(terms: &[Matrix], n: usize) -> Matrix {
    match terms.len() {
        0 => Matrix::zeros(n, n),
        1 => terms[0].clone(),
        len => {
            let mid = len / 2;
            pairwise_matrix_sum(&terms[..mid], n) + pairwise_matrix_sum(&terms[mid..], n)
        }
    }
}

pub fn enumerate_dpp(k: &KernelMatrix, alpha: f64) -> Result<DppEnumeration> {
    enumerate_dpp_with(k, alpha, Execution::default())
}

pub fn enumerate_dpp_with(k: &KernelMatrix, alpha: f64, exec: Execution) -> Result<DppEnumeration> {
    let n = k.n();
    if n > MAX_ENUMERATION {
        return invalid(format!("enumeration is limited to n <= {MAX_ENUMERATION}, got {n}"));
    }
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let l = k.matrix() / alpha;
    let shifted = &l + Matrix::identity(n, n);
    let log_norm = crate::kernel::cholesky(&shifted)?.logdet();
    let probs = map_indexed(exec, 1 << n, |mask| {
        let c = members(mask, n);
        let sub = crate::kernel::select(&l, &c);
        match linalg::cholesky_upper(&sub) {
            Ok(r) => (2.0 * (0..c.len()).map(|i| r[(i, i)].ln()).sum::<f64>() - log_norm).exp(),
            Err(_) => 0.0,
        }
    });
    Ok(DppEnumeration {
        kernel: k.matrix().clone(),
        alpha,
        probs,
        exec,
    })
}

/// `R⁻ᵀ`-whitened columns: returns `M_{:,C} K_CC⁻¹ M_{:,C}ᵀ` for a matrix `m`
/// whose columns are indexed like `K`.
fn sandwich(k: &Matrix, m: &Matrix, c: &[usize]) -> Matrix {
    let n = m.nrows();
    if c.is_empty() {
        return Matrix::zeros(n, n);
    }
    let r = linalg::cholesky_upper(&crate::kernel::select(k, c)).expect("positive subset probability");
    let mut t = Matrix::from_fn(c.len(), n, |a, i| m[(i, c[a])]);
    linalg::solve_upper_transpose_mat(&r, &mut t);
    t.tr_mul(&t)
}

/// `C K_CC⁻¹ Cᵀ`, embedded in `n × n`.
fn embedded_inverse(k: &Matrix, c: &[usize]) -> Matrix {
    let n = k.nrows();
    let mut out = Matrix::zeros(n, n);
    if c.is_empty() {
        return out;
    }
    let r = linalg::cholesky_upper(&crate::kernel::select(k, c)).expect("positive subset probability");
    let inv = {
        let ri = linalg::upper_inverse(&r);
        &ri * ri.transpose()
    };
    for (a, &i) in c.iter().enumerate() {
        for (b, &j) in c.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    out
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

fn shifted_inverse(k: &Matrix, alpha: f64) -> Result<Matrix> {
    let n = k.nrows();
    let r = linalg::cholesky_upper(&(k + Matrix::identity(n, n) * alpha))?;
    let ri = linalg::upper_inverse(&r);
    Ok(&ri * ri.transpose())
}

/// Expected inverse and expected submatrix of a DPP landmark set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitRegularization {
    /// `max |E[C K_CC⁻¹ Cᵀ] − (K + αI)⁻¹|`.
    pub inverse_deviation: f64,
    /// `max |E[C K_CC Cᵀ] − P₂ ∘ K|`, `P₂ = Diag(ℓ) + ℓℓᵀ − P∘P`.
    pub product_deviation: f64,
    /// `λmax(E[C K_CC Cᵀ])`.
    pub lambda_max: f64,
    /// `‖ℓ‖_∞ + ‖ℓ‖₂²`.
    pub lambda_bound: f64,
}

pub fn check_implicit_regularization(k: &KernelMatrix, alpha: f64) -> Result<ImplicitRegularization> {
    let e = enumerate_dpp(k, alpha)?;
    let km = k.matrix();
    let n = k.n();
    let exp_inv = e.expectation(|c| embedded_inverse(km, c));
    let exp_sub = e.expectation(|c| {
        let mut out = Matrix::zeros(n, n);
        for &i in c {
            for &j in c {
                out[(i, j)] = km[(i, j)];
            }
        }
        out
    });
    let p = marginal_kernel(k, alpha)?.matrix().clone();
    let ell = p.diagonal();
    let p2 = Matrix::from_diagonal(&ell) + &ell * ell.transpose() - p.component_mul(&p);
    let lambda_max = linalg::sym_eigenvalues_desc(&exp_sub)?[0];
    Ok(ImplicitRegularization {
        inverse_deviation: max_abs_diff(&exp_inv, &shifted_inverse(km, alpha)?),
        product_deviation: max_abs_diff(&exp_sub, &p2.component_mul(km)),
        lambda_max,
        lambda_bound: ell.amax() + ell.norm_squared(),
    })
}

/// Expected Nyström residual and expected projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedApproximation {
    /// `max |E[K − L(K, C)] − αP|`.
    pub residual_deviation: f64,
    /// `max |E[Π_C] − P|`, `Π_C` the projector onto `range(K^{1/2} C)`.
    pub projector_deviation: f64,
    /// `|E[Tr(K − L)] − α d_eff|`.
    pub trace_deviation: f64,
}

pub fn check_expected_approximation(k: &KernelMatrix, alpha: f64) -> Result<ExpectedApproximation> {
    let e = enumerate_dpp(k, alpha)?;
    let km = k.matrix();
    let p = marginal_kernel(k, alpha)?.matrix().clone();
    let exp_l = e.expectation(|c| sandwich(km, km, c));
    let root = sqrt_psd(km)?;
    let exp_proj = e.expectation(|c| sandwich(km, &root, c));
    let residual = km - &exp_l;
    Ok(ExpectedApproximation {
        residual_deviation: max_abs_diff(&residual, &(&p * alpha)),
        projector_deviation: max_abs_diff(&exp_proj, &p),
        trace_deviation: (residual.trace() - alpha * p.trace()).abs(),
    })
}

fn sqrt_psd(a: &Matrix) -> Result<Matrix> {
    let (vals, vecs) = linalg::sym_eigen_desc(a)?;
    let d = Matrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// Leverage-weighted Monte Carlo identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageWeighting {
    /// `|E[v_Cᵀ w_C] − vᵀ Diag(ℓ) w|`.
    pub mean_deviation: f64,
    /// `|Var[v_Cᵀ w_C] − (v∘w)ᵀ (Diag(ℓ) − P∘P) (v∘w)|`.
    pub variance_deviation: f64,
    /// `max |E[K_C Diag(ℓ_C)⁻¹ K_Cᵀ] − K²|`.
    pub second_moment_deviation: f64,
}

pub fn check_leverage_weighting(k: &KernelMatrix, alpha: f64, v: &[f64], w: &[f64]) -> Result<LeverageWeighting> {
    let n = k.n();
    if v.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!("test vectors must have length {n}")));
    }
    let e = enumerate_dpp(k, alpha)?;
    let km = k.matrix();
    let p = marginal_kernel(k, alpha)?.matrix().clone();
    let ell: Vec<f64> = p.diagonal().iter().copied().collect();
    let inner = |c: &[usize]| c.iter().map(|&i| v[i] * w[i]).sum::<f64>();
    let mean = e.expectation_scalar(inner);
    let second = e.expectation_scalar(|c| inner(c).powi(2));
    let vw = Vector::from_iterator(n, (0..n).map(|i| v[i] * w[i]));
    let cov = Matrix::from_diagonal(&Vector::from_column_slice(&ell)) - p.component_mul(&p);
    let predicted_mean: f64 = (0..n).map(|i| v[i] * ell[i] * w[i]).sum();
    let predicted_var = (vw.transpose() * cov * &vw)[(0, 0)];
    let weighted = e.expectation(|c| {
        let mut out = Matrix::zeros(n, n);
        for &i in c {
            let col = km.column(i);
            out += (&col * col.transpose()) / ell[i];
        }
        out
    });
    Ok(LeverageWeighting {
        mean_deviation: (mean - predicted_mean).abs(),
        variance_deviation: (second - mean * mean - predicted_var).abs(),
        second_moment_deviation: max_abs_diff(&weighted, &(km * km)),
    })
}

/// Slacks of the two-sided projection-cost bound; both must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCost {
    pub lower_slack: f64,
    pub upper_slack: f64,
}

/// For an orthogonal projector `X` of rank `r ≥ 1` and `c = α d_eff`:
/// `Tr(K − XKX) ≤ E[Tr(L − XLX)] + c ≤ Tr(K − XKX) + min(αr, c)`.
pub fn check_projection_cost(k: &KernelMatrix, alpha: f64, x: &Matrix) -> Result<ProjectionCost> {
    let n = k.n();
    if x.shape() != (n, n) {
        return Err(Error::DimensionMismatch("projector must match the kernel size".into()));
    }
    let rank = x.trace().round();
    if rank < 1.0 || (x * x - x).amax() > 1e-8 || (x - x.transpose()).amax() > 1e-10 {
        return invalid("X must be an orthogonal projector of rank at least 1");
    }
    let e = enumerate_dpp(k, alpha)?;
    let km = k.matrix();
    let exp_l = e.expectation(|c| sandwich(km, km, c));
    let cost = |m: &Matrix| m.trace() - (x * m * x).trace();
    let c = alpha * marginal_kernel(k, alpha)?.matrix().trace();
    let middle = cost(&exp_l) + c;
    let exact = cost(km);
    Ok(ProjectionCost {
        lower_slack: middle - exact,
        upper_slack: exact + (alpha * rank).min(c) - middle,
    })
}

/// Expected square-root risk ratio of Nyström ridge regression against the
/// full-kernel bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBound {
    /// `E_C[√(R(L(K,C)) / R(K))]`.
    pub lhs: f64,
    /// `1 + α d_eff / (nγ)`.
    pub rhs: f64,
}

pub fn check_risk_bound(k: &KernelMatrix, alpha: f64, z: &[f64], gamma: f64, noise_var: f64) -> Result<RiskBound> {
    let n = k.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!("target must have length {n}")));
    }
    let km = k.matrix();
    let full = crate::krr::risk_components(km, z, gamma, noise_var)?.risk();
    if !(full > 0.0) {
        return invalid("full-kernel risk is zero; supply a non-zero target or noise");
    }
    let e = enumerate_dpp(k, alpha)?;
    let lhs = e.expectation_scalar(|c| {
        let l = sandwich(km, km, c);
        let r = crate::krr::risk_components(&l, z, gamma, noise_var).map_or(f64::NAN, |r| r.risk());
        (r / full).sqrt()
    });
    let d_eff = marginal_kernel(k, alpha)?.matrix().trace();
    Ok(RiskBound {
        lhs,
        rhs: 1.0 + alpha * d_eff / (n as f64 * gamma),
    })
}

/// Monte Carlo check of the high-probability deviation bound for
/// `w_Cᵀ K_CC⁻¹ w_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    /// `√(48 n log(5/δ)) / λmin(K)`.
    pub bound: f64,
    pub max_deviation: f64,
    pub exceedance_rate: f64,
}

pub fn check_concentration(
    k: &KernelMatrix,
    alpha: f64,
    w: &[f64],
    n_samples: usize,
    delta: f64,
    seed: u64,
) -> Result<Concentration> {
    let n = k.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch(format!("w must have length {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) || n_samples == 0 {
        return invalid("need 0 < delta < 1 and at least one sample");
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return invalid("w must be a unit vector");
    }
    let km = k.matrix();
    let wv = Vector::from_column_slice(w);
    let target = (wv.transpose() * shifted_inverse(km, alpha)? * &wv)[(0, 0)];
    let lambda_min = *linalg::sym_eigenvalues_desc(km)?.last().expect("non-empty kernel");
    let bound = (48.0 * n as f64 * (5.0 / delta).ln()).sqrt() / lambda_min;
    let dpp = SpectralDpp::new(k, alpha)?;
    let devs = map_indexed(Execution::default(), n_samples, |t| -> Result<f64> {
        let c = dpp.sample(&mut seeded(derive_seed(seed, t as u64)))?;
        let c = c.indices();
        let q = if c.is_empty() {
            0.0
        } else {
            let wc: Vec<f64> = c.iter().map(|&i| w[i]).collect();
            let r = linalg::cholesky_upper(&crate::kernel::select(km, c))?;
            let mut y = wc.clone();
            linalg::solve_upper_transpose(&r, &mut y);
            linalg::dot(&y, &y)
        };
        Ok((q - target).abs())
    });
    let devs: Vec<f64> = devs.into_iter().collect::<Result<_>>()?;
    let exceed = devs.iter().filter(|&&d| d > bound).count();
    Ok(Concentration {
        bound,
        max_deviation: devs.iter().copied().fold(0.0, f64::max),
        exceedance_rate: exceed as f64 / n_samples as f64,
    })
}

/// Gaussian kernel (`σ = 1`) of `n` uniform points in the unit cube.
pub fn random_instance(n: usize, seed: u64) -> Result<KernelMatrix> {
    let mut rng = seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    gram(&DataMatrix::from_rows(&rows)?, 1.0)
}

/// Unit vector with standard normal direction.
pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Orthogonal projector onto the span of `rank` random directions.
pub fn random_projector<R: Rng>(n: usize, rank: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(n, rank, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng));
    let q = g.qr().q();
    &q * q.transpose()
}

/// Settings of [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub instances: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub noise_var: f64,
    pub delta: f64,
    pub mc_samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            min_n: 4,
            max_n: 8,
            alphas: vec![0.1, 1.0, 10.0],
            gamma: 0.1,
            noise_var: 0.01,
            delta: 0.1,
            mc_samples: 10_000,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

/// Worst value of one check over all instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Largest deviation (identities) or largest bound violation
    /// (inequalities, negative when satisfied with room).
    pub worst: f64,
    pub limit: f64,
    pub passed: bool,
}

/// `(n, α)` of instance `i`.
pub fn suite_instance(cfg: &SuiteConfig, i: usize) -> (usize, f64) {
    let span = cfg.max_n - cfg.min_n + 1;
    (cfg.min_n + i % span, cfg.alphas[i % cfg.alphas.len()])
}

/// Runs every check on `cfg.instances` random kernels.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    if cfg.instances == 0 || cfg.alphas.is_empty() || cfg.min_n < 1 || cfg.max_n < cfg.min_n {
        return invalid("verification suite needs instances, alphas and 1 <= min_n <= max_n");
    }
    if cfg.max_n > MAX_ENUMERATION {
        return invalid(format!("verification instances are limited to n <= {MAX_ENUMERATION}"));
    }
    let mut worst = [f64::NEG_INFINITY; 12];
    for i in 0..cfg.instances {
        let (n, alpha) = suite_instance(cfg, i);
        let seed = derive_seed(cfg.seed, i as u64);
        let k = random_instance(n, seed)?;
        let mut rng = seeded(derive_seed(seed, 1));
        let v = random_unit_vector(n, &mut rng);
        let w = random_unit_vector(n, &mut rng);
        let z: Vec<f64> = random_unit_vector(n, &mut rng).iter().map(|x| x * 3.0).collect();
        let rank = 1 + (rng.random::<u64>() as usize) % (n - 1).max(1);
        let x = random_projector(n, rank.min(n), &mut rng);

        let imp = check_implicit_regularization(&k, alpha)?;
        let app = check_expected_approximation(&k, alpha)?;
        let lev = check_leverage_weighting(&k, alpha, &v, &w)?;
        let proj = check_projection_cost(&k, alpha, &x)?;
        let (_, vecs) = linalg::sym_eigen_desc(k.matrix())?;
        let top = vecs.column(0);
        let proj_top = check_projection_cost(&k, alpha, &(&top * top.transpose()))?;
        let risk = check_risk_bound(&k, alpha, &z, cfg.gamma, cfg.noise_var)?;
        let conc = check_concentration(&k, alpha, &w, cfg.mc_samples, cfg.delta, derive_seed(seed, 2))?;
        let values = [
            imp.inverse_deviation,
            imp.product_deviation,
            app.residual_deviation,
            app.projector_deviation,
            app.trace_deviation,
            lev.mean_deviation,
            lev.variance_deviation,
            lev.second_moment_deviation,
            imp.lambda_max - imp.lambda_bound,
            -proj.lower_slack.min(proj.upper_slack).min(proj_top.lower_slack).min(proj_top.upper_slack),
            risk.lhs - risk.rhs,
            conc.exceedance_rate - cfg.delta,
        ];
        for (w, v) in worst.iter_mut().zip(values) {
            *w = w.max(if v.is_nan() { f64::INFINITY } else { v });
        }
    }
    let names = [
        "expected_inverse",
        "expected_submatrix",
        "expected_residual",
        "expected_projector",
        "expected_trace",
        "weighted_mean",
        "weighted_variance",
        "weighted_second_moment",
        "eigenvalue_bound",
        "projection_cost",
        "risk_bound",
        "concentration",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .enumerate()
        .map(|(j, (name, w))| {
            let limit = if j == 11 { 0.0 } else { cfg.tolerance };
            CheckOutcome {
                name: name.to_string(),
                worst: w,
                limit,
                passed: w <= limit,
            }
        })
        .collect())
}
