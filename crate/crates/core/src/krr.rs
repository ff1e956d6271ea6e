//! Nyström kernel ridge regression: direct and preconditioned conjugate
//! gradient solvers, the full-kernel baseline, risk decomposition and
//! cross-validation of the ridge.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datasets::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::kernel::{cross_kernel, gram, KernelMatrix, LandmarkSet};
use crate::linalg::{self, Matrix};
use crate::nystrom::NystromFactor;
use crate::par::{map_indexed, Execution};
use crate::rng::seeded;

pub const PCG_TOLERANCE: f64 = 1e-10;
pub const PCG_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrModel {
    pub landmarks: LandmarkSet,
    pub coefficients: Vec<f64>,
    pub gamma: f64,
    pub sigma: Option<f64>,
}

impl KrrModel {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// `K_C α`: predictions at the training points.
    pub fn predict_train(&self, factor: &NystromFactor) -> Vec<f64> {
        (factor.k_cross() * linalg::Vector::from_column_slice(&self.coefficients))
            .iter()
            .copied()
            .collect()
    }

    /// `CSV` export: a `# sigma=…,gamma=…` comment line, then one
    /// `landmark_index,coefficient` row per landmark.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let sigma = self.sigma.map_or_else(|| "NA".to_string(), |s| s.to_string());
        writeln!(out, "# sigma={sigma},gamma={}", self.gamma)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["landmark_index", "coefficient"])?;
        for (&i, &c) in self.landmarks.indices().iter().zip(&self.coefficients) {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    Ok(())
}

fn check_targets(factor: &NystromFactor, y: &[f64]) -> Result<()> {
    if y.len() != factor.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {} training points",
            y.len(),
            factor.n()
        )));
    }
    Ok(())
}

/// `K_Cᵀ K_C + nγ K_CC`.
pub fn normal_matrix(factor: &NystromFactor, gamma: f64) -> Matrix {
    let kc = factor.k_cross();
    let mut a = kc.tr_mul(kc);
    a += factor.k_cc() * (factor.n() as f64 * gamma);
    linalg::symmetrize(&mut a);
    a
}

fn rhs(factor: &NystromFactor, y: &[f64]) -> Vec<f64> {
    factor
        .k_cross()
        .tr_mul(&linalg::Vector::from_column_slice(y))
        .iter()
        .copied()
        .collect()
}

/// Solves `(K_Cᵀ K_C + nγ K_CC) α = K_Cᵀ y` by Cholesky, without jitter.
pub fn fit_direct(factor: &NystromFactor, y: &[f64], gamma: f64) -> Result<KrrModel> {
    check_gamma(gamma)?;
    check_targets(factor, y)?;
    let r = linalg::cholesky_upper(&normal_matrix(factor, gamma))?;
    Ok(KrrModel {
        landmarks: factor.landmarks().clone(),
        coefficients: linalg::cholesky_solve(&r, &rhs(factor, y)),
        gamma,
        sigma: None,
    })
}

/// Full kernel ridge regression in-sample fit `K (K + nγI)⁻¹ y`.
pub fn full_krr_fit(k: &KernelMatrix, y: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let n = k.n();
    let mut a = k.matrix().clone();
    for i in 0..n {
        a[(i, i)] += n as f64 * gamma;
    }
    let r = linalg::cholesky_upper(&a)?;
    let w = linalg::cholesky_solve(&r, y);
    Ok((k.matrix() * linalg::Vector::from_vec(w)).iter().copied().collect())
}

/// `f(x) = Σ_j α_j k(x_j, x)` at every row of `x_new`, with `landmark_points`
/// the landmark feature rows.
pub fn predict(model: &KrrModel, x_new: &Matrix, landmark_points: &Matrix) -> Result<Vec<f64>> {
    let sigma = model
        .sigma
        .ok_or_else(|| Error::InvalidArgument("model has no kernel bandwidth".into()))?;
    if landmark_points.nrows() != model.coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} landmark rows for {} coefficients",
            landmark_points.nrows(),
            model.coefficients.len()
        )));
    }
    let kx = cross_kernel(x_new, landmark_points, sigma, Execution::default())?;
    Ok((kx * linalg::Vector::from_column_slice(&model.coefficients))
        .iter()
        .copied()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DChoice {
    /// `D = (n/k) I`.
    #[default]
    Uniform,
    /// `D = Diag(ℓ_C)⁻¹`.
    InverseLeverage,
}

/// Upper-triangular `B` with `BBᵀ = (K_CC D K_CC + nγ K_CC)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    b: Matrix,
    d_choice: Option<DChoice>,
}

impl Preconditioner {
    pub fn identity(k: usize) -> Self {
        Self {
            b: Matrix::identity(k, k),
            d_choice: None,
        }
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// `None` for the identity preconditioner.
    pub fn d_choice(&self) -> Option<DChoice> {
        self.d_choice
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let v = linalg::Vector::from_column_slice(r);
        (&self.b * self.b.tr_mul(&v)).iter().copied().collect()
    }
}

pub fn build_preconditioner(
    factor: &NystromFactor,
    scores_at_landmarks: Option<&[f64]>,
    gamma: f64,
    d_choice: DChoice,
) -> Result<Preconditioner> {
    check_gamma(gamma)?;
    let k = factor.k();
    let n = factor.n() as f64;
    let d: Vec<f64> = match (d_choice, scores_at_landmarks) {
        (DChoice::Uniform, _) => vec![n / k as f64; k],
        (DChoice::InverseLeverage, Some(s)) if s.len() == k => s.iter().map(|l| 1.0 / l).collect(),
        (DChoice::InverseLeverage, Some(s)) => {
            return Err(Error::DimensionMismatch(format!("{} scores for {k} landmarks", s.len())))
        }
        (DChoice::InverseLeverage, None) => return invalid("inverse-leverage preconditioner needs scores"),
    };
    let kcc = factor.k_cc().clone();
    let scaled = Matrix::from_fn(k, k, |i, j| kcc[(i, j)] * d[j]);
    let mut inner = &scaled * &kcc + &kcc * (n * gamma);
    linalg::symmetrize(&mut inner);
    let t = linalg::cholesky_upper(&inner)?;
    Ok(Preconditioner {
        b: linalg::upper_inverse(&t),
        d_choice: Some(d_choice),
    })
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final `‖b − Aα‖ / ‖b‖`.
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradient on the normal equations. Returns the
/// iterate with the smallest residual when `max_iter` is reached first.
pub fn fit_pcg(
    factor: &NystromFactor,
    y: &[f64],
    gamma: f64,
    precond: &Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(KrrModel, PcgReport)> {
    check_gamma(gamma)?;
    check_targets(factor, y)?;
    if precond.b.nrows() != factor.k() {
        return Err(Error::DimensionMismatch("preconditioner size differs from landmark count".into()));
    }
    let a = normal_matrix(factor, gamma);
    let b = rhs(factor, y);
    let (x, report) = pcg(&a, &b, precond, tol, max_iter);
    let model = KrrModel {
        landmarks: factor.landmarks().clone(),
        coefficients: x,
        gamma,
        sigma: None,
    };
    Ok((model, report))
}

fn pcg(a: &Matrix, b: &[f64], precond: &Preconditioner, tol: f64, max_iter: usize) -> (Vec<f64>, PcgReport) {
    let k = b.len();
    let b_norm = linalg::dot(b, b).sqrt();
    let mut x = vec![0.0; k];
    if b_norm == 0.0 {
        let report = PcgReport {
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
        };
        return (x, report);
    }
    let mut r = b.to_vec();
    let mut z = precond.apply(&r);
    let mut p = z.clone();
    let mut rz = linalg::dot(&r, &z);
    let mut best = (x.clone(), 1.0);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let ap: Vec<f64> = (a * linalg::Vector::from_column_slice(&p)).iter().copied().collect();
        let step = rz / linalg::dot(&p, &ap);
        if !step.is_finite() {
            break;
        }
        for i in 0..k {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = linalg::dot(&r, &r).sqrt() / b_norm;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= tol {
            break;
        }
        z = precond.apply(&r);
        let rz_new = linalg::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..k {
            p[i] = z[i] + beta * p[i];
        }
    }
    let (x, rel) = best;
    let report = PcgReport {
        iterations,
        converged: rel <= tol,
        relative_residual: rel,
    };
    (x, report)
}

/// Condition number of the raw normal matrix.
pub fn system_condition_number(factor: &NystromFactor, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    linalg::condition_number(&normal_matrix(factor, gamma))
}

/// Condition number of `Bᵀ (K_Cᵀ K_C + nγ K_CC) B`.
pub fn preconditioned_condition_number(factor: &NystromFactor, gamma: f64, precond: &Preconditioner) -> Result<f64> {
    check_gamma(gamma)?;
    let a = normal_matrix(factor, gamma);
    let mut m = precond.b.tr_mul(&(a * &precond.b));
    linalg::symmetrize(&mut m);
    linalg::condition_number(&m)
}

/// Bias and variance of the ridge smoother built on `K̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskComponents {
    pub bias: f64,
    pub variance: f64,
}

impl RiskComponents {
    /// `bias² + variance`.
    pub fn risk(&self) -> f64 {
        self.bias * self.bias + self.variance
    }
}

/// For `ẑ = K̂ (K̂ + nγI)⁻¹ y` with `y = z + ε`, `ε ~ N(0, noise_var·I)`:
/// `bias = √(n γ² zᵀ (K̂ + nγI)⁻² z)` and
/// `variance = (noise_var/n) Tr(K̂² (K̂ + nγI)⁻²)`.
pub fn risk_components(k_hat: &Matrix, z: &[f64], gamma: f64, noise_var: f64) -> Result<RiskComponents> {
    check_gamma(gamma)?;
    let n = k_hat.nrows();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!("{} targets for a {n}x{n} kernel", z.len())));
    }
    let (vals, vecs) = linalg::sym_eigen_desc(k_hat)?;
    let ng = n as f64 * gamma;
    let proj = vecs.tr_mul(&linalg::Vector::from_column_slice(z));
    let (mut bias2, mut var) = (0.0, 0.0);
    for j in 0..n {
        let lam = vals[j].max(0.0);
        let den = (lam + ng).powi(2);
        bias2 += proj[j] * proj[j] / den;
        var += lam * lam / den;
    }
    Ok(RiskComponents {
        bias: (n as f64 * gamma * gamma * bias2).sqrt(),
        variance: noise_var / n as f64 * var,
    })
}

/// 8 log-spaced values from `1e-8` to `1`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-8.0 + 8.0 * i as f64 / 7.0)).collect()
}

/// `folds` disjoint index sets covering `0..n`, from a seeded shuffle.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return invalid(format!("need 2 <= folds <= {n}, got {folds}"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub gamma: f64,
    /// `(gamma, mean validation MSE)` for every grid value, ascending in γ.
    pub scores: Vec<(f64, f64)>,
}

/// k-fold cross-validation of the ridge for a fixed set of landmarks (row
/// indices of `data`, which must carry a target). Fits failing with a
/// singular system score `+∞`; ties go to the smallest γ.
pub fn cross_validate_gamma(
    data: &DataMatrix,
    landmarks: &LandmarkSet,
    sigma: f64,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return invalid("empty gamma grid");
    }
    for &g in grid {
        check_gamma(g)?;
    }
    let y = data
        .target()
        .ok_or_else(|| Error::InvalidArgument("cross-validation needs a target".into()))?;
    let parts = fold_partition(data.n(), folds, seed)?;
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let lm_points = data.select_rows(landmarks.indices());

    let per_fold = map_indexed(Execution::default(), parts.len(), |f| -> Result<Vec<f64>> {
        let valid = &parts[f];
        let train: Vec<usize> = (0..data.n()).filter(|i| valid.binary_search(i).is_err()).collect();
        let train_data = data.select_rows(&train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let valid_data = data.select_rows(valid);
        let factor = fold_factor(&train_data, &lm_points, sigma)?;
        Ok(grid
            .iter()
            .map(|&g| match fit_direct(&factor, &y_train, g) {
                Ok(model) => {
                    let model = model.with_sigma(sigma);
                    match predict(&model, valid_data.values(), lm_points.values()) {
                        Ok(pred) => {
                            valid.iter().zip(&pred).map(|(&i, p)| (y[i] - p).powi(2)).sum::<f64>() / valid.len() as f64
                        }
                        Err(_) => f64::INFINITY,
                    }
                }
                Err(_) => f64::INFINITY,
            })
            .collect())
    });
    let per_fold: Vec<Vec<f64>> = per_fold.into_iter().collect::<Result<_>>()?;
    let scores: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(j, &g)| (g, per_fold.iter().map(|f| f[j]).sum::<f64>() / per_fold.len() as f64))
        .collect();
    let mut best = 0;
    for (j, s) in scores.iter().enumerate() {
        if s.1 < scores[best].1 {
            best = j;
        }
    }
    Ok(CvResult {
        gamma: scores[best].0,
        scores,
    })
}

/// Nyström factor of fold-training rows against landmark points that need
/// not belong to those rows.
fn fold_factor(train: &DataMatrix, landmarks: &DataMatrix, sigma: f64) -> Result<NystromFactor> {
    let k_cross = cross_kernel(train.values(), landmarks.values(), sigma, Execution::Serial)?;
    let k_cc = gram(landmarks, sigma)?.into_matrix();
    NystromFactor::from_blocks(LandmarkSet::full(landmarks.n()), k_cross, k_cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::generate_toy_regression;
    use crate::kernel::gram;
    use crate::nystrom::build;
    use approx::assert_relative_eq;

    fn toy(n: usize, noise: f64, seed: u64) -> DataMatrix {
        generate_toy_regression(n, 2, 0.0, noise, seed).unwrap()
    }

    #[test]
    fn scalar_case() {
        let k = KernelMatrix::from_matrix(Matrix::from_element(1, 1, 1.0)).unwrap();
        let f = build(&k, &LandmarkSet::full(1)).unwrap();
        let m = fit_direct(&f, &[2.0], 1.0).unwrap();
        assert_relative_eq!(m.coefficients[0], 1.0, epsilon = 1e-15);
        assert!(fit_direct(&f, &[2.0], 0.0).is_err());
    }

    #[test]
    fn stronger_ridge_shrinks_coefficients() {
        let data = toy(60, 0.1, 1);
        let k = gram(&data, 1.0).unwrap();
        let f = build(&k, &LandmarkSet::new((0..60).step_by(6).collect(), 60).unwrap()).unwrap();
        let y = data.target().unwrap();
        let norm = |g: f64| linalg::Vector::from_vec(fit_direct(&f, y, g).unwrap().coefficients).norm();
        assert!(norm(1e-2) < norm(1e-3));
    }

    #[test]
    fn full_landmarks_match_full_krr() {
        let data = toy(40, 0.1, 2);
        let k = gram(&data, 1.5).unwrap();
        let y = data.target().unwrap();
        let gamma = 1e-3;
        let f = build(&k, &LandmarkSet::full(40)).unwrap();
        let pred = fit_direct(&f, y, gamma).unwrap().predict_train(&f);
        let full = full_krr_fit(&k, y, gamma).unwrap();
        for (a, b) in pred.iter().zip(&full) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn prediction_paths_agree() {
        let data = toy(30, 0.1, 3);
        let set = LandmarkSet::new(vec![2, 9, 17, 25], 30).unwrap();
        let k = gram(&data, 1.0).unwrap();
        let f = build(&k, &set).unwrap();
        let y = data.target().unwrap();
        let model = fit_direct(&f, y, 1e-2).unwrap().with_sigma(1.0);
        let lm = data.select_rows(set.indices());
        let out = predict(&model, data.values(), lm.values()).unwrap();
        for (a, b) in out.iter().zip(model.predict_train(&f)) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        let a = normal_matrix(&f, 1e-2);
        let resid = &a * linalg::Vector::from_vec(model.coefficients.clone()) - linalg::Vector::from_vec(rhs(&f, y));
        assert!(resid.norm() <= 1e-6 * linalg::Vector::from_vec(rhs(&f, y)).norm());
        let zero = KrrModel {
            coefficients: vec![0.0; 4],
            ..model
        };
        assert!(predict(&zero, data.values(), lm.values()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_preconditioner() {
        let k = KernelMatrix::from_matrix(Matrix::from_element(3, 3, 0.5) + Matrix::identity(3, 3) * 0.5).unwrap();
        let f = build(&k, &LandmarkSet::new(vec![1], 3).unwrap()).unwrap();
        let gamma = 0.1;
        let p = build_preconditioner(&f, None, gamma, DChoice::Uniform).unwrap();
        let d = 3.0;
        let expected = 1.0 / (d + 3.0 * gamma).sqrt();
        assert_relative_eq!(p.b()[(0, 0)], expected, epsilon = 1e-14);
        assert!(build_preconditioner(&f, None, gamma, DChoice::InverseLeverage).is_err());
    }

    #[test]
    fn preconditioner_inverts_inner_matrix() {
        let data = toy(50, 0.1, 4);
        let k = gram(&data, 1.5).unwrap();
        let f = build(&k, &LandmarkSet::new(vec![0, 10, 20, 30, 40], 50).unwrap()).unwrap();
        let gamma = 1e-2;
        let scores = [0.3, 0.4, 0.2, 0.5, 0.6];
        let p = build_preconditioner(&f, Some(&scores), gamma, DChoice::InverseLeverage).unwrap();
        let kcc = f.k_cc().clone();
        let dm = Matrix::from_diagonal(&linalg::Vector::from_iterator(5, scores.iter().map(|s| 1.0 / s)));
        let inner = &kcc * dm * &kcc + &kcc * (50.0 * gamma);
        assert_relative_eq!(p.b() * p.b().transpose() * inner, Matrix::identity(5, 5), epsilon = 1e-6);
    }

    #[test]
    fn pcg_matches_direct() {
        let data = toy(80, 0.1, 5);
        let k = gram(&data, 1.0).unwrap();
        let f = build(&k, &LandmarkSet::new((0..80).step_by(8).collect(), 80).unwrap()).unwrap();
        let y = data.target().unwrap();
        let gamma = 1e-3;
        let direct = fit_direct(&f, y, gamma).unwrap();
        let p = build_preconditioner(&f, None, gamma, DChoice::Uniform).unwrap();
        let (model, report) = fit_pcg(&f, y, gamma, &p, PCG_TOLERANCE, PCG_MAX_ITER).unwrap();
        assert!(report.converged);
        let scale = linalg::Vector::from_vec(direct.coefficients.clone()).norm();
        for (a, b) in model.coefficients.iter().zip(&direct.coefficients) {
            assert!((a - b).abs() <= 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn identity_preconditioner_on_well_conditioned_system() {
        let k = KernelMatrix::from_matrix(Matrix::identity(6, 6)).unwrap();
        let f = build(&k, &LandmarkSet::new(vec![0, 2, 4], 6).unwrap()).unwrap();
        let y = [1.0, -2.0, 0.5, 3.0, 1.0, 0.0];
        let (_, report) = fit_pcg(&f, &y, 0.1, &Preconditioner::identity(3), 1e-12, 100).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 3);
    }

    #[test]
    fn risk_components_limits() {
        let k = Matrix::identity(4, 4) * 0.7;
        let r = risk_components(&k, &[0.0; 4], 0.1, 0.5).unwrap();
        assert_eq!(r.bias, 0.0);
        let z = [1.0, 2.0, -1.0, 0.5];
        let r = risk_components(&Matrix::zeros(4, 4), &z, 0.3, 0.5).unwrap();
        assert_eq!(r.variance, 0.0);
        let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_relative_eq!(r.bias, znorm / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn risk_components_monotone_in_gamma() {
        let data = toy(25, 0.1, 6);
        let k = gram(&data, 1.0).unwrap();
        let z = data.target().unwrap();
        let rs: Vec<RiskComponents> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&g| risk_components(k.matrix(), z, g, 0.01).unwrap())
            .collect();
        assert!(rs[0].bias <= rs[1].bias && rs[1].bias <= rs[2].bias);
        assert!(rs[0].variance >= rs[1].variance && rs[1].variance >= rs[2].variance);
    }

    #[test]
    fn folds_partition_indices() {
        let parts = fold_partition(23, 5, 7).unwrap();
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(fold_partition(3, 5, 0).is_err());
    }

    #[test]
    fn cross_validation_cases() {
        let data = toy(120, 0.0, 8);
        let set = LandmarkSet::new((0..120).step_by(4).collect(), 120).unwrap();
        let single = cross_validate_gamma(&data, &set, 2.0, &[0.3], 5, 1).unwrap();
        assert_eq!(single.gamma, 0.3);
        assert!(cross_validate_gamma(&data, &set, 2.0, &[], 5, 1).is_err());
        let cv = cross_validate_gamma(&data, &set, 2.0, &default_gamma_grid(), 5, 1).unwrap();
        assert_relative_eq!(cv.gamma, 1e-8, max_relative = 1e-9);
        assert_eq!(cv, cross_validate_gamma(&data, &set, 2.0, &default_gamma_grid(), 5, 1).unwrap());
    }

    #[test]
    fn model_csv_export() {
        let model = KrrModel {
            landmarks: LandmarkSet::new(vec![3, 8], 10).unwrap(),
            coefficients: vec![0.5, -1.0],
            gamma: 0.01,
            sigma: Some(2.0),
        };
        let mut buf = Vec::new();
        model.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# sigma=2,gamma=0.01\nlandmark_index,coefficient\n3,0.5\n8,-1\n");
    }
}
