use approx::assert_relative_eq;
use diverse_nystrom::cluster::{kmeans, kmeans_with, nmi, nystrom_features, KmeansOptions};
use diverse_nystrom::datasets::{generate_gaussian_clusters, generate_toy_regression, ClusterSpec};
use diverse_nystrom::kernel::{gram, gram_with, KernelMatrix, LandmarkSet};
use diverse_nystrom::krr::{
    build_preconditioner, fit_direct, fit_pcg, full_krr_fit, normal_matrix, DChoice, Preconditioner, PCG_MAX_ITER,
    PCG_TOLERANCE,
};
use diverse_nystrom::leverage::rls_exact;
use diverse_nystrom::nystrom::{self, frobenius_error_sampled_with};
use diverse_nystrom::rng::seeded;
use diverse_nystrom::sampling::{sample_uniform, SpectralDpp};
use diverse_nystrom::stats::chi_square_p_value;
use diverse_nystrom::verify::{enumerate_dpp, enumerate_dpp_with, random_instance};
use diverse_nystrom::Execution;

fn mask(set: &LandmarkSet) -> usize {
    set.indices().iter().map(|&i| 1usize << i).sum()
}

fn subset_counts(k: &KernelMatrix, alpha: f64, size: Option<usize>, draws: usize, seed: u64) -> Vec<u64> {
    let dpp = SpectralDpp::new(k, alpha).unwrap();
    let mut rng = seeded(seed);
    let mut counts = vec![0u64; 1 << k.n()];
    for _ in 0..draws {
        let set = match size {
            Some(s) => dpp.sample_k(s, &mut rng).unwrap(),
            None => dpp.sample(&mut rng).unwrap(),
        };
        counts[mask(&set)] += 1;
    }
    counts
}

#[test]
fn dpp_frequencies_match_enumeration() {
    let k = random_instance(6, 11).unwrap();
    let alpha = 0.3;
    let probs = enumerate_dpp(&k, alpha).unwrap().probabilities().to_vec();
    let counts = subset_counts(&k, alpha, None, 50_000, 5);
    let p = chi_square_p_value(&counts, &probs, 5.0).unwrap();
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn kdpp_frequencies_match_conditioned_enumeration() {
    let k = random_instance(7, 4).unwrap();
    let alpha = 0.5;
    let probs = enumerate_dpp(&k, alpha).unwrap().probabilities().to_vec();
    let size_mass: f64 = (0..probs.len()).filter(|m| m.count_ones() == 3).map(|m| probs[m]).sum();
    let cond: Vec<f64> = (0..probs.len())
        .map(|m| if m.count_ones() == 3 { probs[m] / size_mass } else { 0.0 })
        .collect();
    let counts = subset_counts(&k, alpha, Some(3), 50_000, 6);
    let p = chi_square_p_value(&counts, &cond, 5.0).unwrap();
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn single_point_kdpp_is_proportional_to_diagonal() {
    // Unit kernel diagonal makes every singleton equally likely.
    let k = random_instance(5, 2).unwrap();
    let counts = subset_counts(&k, 1.0, Some(1), 50_000, 8);
    let probs: Vec<f64> = (0..32usize).map(|m| if m.count_ones() == 1 { 0.2 } else { 0.0 }).collect();
    assert!(chi_square_p_value(&counts, &probs, 5.0).unwrap() > 0.001);
}

#[test]
fn all_landmarks_reduce_to_full_krr() {
    let data = generate_toy_regression(40, 2, 3.0, 0.1, 1).unwrap();
    let k = gram(&data, 1.5).unwrap();
    let y = data.target().unwrap();
    let gamma = 1e-3;
    let factor = nystrom::build(&k, &LandmarkSet::full(40)).unwrap();
    let model = fit_direct(&factor, y, gamma).unwrap();
    let approx = model.predict_train(&factor);
    let exact = full_krr_fit(&k, y, gamma).unwrap();
    for (a, b) in approx.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn pcg_matches_direct_solve_and_residual_contract() {
    let data = generate_toy_regression(200, 2, 1.0, 0.1, 3).unwrap();
    let k = gram(&data, 2.0).unwrap();
    let y = data.target().unwrap();
    let landmarks = sample_uniform(200, 15, 9).unwrap();
    let factor = nystrom::build(&k, &landmarks).unwrap();
    let gamma = 1e-3;
    let direct = fit_direct(&factor, y, gamma).unwrap();

    let a = normal_matrix(&factor, gamma);
    let alpha = diverse_nystrom::linalg::Vector::from_column_slice(&direct.coefficients);
    let rhs = factor.k_cross().transpose() * diverse_nystrom::linalg::Vector::from_column_slice(y);
    assert!((&a * &alpha - &rhs).norm() <= 1e-6 * rhs.norm());

    let scores = rls_exact(&k, 200.0 * 1e-3).unwrap().select(landmarks.indices());
    for precond in [
        Preconditioner::identity(15),
        build_preconditioner(&factor, None, gamma, DChoice::Uniform).unwrap(),
        build_preconditioner(&factor, Some(&scores), gamma, DChoice::InverseLeverage).unwrap(),
    ] {
        let (model, report) = fit_pcg(&factor, y, gamma, &precond, PCG_TOLERANCE, PCG_MAX_ITER).unwrap();
        assert!(report.converged, "{report:?}");
        for (p, d) in model.coefficients.iter().zip(&direct.coefficients) {
            assert!((p - d).abs() <= 1e-6 * (1.0 + d.abs()), "{p} vs {d}");
        }
    }
}

#[test]
fn separated_clusters_are_recovered() {
    let specs = [
        ClusterSpec { center: vec![0.0, 0.0], std: 0.2, count: 60 },
        ClusterSpec { center: vec![8.0, 8.0], std: 0.2, count: 40 },
    ];
    let data = generate_gaussian_clusters(&specs, 2).unwrap();
    let factor = nystrom::build_from_data(&data, &sample_uniform(100, 12, 4).unwrap(), 2.0).unwrap();
    let features = nystrom_features(&factor, 2).unwrap();
    let result = kmeans(&features, 2, 10, 300, 1).unwrap();
    assert_relative_eq!(nmi(&result.assignments, data.labels().unwrap()).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn serial_and_parallel_agree() {
    let data = generate_toy_regression(300, 3, 0.0, 0.1, 5).unwrap();
    let serial = gram_with(&data, 1.0, Execution::Serial).unwrap();
    let parallel = gram_with(&data, 1.0, Execution::Parallel).unwrap();
    assert_eq!(serial.matrix(), parallel.matrix());

    let factor = nystrom::build(&serial, &sample_uniform(300, 20, 1).unwrap()).unwrap();
    let a = frobenius_error_sampled_with(&data, 1.0, &factor, 4, 50, 3, Execution::Serial).unwrap();
    let b = frobenius_error_sampled_with(&data, 1.0, &factor, 4, 50, 3, Execution::Parallel).unwrap();
    assert_eq!(a, b);

    let features = nystrom_features(&factor, 3).unwrap();
    let opts = KmeansOptions::new(2);
    let a = kmeans_with(&features, 3, &opts, Execution::Serial).unwrap();
    let b = kmeans_with(&features, 3, &opts, Execution::Parallel).unwrap();
    assert_eq!(a.assignments, b.assignments);

    let k = random_instance(8, 1).unwrap();
    let a = enumerate_dpp_with(&k, 0.5, Execution::Serial).unwrap();
    let b = enumerate_dpp_with(&k, 0.5, Execution::Parallel).unwrap();
    assert_eq!(a.probabilities(), b.probabilities());
}

#[test]
fn toy_target_mean_is_near_offset() {
    let n = 100_000;
    let data = generate_toy_regression(n, 2, 20.0, 0.1, 12).unwrap();
    let mean = data.target().unwrap().iter().sum::<f64>() / n as f64;
    assert!((mean - 20.0).abs() <= 3.0 * 1.1 / (n as f64).sqrt());
}
