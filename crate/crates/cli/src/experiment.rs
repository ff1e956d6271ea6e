//! Task execution: data preparation, sampler trials, the greedy
//! log-determinant sweep and per-row task metrics.

use crate::config::{ExperimentConfig, Generator, SamplerKind, Task};
use crate::CliError;
use diverse_nystrom::cluster::{kmeans_with, nystrom_features, KmeansOptions};
use diverse_nystrom::datasets::{
    five_bumps, generate_toy_regression, load_csv, split_half, standardize, ColumnStats, DataMatrix,
};
use diverse_nystrom::eval::stratified_report;
use diverse_nystrom::kernel::{gram, load_gram, save_gram, CholeskyFactor, KernelMatrix, LandmarkSet};
use diverse_nystrom::krr::{
    build_preconditioner, cross_validate_gamma, default_gamma_grid, fit_direct, fit_pcg, predict,
    preconditioned_condition_number, system_condition_number, Preconditioner, PCG_MAX_ITER, PCG_TOLERANCE,
};
use diverse_nystrom::leverage::{rls_exact, rls_recursive, subset_size, LeverageScores};
use diverse_nystrom::linalg::Matrix;
use diverse_nystrom::par::map_indexed;
use diverse_nystrom::rng::{derive_seed, seeded};
use diverse_nystrom::sampling::{greedy_swap, sample_rls, sample_uniform, SpectralDpp, SwapConfig};
use diverse_nystrom::stats::quantile;
use diverse_nystrom::verify::{run_suite, CheckOutcome, SuiteConfig};
use diverse_nystrom::{kpca, nystrom, Error, Execution};
use rand::Rng;

// Seed streams; fixed so that adding a sampler or a target never changes the
// draws of the others.
const DATA_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;
const SCORE_STREAM: u64 = 3;
const CV_STREAM: u64 = 4;
const PRELIMINARY_STREAM: u64 = 5;
const SAMPLER_STREAM: u64 = 100;
const TARGET_STREAM: u64 = 1_000;

/// Redraws allowed when a DPP sample comes back empty.
const EMPTY_REDRAWS: usize = 100;

/// One output row: a sampled subset and the task metrics on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub trial: usize,
    pub sampler: SamplerKind,
    /// Index into the sweep grid, `None` outside a sweep.
    pub target_index: Option<usize>,
    pub target: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub k: usize,
    pub logdet: f64,
    /// `ok`, or the reason the metrics could not be computed.
    pub status: String,
    pub metrics: Vec<f64>,
    /// The drawn subset; written out by the `sample` task only.
    pub landmarks: Option<Vec<usize>>,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Per-bin error of one KRR row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub trial: usize,
    pub sampler: SamplerKind,
    pub target_index: Option<usize>,
    pub bin: usize,
    pub low: f64,
    pub high: f64,
    pub count: usize,
    pub metric: Option<f64>,
}

/// Quantities shared by every row of a run.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct RunInfo {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub effective_dimension: f64,
    pub exact_scores: bool,
    pub gamma: Option<f64>,
    pub n_test: Option<usize>,
    /// Log-determinant targets of a sweep.
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub task: Task,
    pub info: RunInfo,
    pub metric_names: Vec<&'static str>,
    pub rows: Vec<Row>,
    pub bins: Vec<BinRow>,
    /// Leverage scores of the `rls` task.
    pub scores: Option<Vec<f64>>,
    /// Results of the `verify` task.
    pub checks: Vec<CheckOutcome>,
}

impl Outcome {
    /// False only when a verification check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn metric_names(task: Task) -> Vec<&'static str> {
    match task {
        Task::Nystrom => vec!["lambda_min", "lambda_max", "kappa", "frob_rel_error"],
        Task::Kpca => vec!["components", "reconstruction_error"],
        Task::Krr => vec!["overall", "bulk", "tail"],
        Task::Kkmeans => vec!["inertia", "nmi"],
        Task::Precond => vec!["kappa_raw", "kappa_precond", "iterations_raw", "iterations_precond"],
        Task::Verify | Task::Sample | Task::Rls => vec![],
    }
}

/// Data after preprocessing, with the kernel and scores of the set that
/// landmarks are drawn from.
struct Prepared {
    data: DataMatrix,
    kernel: KernelMatrix,
    alpha: f64,
    scores: LeverageScores,
    k: usize,
    regression: Option<Regression>,
}

struct Regression {
    test: DataMatrix,
    test_scores: Vec<f64>,
    gamma: f64,
}

fn load_data(cfg: &ExperimentConfig) -> Result<DataMatrix, CliError> {
    let seed = derive_seed(cfg.seed, DATA_STREAM);
    let data = match (&cfg.data, &cfg.generator) {
        (Some(path), _) => load_csv(path, cfg.target_column.as_ref(), cfg.label_column.as_ref())
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        (None, Some(Generator::ToyRegression { n, d, offset, noise })) => {
            generate_toy_regression(*n, *d, *offset, *noise, seed)?
        }
        (None, Some(Generator::FiveBumps)) => five_bumps(seed)?,
        (None, Some(Generator::Uniform { n, d })) => {
            let mut rng = seeded(seed);
            DataMatrix::new(Matrix::from_fn(*n, *d, |_, _| rng.random::<f64>()), None, None)?
        }
        (None, None) => return Err(CliError::Config("one of data or generator is required".into())),
    };
    if data.n() < 2 {
        return Err(CliError::Data("need at least 2 rows".into()));
    }
    Ok(data)
}

fn scaled(data: &DataMatrix, stats: Option<&ColumnStats>, on: bool) -> Result<(DataMatrix, Option<ColumnStats>), Error> {
    if !on {
        return Ok((data.clone(), None));
    }
    let (z, s) = standardize(data, stats)?;
    Ok((z, Some(s)))
}

fn kernel_of(cfg: &ExperimentConfig, data: &DataMatrix) -> Result<KernelMatrix, CliError> {
    let path = cfg.gram_cache.as_ref();
    if let Some(p) = path {
        if p.exists() {
            let k = load_gram(p, Some(cfg.sigma))?;
            if k.n() == data.n() {
                return Ok(k);
            }
        }
    }
    let k = gram(data, cfg.sigma)?;
    if let Some(p) = path {
        save_gram(&k, p)?;
    }
    Ok(k)
}

fn scores_of(cfg: &ExperimentConfig, data: &DataMatrix, k: &KernelMatrix, alpha: f64, stream: u64) -> Result<LeverageScores, Error> {
    match cfg.rrls_budget {
        Some(budget) if budget < data.n() => {
            rls_recursive(data, cfg.sigma, alpha, budget, derive_seed(cfg.seed, SCORE_STREAM + stream))
        }
        _ => rls_exact(k, alpha),
    }
}

fn prepare(cfg: &ExperimentConfig, task: Task) -> Result<Prepared, CliError> {
    let raw = load_data(cfg)?;
    if task != Task::Krr {
        let (data, _) = scaled(&raw, None, cfg.standardize)?;
        let kernel = kernel_of(cfg, &data)?;
        let alpha = data.n() as f64 * cfg.lambda;
        let scores = scores_of(cfg, &data, &kernel, alpha, 0)?;
        let k = cfg.k.unwrap_or_else(|| subset_size(scores.effective_dimension()));
        check_k(k, data.n())?;
        return Ok(Prepared {
            data,
            kernel,
            alpha,
            scores,
            k,
            regression: None,
        });
    }

    if raw.target().is_none() {
        return Err(CliError::Config("task krr needs a target".into()));
    }
    // Split stratified by the leverage scores of the pooled data, which also
    // serve as the test-set scores.
    let (pooled, _) = scaled(&raw, None, cfg.standardize)?;
    let pooled_k = gram(&pooled, cfg.sigma)?;
    let pooled_scores = scores_of(cfg, &pooled, &pooled_k, pooled.n() as f64 * cfg.lambda, 1)?;
    drop(pooled_k);
    let split = split_half(&raw, derive_seed(cfg.seed, SPLIT_STREAM), Some(pooled_scores.scores()))?;
    let (train, test) = if cfg.pooled_standardization || !cfg.standardize {
        (pooled.select_rows(&split.train_indices), pooled.select_rows(&split.test_indices))
    } else {
        let (train, stats) = scaled(&split.train, None, true)?;
        let (test, _) = scaled(&split.test, stats.as_ref(), true)?;
        (train, test)
    };
    let test_scores = pooled_scores.select(&split.test_indices);

    let kernel = kernel_of(cfg, &train)?;
    let alpha = train.n() as f64 * cfg.lambda;
    let scores = scores_of(cfg, &train, &kernel, alpha, 0)?;
    let k = cfg.k.unwrap_or_else(|| subset_size(scores.effective_dimension()));
    check_k(k, train.n())?;
    let gamma = match cfg.gamma {
        Some(g) => g,
        None => {
            let cv_seed = derive_seed(cfg.seed, CV_STREAM);
            let landmarks = sample_uniform(train.n(), k, cv_seed)?;
            cross_validate_gamma(&train, &landmarks, cfg.sigma, &default_gamma_grid(), cfg.folds, cv_seed)?.gamma
        }
    };
    Ok(Prepared {
        data: train,
        kernel,
        alpha,
        scores,
        k,
        regression: Some(Regression {
            test,
            test_scores,
            gamma,
        }),
    })
}

fn check_k(k: usize, n: usize) -> Result<(), CliError> {
    if k > n {
        Err(CliError::Config(format!("subset size {k} exceeds the {n} available points")))
    } else {
        Ok(())
    }
}

/// A sampled subset with the greedy bookkeeping, when there is any.
struct Draw {
    landmarks: LandmarkSet,
    converged: Option<bool>,
    iterations: Option<usize>,
}

impl From<LandmarkSet> for Draw {
    fn from(landmarks: LandmarkSet) -> Self {
        Self {
            landmarks,
            converged: None,
            iterations: None,
        }
    }
}

fn sampler_code(s: SamplerKind) -> u64 {
    match s {
        SamplerKind::Uniform => 0,
        SamplerKind::Rls => 1,
        SamplerKind::Dpp => 2,
        SamplerKind::Kdpp => 3,
        SamplerKind::Greedy => 4,
    }
}

fn draw(p: &Prepared, dpp: Option<&SpectralDpp>, cfg: &ExperimentConfig, sampler: SamplerKind, target: Option<f64>, seed: u64) -> Result<Draw, Error> {
    let n = p.data.n();
    let spectral = || dpp.ok_or_else(|| Error::InvalidArgument("spectral sampler not prepared".into()));
    Ok(match sampler {
        SamplerKind::Uniform => sample_uniform(n, p.k, seed)?.into(),
        SamplerKind::Rls => sample_rls(&p.scores, p.k, seed)?.into(),
        SamplerKind::Kdpp => spectral()?.sample_k(p.k, &mut seeded(seed))?.into(),
        SamplerKind::Dpp => {
            let mut rng = seeded(seed);
            let mut set = spectral()?.sample(&mut rng)?;
            for _ in 0..EMPTY_REDRAWS {
                if !set.is_empty() {
                    break;
                }
                set = spectral()?.sample(&mut rng)?;
            }
            if set.is_empty() {
                return Err(Error::InvalidArgument("DPP draws stayed empty".into()));
            }
            set.into()
        }
        SamplerKind::Greedy => {
            let d_p = target.ok_or_else(|| Error::InvalidArgument("greedy sampler needs a target".into()))?;
            let res = greedy_swap(
                &p.kernel,
                &p.scores,
                &SwapConfig {
                    k: p.k,
                    d_p,
                    epsilon: cfg.epsilon,
                    max_iter: cfg.max_iter,
                    seed,
                },
            )?;
            Draw {
                landmarks: res.landmarks,
                converged: Some(res.converged),
                iterations: Some(res.iterations),
            }
        }
    })
}

fn status_of(e: &Error) -> String {
    match e {
        Error::NotPositiveDefinite { .. } => "not_positive_definite".into(),
        other => other.to_string(),
    }
}

/// Task metrics on one subset, plus KRR bins.
fn evaluate(p: &Prepared, cfg: &ExperimentConfig, task: Task, landmarks: &LandmarkSet, seed: u64) -> Result<(Vec<f64>, Vec<(f64, f64, usize, Option<f64>)>), Error> {
    let mut bins = Vec::new();
    let metrics = match task {
        Task::Nystrom => {
            let d = nystrom::diagnostics(&p.kernel, landmarks)?;
            vec![d.lambda_min, d.lambda_max, d.kappa, d.frob_rel_error]
        }
        Task::Kpca => {
            let factor = nystrom::build(&p.kernel, landmarks)?;
            let c = kpca::half_components(landmarks.len());
            let model = kpca::fit(&factor, c)?;
            vec![c as f64, kpca::reconstruction_error(&p.kernel, &model)?]
        }
        Task::Krr => {
            let reg = p.regression.as_ref().expect("regression context");
            let factor = nystrom::build(&p.kernel, landmarks)?;
            let y = p.data.target().expect("target checked");
            let model = fit_direct(&factor, y, reg.gamma)?.with_sigma(cfg.sigma);
            let lm_points = p.data.select_rows(landmarks.indices());
            let pred = predict(&model, reg.test.values(), lm_points.values())?;
            let y_test = reg.test.target().expect("target checked");
            let report = stratified_report(&reg.test_scores, y_test, &pred, cfg.quantile, cfg.bins, cfg.metric)?;
            for b in 0..report.bin_counts.len() {
                bins.push((report.bin_edges[b], report.bin_edges[b + 1], report.bin_counts[b], report.bin_metric[b]));
            }
            vec![
                report.overall_metric,
                report.bulk_metric.unwrap_or(f64::NAN),
                report.tail_metric.unwrap_or(f64::NAN),
            ]
        }
        Task::Kkmeans => {
            let labels = p.data.labels();
            let s = match (cfg.clusters, labels) {
                (Some(s), _) => s,
                (None, Some(l)) => distinct(l),
                (None, None) => return Err(Error::InvalidArgument("kkmeans needs clusters or labels".into())),
            };
            let factor = nystrom::build(&p.kernel, landmarks)?;
            let features = nystrom_features(&factor, s.min(landmarks.len()))?;
            let opts = KmeansOptions {
                restarts: cfg.restarts,
                max_iter: 300,
                seed,
            };
            let mut result = kmeans_with(&features, s, &opts, Execution::Serial)?;
            if let Some(l) = labels {
                result = result.with_truth(l)?;
            }
            vec![result.inertia, result.nmi_vs_truth.unwrap_or(f64::NAN)]
        }
        Task::Precond => {
            let gamma = cfg.gamma.unwrap_or(1e-10);
            let factor = nystrom::build(&p.kernel, landmarks)?;
            let at = p.scores.select(landmarks.indices());
            let precond = build_preconditioner(&factor, Some(&at), gamma, cfg.d_choice)?;
            let raw = system_condition_number(&factor, gamma)?;
            let pre = preconditioned_condition_number(&factor, gamma, &precond)?;
            let (it_raw, it_pre) = match p.data.target() {
                Some(y) => {
                    let identity = Preconditioner::identity(factor.k());
                    let (_, a) = fit_pcg(&factor, y, gamma, &identity, PCG_TOLERANCE, PCG_MAX_ITER)?;
                    let (_, b) = fit_pcg(&factor, y, gamma, &precond, PCG_TOLERANCE, PCG_MAX_ITER)?;
                    (a.iterations as f64, b.iterations as f64)
                }
                None => (f64::NAN, f64::NAN),
            };
            vec![raw, pre, it_raw, it_pre]
        }
        Task::Sample | Task::Verify | Task::Rls => Vec::new(),
    };
    Ok((metrics, bins))
}

fn distinct(labels: &[usize]) -> usize {
    let mut l = labels.to_vec();
    l.sort_unstable();
    l.dedup();
    l.len()
}

struct Job {
    trial: usize,
    sampler: SamplerKind,
    target_index: Option<usize>,
    target: Option<f64>,
    seed: u64,
}

fn run_jobs(p: &Prepared, dpp: Option<&SpectralDpp>, cfg: &ExperimentConfig, task: Task, jobs: &[Job]) -> (Vec<Row>, Vec<BinRow>) {
    let results = map_indexed(Execution::default(), jobs.len(), |j| {
        let job = &jobs[j];
        let mut row = Row {
            trial: job.trial,
            sampler: job.sampler,
            target_index: job.target_index,
            target: job.target,
            converged: None,
            iterations: None,
            k: 0,
            logdet: f64::NAN,
            status: "ok".into(),
            metrics: vec![f64::NAN; metric_names(task).len()],
            landmarks: None,
        };
        let mut bins = Vec::new();
        let d = match draw(p, dpp, cfg, job.sampler, job.target, job.seed) {
            Ok(d) => d,
            Err(e) => {
                row.status = status_of(&e);
                return (row, bins);
            }
        };
        row.converged = d.converged;
        row.iterations = d.iterations;
        row.k = d.landmarks.len();
        row.landmarks = Some(d.landmarks.indices().to_vec());
        match CholeskyFactor::of_kernel(&p.kernel, d.landmarks.indices()) {
            Ok(f) => row.logdet = f.logdet(),
            Err(e) => {
                row.status = status_of(&e);
                return (row, bins);
            }
        }
        match evaluate(p, cfg, task, &d.landmarks, derive_seed(job.seed, 1)) {
            Ok((m, b)) => {
                row.metrics = m;
                bins = b
                    .into_iter()
                    .enumerate()
                    .map(|(i, (low, high, count, metric))| BinRow {
                        trial: job.trial,
                        sampler: job.sampler,
                        target_index: job.target_index,
                        bin: i,
                        low,
                        high,
                        count,
                        metric,
                    })
                    .collect();
            }
            Err(e) => row.status = status_of(&e),
        }
        (row, bins)
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut bins = Vec::new();
    for (r, b) in results {
        rows.push(r);
        bins.extend(b);
    }
    (rows, bins)
}

fn needs_spectral(samplers: &[SamplerKind]) -> bool {
    samplers.iter().any(|s| matches!(s, SamplerKind::Dpp | SamplerKind::Kdpp))
}

/// Evenly spaced targets between the 5% and 95% quantiles of log-dets of
/// preliminary uniform and k-DPP draws.
fn logdet_grid(p: &Prepared, dpp: &SpectralDpp, cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let (lo, hi) = match cfg.logdet_range {
        Some([lo, hi]) => (lo, hi),
        None => {
            let m = cfg.preliminary_draws;
            let logdets = map_indexed(Execution::default(), 2 * m, |i| -> Option<f64> {
                let seed = derive_seed(derive_seed(cfg.seed, PRELIMINARY_STREAM), i as u64);
                let set = if i < m {
                    sample_uniform(p.data.n(), p.k, seed).ok()?
                } else {
                    dpp.sample_k(p.k, &mut seeded(seed)).ok()?
                };
                CholeskyFactor::of_kernel(&p.kernel, set.indices()).ok().map(|f| f.logdet())
            });
            let finite: Vec<f64> = logdets.into_iter().flatten().filter(|v| v.is_finite()).collect();
            if finite.is_empty() {
                return Err(CliError::Data("no preliminary draw had a nonsingular kernel block".into()));
            }
            (quantile(&finite, 0.05)?, quantile(&finite, 0.95)?)
        }
    };
    let t = cfg.targets;
    Ok(if t == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..t).map(|i| lo + (hi - lo) * i as f64 / (t - 1) as f64).collect()
    })
}

fn info(p: &Prepared) -> RunInfo {
    RunInfo {
        n: p.data.n(),
        k: p.k,
        alpha: p.alpha,
        effective_dimension: p.scores.effective_dimension(),
        exact_scores: p.scores.is_exact(),
        gamma: p.regression.as_ref().map(|r| r.gamma),
        n_test: p.regression.as_ref().map(|r| r.test.n()),
        grid: None,
    }
}

/// Runs the configured task without writing any file.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let task = cfg.task()?;
    match task {
        Task::Verify => return verify(cfg),
        Task::Rls => return leverage(cfg),
        _ => {}
    }
    if cfg.sweep {
        return sweep(cfg, task);
    }
    let p = prepare(cfg, task)?;
    let dpp = if needs_spectral(&cfg.samplers) {
        Some(SpectralDpp::new(&p.kernel, p.alpha)?)
    } else {
        None
    };
    let mut samplers = cfg.samplers.clone();
    samplers.sort_unstable();
    samplers.dedup();
    let jobs: Vec<Job> = (0..cfg.trials)
        .flat_map(|trial| {
            samplers.iter().map(move |&sampler| Job {
                trial,
                sampler,
                target_index: None,
                target: cfg.target_logdet.filter(|_| sampler == SamplerKind::Greedy),
                seed: derive_seed(derive_seed(cfg.seed, SAMPLER_STREAM + sampler_code(sampler)), trial as u64),
            })
        })
        .collect();
    let (mut rows, mut bins) = run_jobs(&p, dpp.as_ref(), cfg, task, &jobs);
    rows.sort_by_key(|r| (r.sampler, r.trial));
    bins.sort_by_key(|b| (b.sampler, b.trial, b.bin));
    Ok(Outcome {
        task,
        info: info(&p),
        metric_names: metric_names(task),
        rows,
        bins,
        scores: None,
        checks: Vec::new(),
    })
}

/// Greedy swaps towards a grid of log-determinant targets; one row per
/// target and trial. Non-converged runs are kept and flagged.
pub fn sweep_logdet(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut cfg = cfg.clone();
    cfg.sweep = true;
    execute(&cfg)
}

fn sweep(cfg: &ExperimentConfig, task: Task) -> Result<Outcome, CliError> {
    let p = prepare(cfg, task)?;
    let dpp = SpectralDpp::new(&p.kernel, p.alpha)?;
    let grid = logdet_grid(&p, &dpp, cfg)?;
    let jobs: Vec<Job> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &target)| {
            (0..cfg.trials).map(move |trial| Job {
                trial,
                sampler: SamplerKind::Greedy,
                target_index: Some(i),
                target: Some(target),
                seed: derive_seed(derive_seed(cfg.seed, TARGET_STREAM + i as u64), trial as u64),
            })
        })
        .collect();
    let (mut rows, mut bins) = run_jobs(&p, Some(&dpp), cfg, task, &jobs);
    rows.sort_by_key(|r| (r.target_index, r.trial));
    bins.sort_by_key(|b| (b.target_index, b.trial, b.bin));
    let mut info = info(&p);
    info.grid = Some(grid);
    Ok(Outcome {
        task,
        info,
        metric_names: metric_names(task),
        rows,
        bins,
        scores: None,
        checks: Vec::new(),
    })
}

fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let suite = SuiteConfig {
        instances: cfg.verify_instances,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        ..SuiteConfig::default()
    };
    let checks = run_suite(&suite)?;
    Ok(Outcome {
        task: Task::Verify,
        info: RunInfo::default(),
        metric_names: Vec::new(),
        rows: Vec::new(),
        bins: Vec::new(),
        scores: None,
        checks,
    })
}

fn leverage(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let raw = load_data(cfg)?;
    let (data, _) = scaled(&raw, None, cfg.standardize)?;
    let alpha = data.n() as f64 * cfg.lambda;
    let scores = match cfg.rrls_budget {
        Some(b) if b < data.n() => rls_recursive(&data, cfg.sigma, alpha, b, derive_seed(cfg.seed, SCORE_STREAM))?,
        _ => rls_exact(&kernel_of(cfg, &data)?, alpha)?,
    };
    let d_eff = scores.effective_dimension();
    Ok(Outcome {
        task: Task::Rls,
        info: RunInfo {
            n: data.n(),
            k: cfg.k.unwrap_or_else(|| subset_size(d_eff)),
            alpha,
            effective_dimension: d_eff,
            exact_scores: scores.is_exact(),
            ..RunInfo::default()
        },
        metric_names: Vec::new(),
        rows: Vec::new(),
        bins: Vec::new(),
        scores: Some(scores.scores().to_vec()),
        checks: Vec::new(),
    })
}
