//! Experiment configuration, read from JSON and overridable from the
//! command line.

use crate::CliError;
use diverse_nystrom::datasets::ColumnSelector;
use diverse_nystrom::eval::Metric;
use diverse_nystrom::krr::DChoice;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Nystrom,
    Kpca,
    Krr,
    Kkmeans,
    Precond,
    Verify,
    Sample,
    Rls,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Uniform,
    Rls,
    Dpp,
    Kdpp,
    Greedy,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Rls => "rls",
            SamplerKind::Dpp => "dpp",
            SamplerKind::Kdpp => "kdpp",
            SamplerKind::Greedy => "greedy",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

/// Synthetic data sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    ToyRegression {
        n: usize,
        #[serde(default = "default_toy_d")]
        d: usize,
        #[serde(default = "default_toy_offset")]
        offset: f64,
        #[serde(default = "default_toy_noise")]
        noise: f64,
    },
    FiveBumps,
    Uniform {
        n: usize,
        d: usize,
    },
}

fn default_toy_d() -> usize {
    2
}

fn default_toy_offset() -> f64 {
    20.0
}

fn default_toy_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    /// CSV file; exclusive with `generator`.
    pub data: Option<PathBuf>,
    pub target_column: Option<ColumnSelector>,
    pub label_column: Option<ColumnSelector>,
    pub generator: Option<Generator>,
    pub sigma: f64,
    /// Ridge per point; `α = n·λ`.
    pub lambda: f64,
    pub samplers: Vec<SamplerKind>,
    /// Subset size; rounded effective dimension when absent.
    pub k: Option<usize>,
    /// Run the greedy determinant sweep instead of plain sampler trials.
    pub sweep: bool,
    pub targets: usize,
    pub preliminary_draws: usize,
    /// Explicit `[low, high]` log-determinant range for the sweep.
    pub logdet_range: Option<[f64; 2]>,
    /// Target log-determinant for the `greedy` sampler outside a sweep.
    pub target_logdet: Option<f64>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub trials: usize,
    /// KRR ridge; chosen by cross-validation when absent.
    pub gamma: Option<f64>,
    pub folds: usize,
    pub quantile: f64,
    pub bins: usize,
    pub metric: Metric,
    pub standardize: bool,
    /// Standardize train and test with pooled statistics.
    pub pooled_standardization: bool,
    /// Use recursive leverage scores with this many points at the leaves.
    pub rrls_budget: Option<usize>,
    /// Number of clusters; number of distinct labels when absent.
    pub clusters: Option<usize>,
    pub restarts: usize,
    pub d_choice: DChoice,
    pub verify_instances: usize,
    pub mc_samples: usize,
    pub out_dir: PathBuf,
    /// Binary Gram matrix cache, created when missing.
    pub gram_cache: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: None,
            data: None,
            target_column: None,
            label_column: None,
            generator: None,
            sigma: 1.0,
            lambda: 1e-3,
            samplers: vec![SamplerKind::Uniform, SamplerKind::Rls, SamplerKind::Kdpp],
            k: None,
            sweep: false,
            targets: 20,
            preliminary_draws: 50,
            logdet_range: None,
            target_logdet: None,
            epsilon: 0.1,
            max_iter: 2000,
            seed: 0,
            trials: 10,
            gamma: None,
            folds: 5,
            quantile: 0.7,
            bins: 10,
            metric: Metric::Mape,
            standardize: true,
            pooled_standardization: false,
            rrls_budget: None,
            clusters: None,
            restarts: 10,
            d_choice: DChoice::Uniform,
            verify_instances: 20,
            mc_samples: 10_000,
            out_dir: PathBuf::from("results"),
            gram_cache: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<(), CliError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be at least 1")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn task(&self) -> Result<Task, CliError> {
        self.task.ok_or_else(|| CliError::Config("task is not set".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let task = self.task()?;
        positive("sigma", self.sigma)?;
        positive("lambda", self.lambda)?;
        positive("epsilon", self.epsilon)?;
        at_least_one("trials", self.trials)?;
        at_least_one("targets", self.targets)?;
        at_least_one("preliminary_draws", self.preliminary_draws)?;
        at_least_one("max_iter", self.max_iter)?;
        at_least_one("folds", self.folds)?;
        at_least_one("bins", self.bins)?;
        at_least_one("restarts", self.restarts)?;
        at_least_one("verify_instances", self.verify_instances)?;
        at_least_one("mc_samples", self.mc_samples)?;
        if let Some(k) = self.k {
            at_least_one("k", k)?;
        }
        if let Some(g) = self.gamma {
            positive("gamma", g)?;
        }
        if let Some(c) = self.clusters {
            at_least_one("clusters", c)?;
        }
        if let Some(b) = self.rrls_budget {
            at_least_one("rrls_budget", b)?;
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(CliError::Config(format!("quantile must lie in (0, 1), got {}", self.quantile)));
        }
        if let Some([lo, hi]) = self.logdet_range {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(CliError::Config("logdet_range must be finite with low <= high".into()));
            }
        }
        if task == Task::Verify {
            return Ok(());
        }
        match (&self.data, &self.generator) {
            (Some(_), Some(_)) => return Err(CliError::Config("set either data or generator, not both".into())),
            (None, None) => return Err(CliError::Config("one of data or generator is required".into())),
            _ => {}
        }
        if self.samplers.is_empty() && !self.sweep && !matches!(task, Task::Rls) {
            return Err(CliError::Config("samplers must not be empty".into()));
        }
        if self.samplers.contains(&SamplerKind::Greedy) && !self.sweep && self.target_logdet.is_none() {
            return Err(CliError::Config("sampler greedy needs target_logdet outside a sweep".into()));
        }
        if self.sweep && matches!(task, Task::Rls | Task::Sample) {
            return Err(CliError::Config(format!("task {task} does not support sweep")));
        }
        if task == Task::Krr && self.data.is_some() && self.target_column.is_none() {
            return Err(CliError::Config("task krr needs target_column".into()));
        }
        Ok(())
    }

    pub fn metric_name(&self) -> &'static str {
        match self.metric {
            Metric::Mape => "mape",
            Metric::Smape => "smape",
        }
    }
}
