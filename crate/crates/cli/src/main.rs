use clap::Parser;
use diverse_nystrom::datasets::ColumnSelector;
use diverse_nystrom::eval::Metric;
use diverse_nystrom::krr::DChoice;
use diverse_nystrom_cli::config::{ExperimentConfig, Generator, SamplerKind, Task};
use diverse_nystrom_cli::{exit, run, CliError};
use serde::de::DeserializeOwned;
use std::path::PathBuf;
use std::process::ExitCode;

/// Landmark selection experiments for Nyström kernel approximation.
#[derive(Debug, Parser)]
#[command(name = "dnys", version, allow_negative_numbers = true)]
struct Args {
    task: Task,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Column name or 0-based index.
    #[arg(long)]
    target_column: Option<ColumnSelector>,
    #[arg(long)]
    label_column: Option<ColumnSelector>,
    /// Generator as JSON, e.g. '{"kind":"toy_regression","n":1000}'.
    #[arg(long, value_parser = json_arg::<Generator>)]
    generator: Option<Generator>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    samplers: Option<Vec<SamplerKind>>,
    #[arg(long)]
    k: Option<usize>,
    /// Run the greedy log-determinant sweep.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    preliminary_draws: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
    logdet_range: Option<Vec<f64>>,
    #[arg(long)]
    target_logdet: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// mape or smape.
    #[arg(long, value_parser = name_arg::<Metric>)]
    metric: Option<Metric>,
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    pooled_standardization: bool,
    #[arg(long)]
    rrls_budget: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// uniform or inverse-leverage.
    #[arg(long, value_parser = name_arg::<DChoice>)]
    d_choice: Option<DChoice>,
    #[arg(long)]
    verify_instances: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    gram_cache: Option<PathBuf>,
}

fn json_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn name_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

macro_rules! set {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = v; })*
    };
}

macro_rules! set_opt {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = Some(v); })*
    };
}

fn resolve(args: Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.task = Some(args.task);
    if args.data.is_some() {
        cfg.generator = None;
    }
    if args.generator.is_some() {
        cfg.data = None;
    }
    set!(cfg, args, sigma, lambda, samplers, targets, preliminary_draws, epsilon, max_iter, seed, trials);
    set!(cfg, args, folds, quantile, bins, metric, restarts, d_choice, verify_instances, mc_samples, out_dir);
    set_opt!(cfg, args, data, target_column, label_column, generator, k, target_logdet, gamma);
    set_opt!(cfg, args, rrls_budget, clusters, gram_cache);
    if let Some(r) = args.logdet_range {
        cfg.logdet_range = Some([r[0], r[1]]);
    }
    cfg.sweep |= args.sweep;
    cfg.pooled_standardization |= args.pooled_standardization;
    if args.no_standardize {
        cfg.standardize = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match resolve(args).and_then(|cfg| run(&cfg)) {
        Ok((outcome, files)) => {
            for c in &outcome.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{:<24} worst={:.3e} limit={:.1e} {verdict}", c.name, c.worst, c.limit);
            }
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.passed() {
                exit::SUCCESS
            } else {
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::CONFIG_OR_DATA
        }
    };
    ExitCode::from(code as u8)
}
