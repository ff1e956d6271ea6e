//! Result files: row CSVs with a reproducibility header and JSON summaries.

use crate::config::{ExperimentConfig, Task};
use crate::experiment::{Outcome, Row};
use crate::CliError;
use diverse_nystrom::eval::{summarize, Summary};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Summary of one group of rows (a sampler, or a sweep target).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub sampler: String,
    pub target: Option<f64>,
    pub rows: usize,
    pub failed: usize,
    pub converged: Option<usize>,
    /// Metric name to mean and 5%/95% quantiles over the `ok` rows.
    pub metrics: BTreeMap<String, Summary>,
}

pub fn summarize_groups(outcome: &Outcome) -> Vec<GroupSummary> {
    let mut groups: Vec<Vec<&Row>> = Vec::new();
    for row in &outcome.rows {
        match groups.last_mut() {
            Some(g) if g[0].sampler == row.sampler && g[0].target_index == row.target_index => g.push(row),
            _ => groups.push(vec![row]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let ok: Vec<&&Row> = g.iter().filter(|r| r.is_ok()).collect();
            let mut metrics = BTreeMap::new();
            let mut add = |name: &str, values: Vec<f64>| {
                let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
                if let Ok(s) = summarize(&finite) {
                    metrics.insert(name.to_string(), s);
                }
            };
            add("logdet", ok.iter().map(|r| r.logdet).collect());
            add("k", ok.iter().map(|r| r.k as f64).collect());
            for (j, name) in outcome.metric_names.iter().enumerate() {
                add(name, ok.iter().map(|r| r.metrics[j]).collect());
            }
            GroupSummary {
                sampler: g[0].sampler.name().to_string(),
                target: g[0].target,
                rows: g.len(),
                failed: g.len() - ok.len(),
                converged: g[0].converged.map(|_| g.iter().filter(|r| r.converged == Some(true)).count()),
                metrics,
            }
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Comment lines that reproduce the run.
fn header(cfg: &ExperimentConfig) -> Result<String, CliError> {
    Ok(format!(
        "# dnys {}\n# seed={}\n# config={}\n",
        opt(cfg.task),
        cfg.seed,
        serde_json::to_string(cfg)?
    ))
}

fn csv_file(path: &Path, cfg: &ExperimentConfig) -> Result<csv::Writer<std::fs::File>, CliError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(header(cfg)?.as_bytes())?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows(path: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<(), CliError> {
    let mut w = csv_file(path, cfg)?;
    let mut head: Vec<&str> = vec!["trial", "sampler", "target", "converged", "iterations", "k", "logdet", "status"];
    head.extend(&outcome.metric_names);
    let with_landmarks = outcome.task == Task::Sample;
    if with_landmarks {
        head.push("landmarks");
    }
    w.write_record(&head)?;
    for r in &outcome.rows {
        let mut rec = vec![
            r.trial.to_string(),
            r.sampler.name().to_string(),
            opt(r.target),
            opt(r.converged),
            opt(r.iterations),
            r.k.to_string(),
            r.logdet.to_string(),
            r.status.clone(),
        ];
        rec.extend(r.metrics.iter().map(f64::to_string));
        if with_landmarks {
            let idx: Vec<String> = r.landmarks.iter().flatten().map(usize::to_string).collect();
            rec.push(idx.join(" "));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_bins(path: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<(), CliError> {
    let mut w = csv_file(path, cfg)?;
    w.write_record(["trial", "sampler", "target_index", "bin", "low", "high", "count", "metric"])?;
    for b in &outcome.bins {
        w.write_record([
            b.trial.to_string(),
            b.sampler.name().to_string(),
            opt(b.target_index),
            b.bin.to_string(),
            b.low.to_string(),
            b.high.to_string(),
            b.count.to_string(),
            opt(b.metric),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_scores(path: &Path, cfg: &ExperimentConfig, scores: &[f64]) -> Result<(), CliError> {
    let mut w = csv_file(path, cfg)?;
    w.write_record(["index", "score"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_checks(path: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<(), CliError> {
    let mut w = csv_file(path, cfg)?;
    w.write_record(["check", "worst", "limit", "passed"])?;
    for c in &outcome.checks {
        w.write_record([c.name.clone(), c.worst.to_string(), c.limit.to_string(), c.passed.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    task: String,
    seed: u64,
    sweep: bool,
    info: &'a crate::experiment::RunInfo,
    groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
}

/// Writes every file of the outcome into `cfg.out_dir` and returns the
/// paths in creation order.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir)?;
    let stem = if cfg.sweep {
        format!("{}_sweep", outcome.task)
    } else {
        outcome.task.to_string()
    };
    let mut files = Vec::new();
    if !outcome.checks.is_empty() {
        let p = dir.join(format!("{stem}_checks.csv"));
        write_checks(&p, cfg, outcome)?;
        files.push(p);
    }
    if let Some(scores) = &outcome.scores {
        let p = dir.join(format!("{stem}_scores.csv"));
        write_scores(&p, cfg, scores)?;
        files.push(p);
    }
    if !outcome.rows.is_empty() {
        let p = dir.join(format!("{stem}_rows.csv"));
        write_rows(&p, cfg, outcome)?;
        files.push(p);
    }
    if !outcome.bins.is_empty() {
        let p = dir.join(format!("{stem}_bins.csv"));
        write_bins(&p, cfg, outcome)?;
        files.push(p);
    }
    let summary = SummaryFile {
        task: outcome.task.to_string(),
        seed: cfg.seed,
        sweep: cfg.sweep,
        info: &outcome.info,
        groups: summarize_groups(outcome),
        passed: (!outcome.checks.is_empty()).then(|| outcome.passed()),
    };
    let p = dir.join(format!("{stem}_summary.json"));
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(&p, text)?;
    files.push(p);
    Ok(files)
}
