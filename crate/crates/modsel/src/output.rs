//! Regret CSV and run manifest.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use modsel_core::bandit::{RegretTable, RoundSummary};
use serde::Serialize;

use crate::config::{ExperimentConfig, RawConfig};
use crate::runner::RunReport;
use modsel_core::env::EnvInstance;

pub const CSV_HEADER: [&str; 5] = ["algorithm", "round", "mean_cum_regret", "std_cum_regret", "n_instances"];

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("regret table is empty")]
    EmptyTable,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error("cannot serialize manifest: {0}")]
    Manifest(#[from] toml::ser::Error),
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_bytes(table: &RegretTable) -> Result<Vec<u8>, OutputError> {
    if table.is_empty() {
        return Err(OutputError::EmptyTable);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in table.summary() {
        w.write_record([
            row.algorithm,
            row.round.to_string(),
            format_float(row.mean),
            format_float(row.std),
            row.n_instances.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| OutputError::Io(e.into_error()))
}

/// Writes the per-round summary. An empty table is an error and leaves no file.
pub fn write_csv(table: &RegretTable, path: &Path) -> Result<(), OutputError> {
    let bytes = csv_bytes(table)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<RoundSummary>, OutputError> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(OutputError::Malformed("unexpected header".into()));
    }
    let field = |rec: &csv::StringRecord, i: usize| rec.get(i).unwrap_or_default().to_string();
    let num = |s: String| s.parse::<f64>().map_err(|_| OutputError::Malformed(format!("bad number `{s}`")));
    let count = |s: String| s.parse::<usize>().map_err(|_| OutputError::Malformed(format!("bad count `{s}`")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(RoundSummary {
            algorithm: field(&rec, 0),
            round: count(field(&rec, 1))?,
            mean: num(field(&rec, 2))?,
            std: num(field(&rec, 3))?,
            n_instances: count(field(&rec, 4))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: RawConfig,
    delta: f64,
    succeeded: usize,
    failed: usize,
    instance: Vec<InstanceEntry>,
    failure: Vec<FailureEntry<'a>>,
}

#[derive(Debug, Serialize)]
struct InstanceEntry {
    index: usize,
    seed: u64,
    env: &'static str,
    true_model: usize,
    theta_star: Vec<f64>,
    param_bound: f64,
    reward_bound: f64,
    noise_sigma: f64,
}

#[derive(Debug, Serialize)]
struct FailureEntry<'a> {
    index: usize,
    seed: u64,
    message: &'a str,
}

/// Resolved config, per-instance seeds and derived constants as TOML.
pub fn manifest_string(cfg: &ExperimentConfig, report: &RunReport) -> Result<String, OutputError> {
    let instance = report
        .outcomes
        .iter()
        .map(|o| {
            let (env, theta, g, s, sigma) = match &o.env {
                EnvInstance::ParamSelection(e) => (e.variant.name(), &e.theta_star, e.reward_bound, e.param_bound, e.noise_sigma),
                EnvInstance::FeatureSelection(e) => ("feature", &e.theta_star, e.reward_bound, e.param_bound, e.noise_sigma),
            };
            InstanceEntry {
                index: o.instance,
                seed: o.seed,
                env,
                true_model: o.env.true_model(),
                theta_star: theta.clone(),
                param_bound: s,
                reward_bound: g,
                noise_sigma: sigma,
            }
        })
        .collect();
    let failure = report
        .failures
        .iter()
        .map(|f| FailureEntry {
            index: f.instance,
            seed: f.seed,
            message: &f.message,
        })
        .collect();
    let manifest = Manifest {
        config: cfg.to_raw(),
        delta: cfg.delta(),
        succeeded: report.outcomes.len(),
        failed: report.failures.len(),
        instance,
        failure,
    };
    Ok(toml::to_string(&manifest)?)
}

pub fn write_manifest(cfg: &ExperimentConfig, report: &RunReport, path: &Path) -> Result<(), OutputError> {
    let text = manifest_string(cfg, report)?;
    fs::File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
