//! Experiment harness for linear-bandit model selection: configuration,
//! seeded parallel runs, regret CSV, SVG plots and run manifests.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

use std::fs;

pub use config::{Algorithm, ConfigError, EnvKind, Experiment, ExperimentConfig, RawConfig};
pub use runner::{run_experiment, run_instance, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Output(#[from] output::OutputError),
    #[error("{failed} of {total} instances failed, above the tolerated fraction {tolerance}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        tolerance: f64,
    },
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Runs the experiment and writes `regret.csv`, `regret.svg` and
/// `manifest.toml` under `<out>/<experiment>/`.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let report = run_experiment(cfg)?;
    let dir = cfg.experiment_dir();
    fs::create_dir_all(&dir).map_err(output::OutputError::from)?;
    output::write_manifest(cfg, &report, &dir.join("manifest.toml"))?;
    if !report.table.is_empty() {
        output::write_csv(&report.table, &dir.join("regret.csv"))?;
        plot::emit_plot(&report.table, cfg.experiment.name(), &dir.join("regret.svg"))?;
    }
    if report.outcomes.is_empty() || report.failure_fraction() > cfg.failure_tolerance {
        return Err(HarnessError::TooManyFailures {
            failed: report.failures.len(),
            total: cfg.n_instances,
            tolerance: cfg.failure_tolerance,
        });
    }
    Ok(report)
}
