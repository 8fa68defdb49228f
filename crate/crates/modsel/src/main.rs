use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modsel::{run_and_write, Algorithm, Experiment, HarnessError, RawConfig};

#[derive(Debug, Parser)]
#[command(name = "modsel", version, about = "Model selection experiments for linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write regret.csv, regret.svg and manifest.toml.
    Run {
        /// TOML config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        /// Environment for `custom` runs (overlapping, disjoint, balancing20, feature).
        #[arg(long)]
        env: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// `one-over-T` or a number in (0, 1).
        #[arg(long)]
        delta: Option<String>,
        /// Comma-separated algorithm labels.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the named experiments and algorithm labels.
    ListExperiments,
    /// Check a config file without running it.
    ValidateConfig { file: PathBuf },
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run {
            config,
            experiment,
            env,
            horizon,
            instances,
            seed,
            delta,
            algorithms,
            out,
            threads,
        } => {
            let base = match config {
                Some(path) => RawConfig::load(&path)?,
                None => RawConfig::default(),
            };
            let overrides = RawConfig {
                experiment,
                env,
                horizon,
                instances,
                seed,
                delta,
                algorithms,
                out,
                threads,
                ..RawConfig::default()
            };
            let cfg = base.merge(overrides).resolve()?;
            let report = run_and_write(&cfg)?;
            for alg in &cfg.algorithms {
                if let Some((mean, std, n)) = report.final_stats(*alg) {
                    println!("{:<18} final regret {mean:>10.3} ± {std:.3} (n = {n})", alg.label());
                }
            }
            if !report.failures.is_empty() {
                println!("{} instance(s) failed and were excluded", report.failures.len());
            }
            println!("wrote {}", cfg.experiment_dir().display());
            Ok(())
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.description());
            }
            let labels: Vec<&str> = Algorithm::ALL.iter().map(|a| a.label()).collect();
            println!("\nalgorithms: {}", labels.join(", "));
            Ok(())
        }
        Command::ValidateConfig { file } => {
            let cfg = RawConfig::load(&file)?.resolve()?;
            println!(
                "ok: {} on {} with T = {}, {} instances, delta = {}",
                cfg.experiment,
                cfg.env.name(),
                cfg.horizon,
                cfg.n_instances,
                cfg.delta()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,modsel_core::ps_oful=error")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
