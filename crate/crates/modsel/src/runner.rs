//! Runs every configured algorithm on seeded instances and collects
//! cumulative pseudo-regret curves.

use modsel_core::balancing::{reference_u, RegretBalancer};
use modsel_core::bandit::RegretTable;
use modsel_core::env::{
    draw_reward, gen_ball_env, gen_feature_env, stream_rng, BallEnv, BallEnvOptions, EnvInstance, FeatureEnv,
    FeatureEnvOptions, STATIC_CONTEXT,
};
use modsel_core::fs_scb::{FsScb, FsScbOptions};
use modsel_core::oful::Oful;
use modsel_core::policy::LinearBandit;
use modsel_core::ps_oful::{BallModel, PsOful, PsOfulOptions};
use modsel_core::{Error, Result};
use rayon::prelude::*;

use crate::config::{Algorithm, EnvKind, ExperimentConfig};

/// Streams at or above this index drive policy-internal sampling; lower
/// indices are the per-round noise streams.
const POLICY_STREAM_BASE: u64 = 1 << 63;

/// Per-algorithm cumulative regret curves of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub instance: usize,
    pub seed: u64,
    pub env: EnvInstance,
    pub curves: Vec<(Algorithm, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFailure {
    pub instance: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub table: RegretTable,
    pub outcomes: Vec<InstanceOutcome>,
    pub failures: Vec<InstanceFailure>,
}

impl RunReport {
    pub fn failure_fraction(&self) -> f64 {
        let total = self.outcomes.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }

    /// (mean, sample std, count) of the cumulative regret at the last round.
    pub fn final_stats(&self, algorithm: Algorithm) -> Option<(f64, f64, usize)> {
        let label = algorithm.label();
        self.table.stats(label, self.table.max_round(label))
    }
}

pub fn build_ball_env(cfg: &ExperimentConfig, seed: u64) -> Result<BallEnv> {
    let EnvKind::Ball(variant) = cfg.env else {
        return Err(Error::Config("not a ball environment".into()));
    };
    let options = BallEnvOptions {
        actions: cfg.actions,
        noise_level: cfg.noise_level,
        noise_convention: cfg.noise_convention,
        ..BallEnvOptions::default()
    };
    gen_ball_env(variant, seed, &options)
}

pub fn build_feature_env(cfg: &ExperimentConfig, seed: u64) -> Result<FeatureEnv> {
    let options = FeatureEnvOptions {
        noise_level: cfg.noise_level,
        noise_convention: cfg.noise_convention,
        ..FeatureEnvOptions::default()
    };
    gen_feature_env(seed, &options)
}

/// Policy for a ball environment. Only the oracle sees the true model.
pub fn ball_policy(env: &BallEnv, algorithm: Algorithm, horizon: usize, delta: f64) -> Result<Box<dyn LinearBandit + Send>> {
    let constants = env.constants(horizon, delta);
    let ps = |models: Vec<BallModel>| PsOful::new(models, &constants, PsOfulOptions::default());
    Ok(match algorithm {
        Algorithm::PsOful => Box::new(ps(env.models.clone())?),
        Algorithm::Oracle => Box::new(ps(vec![env.models[env.true_model].clone()])?),
        Algorithm::Itl => Box::new(Oful::new(env.dim(), 1.0, env.param_bound, env.noise_sigma, delta)?),
        Algorithm::RegretBalancing => {
            let bases = env
                .models
                .iter()
                .map(|m| ps(vec![m.clone()]).map(|p| Box::new(p) as Box<dyn LinearBandit + Send>))
                .collect::<Result<Vec<_>>>()?;
            let (d, l, r, m) = (env.dim(), env.feature_bound, env.noise_sigma, env.models.len());
            let max_bc = env.max_effective_radius();
            reference_u(1, d, l, r, m, delta, max_bc)?;
            let bound = move |n: usize| reference_u(n, d, l, r, m, delta, max_bc).unwrap_or(f64::INFINITY);
            Box::new(RegretBalancer::new(bases, Box::new(bound))?)
        }
        other => return Err(Error::Config(format!("`{other}` does not run on ball environments"))),
    })
}

/// Noise for `round` (1-based) of the instance with `seed`.
pub fn round_noise_rng(seed: u64, round: usize) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, round as u64)
}

pub fn run_ball(env: &BallEnv, algorithm: Algorithm, horizon: usize, delta: f64) -> Result<Vec<f64>> {
    let mut policy = ball_policy(env, algorithm, horizon, delta)?;
    let (best, _) = env.actions.best_mean(&env.theta_star)?;
    let mut total = 0.0;
    let mut curve = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let action = policy.propose(&env.actions)?;
        let phi = env.actions.feature(&action)?;
        let mean = env.mean_reward(&phi);
        let y = draw_reward(mean, env.noise_sigma, &mut round_noise_rng(env.seed, t));
        policy.update(&phi, y)?;
        total += (best - mean).max(0.0);
        curve.push(total);
    }
    Ok(curve)
}

pub fn run_feature(env: &FeatureEnv, algorithm: Algorithm, horizon: usize, delta: f64) -> Result<Vec<f64>> {
    let constants = env.constants(horizon, delta);
    let actions = env.true_actions(STATIC_CONTEXT)?;
    let (best, _) = actions.best_mean(&env.theta_star)?;
    let mut total = 0.0;
    let mut curve = Vec::with_capacity(horizon);
    let mut push = |mean: f64| {
        total += (best - mean).max(0.0);
        curve.push(total);
    };
    match algorithm {
        Algorithm::FsScb | Algorithm::Oracle => {
            let maps = if algorithm == Algorithm::Oracle {
                vec![env.maps[env.true_model].clone()]
            } else {
                env.maps.clone()
            };
            let mut policy = FsScb::new(maps, &constants, FsScbOptions::default())?;
            let mut rng = stream_rng(env.seed, POLICY_STREAM_BASE + algorithm as u64);
            for t in 1..=horizon {
                let decision = policy.select(STATIC_CONTEXT, &mut rng)?;
                let mean = env.mean_reward(STATIC_CONTEXT, decision.action)?;
                let y = draw_reward(mean, env.noise_sigma, &mut round_noise_rng(env.seed, t));
                policy.update(STATIC_CONTEXT, decision.action, y)?;
                push(mean);
            }
        }
        Algorithm::OracleOful => {
            let mut policy = Oful::new(env.dim(), 1.0, env.param_bound, env.noise_sigma, delta)?;
            for t in 1..=horizon {
                let action = policy.propose(&actions)?;
                let phi = actions.feature(&action)?;
                let mean = modsel_core::linalg::dot(&phi, &env.theta_star);
                let y = draw_reward(mean, env.noise_sigma, &mut round_noise_rng(env.seed, t));
                policy.update(&phi, y)?;
                push(mean);
            }
        }
        other => return Err(Error::Config(format!("`{other}` does not run on the feature environment"))),
    }
    Ok(curve)
}

/// Generates instance `instance` and runs every configured algorithm on it.
pub fn run_instance(cfg: &ExperimentConfig, instance: usize) -> Result<InstanceOutcome> {
    let seed = cfg.instance_seed(instance);
    let delta = cfg.delta();
    let env = match cfg.env {
        EnvKind::Ball(_) => EnvInstance::ParamSelection(build_ball_env(cfg, seed)?),
        EnvKind::Feature => EnvInstance::FeatureSelection(build_feature_env(cfg, seed)?),
    };
    let curves = cfg
        .algorithms
        .iter()
        .map(|&alg| {
            let curve = match &env {
                EnvInstance::ParamSelection(e) => run_ball(e, alg, cfg.horizon, delta),
                EnvInstance::FeatureSelection(e) => run_feature(e, alg, cfg.horizon, delta),
            }?;
            Ok((alg, curve))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstanceOutcome {
        instance,
        seed,
        env,
        curves,
    })
}

/// Runs all instances, in parallel when allowed. Results do not depend on
/// the thread count: aggregation follows instance order.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<RunReport, rayon::ThreadPoolBuildError> {
    let run = || {
        (0..cfg.n_instances)
            .into_par_iter()
            .map(|i| run_instance(cfg, i).map_err(|e| (i, e)))
            .collect::<Vec<_>>()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run),
        None => run(),
    };
    let mut table = RegretTable::new();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(outcome) => {
                for (alg, curve) in &outcome.curves {
                    table.insert_curve(alg.label(), outcome.instance, curve.clone());
                }
                outcomes.push(outcome);
            }
            Err((instance, err)) => {
                log::warn!("instance {instance} failed: {err}");
                failures.push(InstanceFailure {
                    instance,
                    seed: cfg.instance_seed(instance),
                    message: err.to_string(),
                });
            }
        }
    }
    Ok(RunReport {
        table,
        outcomes,
        failures,
    })
}
