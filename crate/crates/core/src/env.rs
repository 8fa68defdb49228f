//! Seeded synthetic environments for the parameter- and feature-selection
//! experiments.
//!
//! Every instance is a pure function of its configuration and seed; all
//! randomness comes from a ChaCha8 stream seeded with `seed`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bandit::{Action, ActionFeature, ActionSet, AssumptionConstants};
use crate::error::{Error, Result};
use crate::fs_scb::FeatureMapModel;
use crate::linalg::{dot, norm};
use crate::ps_oful::BallModel;

/// Standard normal draw.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Independent generator for `(seed, stream)`; used to key noise by round
/// so that schedules and algorithms cannot shift each other's draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform direction on the unit sphere (normalized Gaussian vector).
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = norm(&g);
        if n > 1e-300 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform sample from the closed ball `B(center, radius)`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let d = center.len();
    let dir = sample_unit_sphere(d, rng);
    let u: f64 = rng.random();
    let r = radius * libm::pow(u, 1.0 / d as f64);
    center.iter().zip(dir).map(|(c, x)| c + r * x).collect()
}

/// Mean reward plus Gaussian noise with standard deviation `sigma`.
pub fn draw_reward<R: Rng + ?Sized>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        mean
    } else {
        mean + sigma * standard_normal(rng)
    }
}

/// Ball layouts used by the parameter-selection experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BallVariant {
    Overlapping,
    Disjoint,
    Balancing20,
}

impl BallVariant {
    pub fn name(self) -> &'static str {
        match self {
            BallVariant::Overlapping => "overlapping",
            BallVariant::Disjoint => "disjoint",
            BallVariant::Balancing20 => "balancing20",
        }
    }

    /// (coordinate range of the center, radius) of each ball.
    fn layout(self) -> Vec<((f64, f64), f64)> {
        const RADII: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
        match self {
            BallVariant::Overlapping => RADII.iter().map(|&b| ((1.0, 2.0), b)).collect(),
            BallVariant::Disjoint => [(1.0, 2.0), (3.0, 4.0), (-2.0, -1.0), (-4.0, -3.0), (4.0, 5.0)]
                .into_iter()
                .zip(RADII)
                .collect(),
            BallVariant::Balancing20 => [((1.0, 2.0), 0.3), ((2.0, 3.0), 0.5), ((3.0, 4.0), 0.3), ((4.0, 5.0), 0.2)]
                .into_iter()
                .flat_map(|group| core::iter::repeat_n(group, 5))
                .collect(),
        }
    }

    /// Declared parameter-norm bound, when the layout fixes one.
    fn declared_param_bound(self) -> Option<f64> {
        match self {
            BallVariant::Overlapping => None,
            BallVariant::Disjoint | BallVariant::Balancing20 => Some(7.0),
        }
    }
}

impl fmt::Display for BallVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BallVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlapping" => Ok(BallVariant::Overlapping),
            "disjoint" => Ok(BallVariant::Disjoint),
            "balancing20" => Ok(BallVariant::Balancing20),
            other => Err(Error::Config(alloc::format!("unknown ball variant `{other}`"))),
        }
    }
}

/// Action set offered in the ball environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    UnitBall,
    /// K fixed points drawn uniformly on the unit sphere.
    Finite(usize),
}

/// How the second argument of `N(0, x)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseConvention {
    StdDev,
    Variance,
}

impl NoiseConvention {
    pub fn sigma(self, value: f64) -> f64 {
        match self {
            NoiseConvention::StdDev => value,
            NoiseConvention::Variance => libm::sqrt(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallEnvOptions {
    pub actions: ActionSpace,
    /// Noise level as written in the experiment description.
    pub noise_level: f64,
    pub noise_convention: NoiseConvention,
    pub center_error: f64,
}

impl Default for BallEnvOptions {
    fn default() -> Self {
        Self {
            actions: ActionSpace::UnitBall,
            noise_level: 0.1,
            noise_convention: NoiseConvention::StdDev,
            center_error: 0.1,
        }
    }
}

/// Parameter-selection instance: θ* drawn from one of M balls.
#[derive(Debug, Clone, PartialEq)]
pub struct BallEnv {
    pub variant: BallVariant,
    pub seed: u64,
    pub theta_star: Vec<f64>,
    /// Index of the ball θ* was drawn from; hidden from the learners.
    pub true_model: usize,
    /// True centers μ_i.
    pub true_centers: Vec<Vec<f64>>,
    /// What the agent is told: estimated centers and radii.
    pub models: Vec<BallModel>,
    pub actions: ActionSet,
    pub noise_sigma: f64,
    pub feature_bound: f64,
    pub param_bound: f64,
    pub reward_bound: f64,
}

pub fn gen_ball_env(variant: BallVariant, seed: u64, options: &BallEnvOptions) -> Result<BallEnv> {
    const DIM: usize = 2;
    if !(options.center_error >= 0.0) || !(options.noise_level >= 0.0) {
        return Err(Error::Config("center error and noise level must be non-negative".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = variant.layout();
    let true_centers: Vec<Vec<f64>> = layout
        .iter()
        .map(|&((lo, hi), _)| (0..DIM).map(|_| rng.random_range(lo..hi)).collect())
        .collect();
    let true_model = rng.random_range(0..layout.len());
    let theta_star = sample_uniform_ball(&true_centers[true_model], layout[true_model].1, &mut rng);
    let models: Vec<BallModel> = layout
        .iter()
        .zip(&true_centers)
        .map(|(&(_, radius), mu)| {
            let dir = sample_unit_sphere(DIM, &mut rng);
            let mag = options.center_error * rng.random::<f64>();
            let estimate = mu.iter().zip(dir).map(|(m, u)| m + mag * u).collect();
            BallModel::new(estimate, radius, options.center_error)
        })
        .collect();
    let actions = match options.actions {
        ActionSpace::UnitBall => ActionSet::UnitBall { dim: DIM },
        ActionSpace::Finite(0) => return Err(Error::Config("finite action set needs K >= 1".to_string())),
        ActionSpace::Finite(k) => ActionSet::Finite(
            (0..k)
                .map(|_| ActionFeature::new(sample_unit_sphere(DIM, &mut rng)))
                .collect(),
        ),
    };
    let feature_bound = 1.0;
    let derived = models
        .iter()
        .map(|m| norm(&m.center_estimate) + m.effective_radius())
        .fold(0.0, f64::max);
    let env = BallEnv {
        variant,
        seed,
        theta_star,
        true_model,
        true_centers,
        param_bound: variant.declared_param_bound().unwrap_or(derived),
        reward_bound: feature_bound * derived,
        feature_bound,
        models,
        actions,
        noise_sigma: options.noise_convention.sigma(options.noise_level),
    };
    env.check_assumptions()?;
    Ok(env)
}

impl BallEnv {
    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// θ* within its ball, μ̂ within c of μ, and |⟨φ, θ*⟩| ≤ G.
    pub fn check_assumptions(&self) -> Result<()> {
        let i = self.true_model;
        let model = &self.models[i];
        let gap = |a: &[f64], b: &[f64]| norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if gap(&self.theta_star, &self.true_centers[i]) > model.radius + 1e-12 {
            return Err(Error::Config("theta* outside its generating ball".to_string()));
        }
        for (m, mu) in self.models.iter().zip(&self.true_centers) {
            if gap(&m.center_estimate, mu) > m.center_error + 1e-12 {
                return Err(Error::Config("center estimate farther than its error bound".to_string()));
            }
        }
        if !model.contains(&self.theta_star) {
            return Err(Error::Config("theta* outside the agent's ball".to_string()));
        }
        if self.feature_bound * norm(&self.theta_star) > self.reward_bound + 1e-12 {
            return Err(Error::Config("mean reward bound violated".to_string()));
        }
        if let ActionSet::Finite(set) = &self.actions {
            if set.iter().any(|a| a.norm() > self.feature_bound + 1e-12) {
                return Err(Error::Config("feature norm bound violated".to_string()));
            }
        }
        Ok(())
    }

    pub fn mean_reward(&self, feature: &[f64]) -> f64 {
        dot(feature, &self.theta_star)
    }

    pub fn max_effective_radius(&self) -> f64 {
        self.models.iter().map(BallModel::effective_radius).fold(0.0, f64::max)
    }

    pub fn regret(&self, action: &Action) -> Result<f64> {
        crate::bandit::instantaneous_regret(&self.actions, &self.theta_star, action)
    }

    pub fn constants(&self, horizon: usize, delta: f64) -> AssumptionConstants {
        AssumptionConstants {
            dim: self.dim(),
            feature_bound: self.feature_bound,
            param_bound: self.param_bound,
            reward_bound: self.reward_bound,
            noise_scale: self.noise_sigma,
            horizon,
            num_models: self.models.len(),
            num_actions: match &self.actions {
                ActionSet::Finite(s) => s.len(),
                ActionSet::UnitBall { .. } => 0,
            },
            delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEnvOptions {
    pub dim: usize,
    pub num_actions: usize,
    pub num_models: usize,
    pub feature_bound: f64,
    pub noise_level: f64,
    pub noise_convention: NoiseConvention,
}

impl Default for FeatureEnvOptions {
    fn default() -> Self {
        Self {
            dim: 10,
            num_actions: 50,
            num_models: 10,
            feature_bound: 4.0,
            noise_level: 0.1,
            noise_convention: NoiseConvention::Variance,
        }
    }
}

/// Feature-selection instance: rewards are linear in the first map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEnv {
    pub seed: u64,
    pub theta_star: Vec<f64>,
    pub true_model: usize,
    pub maps: Vec<FeatureMapModel>,
    pub noise_sigma: f64,
    pub feature_bound: f64,
    pub param_bound: f64,
    pub reward_bound: f64,
}

/// The single static context of the feature-selection instances.
pub const STATIC_CONTEXT: usize = 0;

pub fn gen_feature_env(seed: u64, options: &FeatureEnvOptions) -> Result<FeatureEnv> {
    if options.dim == 0 || options.num_actions == 0 || options.num_models == 0 {
        return Err(Error::Config("dimension, actions and models must be at least 1".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta: Vec<f64> = (0..options.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&theta);
    theta.iter_mut().for_each(|x| *x /= n);
    let maps = (0..options.num_models)
        .map(|id| {
            let row: Vec<ActionFeature> = (0..options.num_actions)
                .map(|_| ActionFeature::new((0..options.dim).map(|_| rng.random::<f64>()).collect()))
                .collect();
            FeatureMapModel::new(id, vec![row])
        })
        .collect::<Result<Vec<_>>>()?;
    let param_bound = 1.0;
    let env = FeatureEnv {
        seed,
        theta_star: theta,
        true_model: 0,
        maps,
        noise_sigma: options.noise_convention.sigma(options.noise_level),
        feature_bound: options.feature_bound,
        param_bound,
        reward_bound: options.feature_bound * param_bound,
    };
    env.check_assumptions()?;
    Ok(env)
}

impl FeatureEnv {
    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn num_actions(&self) -> usize {
        self.maps[0].num_actions()
    }

    pub fn check_assumptions(&self) -> Result<()> {
        if self.maps.iter().any(|m| m.max_norm() > self.feature_bound) {
            return Err(Error::Config("feature norm bound violated".to_string()));
        }
        if norm(&self.theta_star) > self.param_bound + 1e-12 {
            return Err(Error::Config("parameter norm bound violated".to_string()));
        }
        Ok(())
    }

    /// Action set of the true map in a context.
    pub fn true_actions(&self, context: usize) -> Result<ActionSet> {
        let map = &self.maps[self.true_model];
        (0..map.num_actions())
            .map(|a| map.feature(context, a).cloned())
            .collect::<Result<Vec<_>>>()
            .map(ActionSet::Finite)
    }

    pub fn mean_reward(&self, context: usize, action: usize) -> Result<f64> {
        Ok(dot(self.maps[self.true_model].feature(context, action)?, &self.theta_star))
    }

    pub fn regret(&self, context: usize, action: usize) -> Result<f64> {
        crate::bandit::instantaneous_regret(&self.true_actions(context)?, &self.theta_star, &Action::Index(action))
    }

    pub fn constants(&self, horizon: usize, delta: f64) -> AssumptionConstants {
        AssumptionConstants {
            dim: self.dim(),
            feature_bound: self.feature_bound,
            param_bound: self.param_bound,
            reward_bound: self.reward_bound,
            noise_scale: self.noise_sigma,
            horizon,
            num_models: self.maps.len(),
            num_actions: self.num_actions(),
            delta,
        }
    }
}

/// Any generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvInstance {
    ParamSelection(BallEnv),
    FeatureSelection(FeatureEnv),
}

impl EnvInstance {
    pub fn seed(&self) -> u64 {
        match self {
            EnvInstance::ParamSelection(e) => e.seed,
            EnvInstance::FeatureSelection(e) => e.seed,
        }
    }

    pub fn true_model(&self) -> usize {
        match self {
            EnvInstance::ParamSelection(e) => e.true_model,
            EnvInstance::FeatureSelection(e) => e.true_model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_radius_returns_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_uniform_ball(&[1.5, -2.0], 0.0, &mut rng), vec![1.5, -2.0]);
    }

    #[test]
    fn ball_env_is_deterministic() {
        let opts = BallEnvOptions::default();
        for v in [BallVariant::Overlapping, BallVariant::Disjoint, BallVariant::Balancing20] {
            assert_eq!(gen_ball_env(v, 42, &opts).unwrap(), gen_ball_env(v, 42, &opts).unwrap());
        }
    }

    #[test]
    fn overlapping_centers_in_unit_square() {
        for seed in 0..50 {
            let env = gen_ball_env(BallVariant::Overlapping, seed, &BallEnvOptions::default()).unwrap();
            assert_eq!(env.models.len(), 5);
            for mu in &env.true_centers {
                assert!(mu.iter().all(|x| (1.0..=2.0).contains(x)));
            }
            assert!(env.models[env.true_model].contains(&env.theta_star));
        }
    }

    #[test]
    fn variant_layouts() {
        let env = gen_ball_env(BallVariant::Balancing20, 3, &BallEnvOptions::default()).unwrap();
        assert_eq!(env.models.len(), 20);
        assert_eq!(env.param_bound, 7.0);
        let radii: Vec<f64> = env.models.iter().map(|m| m.radius).collect();
        assert_eq!(&radii[..6], &[0.3, 0.3, 0.3, 0.3, 0.3, 0.5]);
        let env = gen_ball_env(BallVariant::Disjoint, 3, &BallEnvOptions::default()).unwrap();
        assert!(env.true_centers[3].iter().all(|x| (-4.0..=-3.0).contains(x)));
        assert!("bogus".parse::<BallVariant>().is_err());
    }

    #[test]
    fn feature_env_shape() {
        let env = gen_feature_env(9, &FeatureEnvOptions::default()).unwrap();
        assert!((norm(&env.theta_star) - 1.0).abs() < 1e-12);
        assert_eq!(env.maps.len(), 10);
        assert_eq!(env.num_actions(), 50);
        assert!(env.maps.iter().all(|m| m.max_norm() <= 10f64.sqrt()));
        assert_eq!(env, gen_feature_env(9, &FeatureEnvOptions::default()).unwrap());
        assert!((env.noise_sigma - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn noise_free_reward_is_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(draw_reward(0.7, 0.0, &mut rng), 0.7);
    }

    #[test]
    fn stream_rng_is_keyed() {
        let a: u64 = stream_rng(5, 1).random();
        let b: u64 = stream_rng(5, 1).random();
        let c: u64 = stream_rng(5, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
