//! Feature-selection SquareCB.
//!
//! One ridge expert per candidate feature map feeds the square-loss
//! aggregator. Actions are drawn by inverse-gap weighting around the
//! aggregator's greedy action.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::aggregator::{AggregatorState, DEFAULT_ETA};
use crate::bandit::{argmax, ActionFeature, AssumptionConstants};
use crate::error::{check_dim, invalid, Error, Result};
use crate::regressor::RegressorState;

/// A candidate feature map over a finite set of contexts and actions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapModel {
    pub map_id: usize,
    /// `table[context][action]`
    table: Vec<Vec<ActionFeature>>,
}

impl FeatureMapModel {
    pub fn new(map_id: usize, table: Vec<Vec<ActionFeature>>) -> Result<Self> {
        let first = table
            .first()
            .and_then(|row| row.first())
            .ok_or(Error::EmptyInput("feature table"))?;
        let (k, d) = (table[0].len(), first.dim());
        for row in &table {
            check_dim(k, row.len())?;
            for phi in row {
                check_dim(d, phi.dim())?;
            }
        }
        Ok(Self { map_id, table })
    }

    pub fn dim(&self) -> usize {
        self.table[0][0].dim()
    }

    pub fn num_actions(&self) -> usize {
        self.table[0].len()
    }

    pub fn num_contexts(&self) -> usize {
        self.table.len()
    }

    pub fn feature(&self, context: usize, action: usize) -> Result<&ActionFeature> {
        let row = self.table.get(context).ok_or(Error::Index {
            index: context,
            len: self.table.len(),
        })?;
        row.get(action).ok_or(Error::Index {
            index: action,
            len: row.len(),
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.table
            .iter()
            .flatten()
            .map(ActionFeature::norm)
            .fold(0.0, f64::max)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid("delta must lie in (0, 1)"))
    }
}

/// max_i { λ_i S² + scale·d log(1 + tL²/(λ_i d)) }
fn worst_model_term(t: usize, dim: usize, feature_bound: f64, param_bound: f64, lambdas: &[f64], scale: f64) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput("regularization weights"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("regularization weights must be positive"));
    }
    let d = dim as f64;
    let l2 = feature_bound * feature_bound;
    Ok(lambdas
        .iter()
        .map(|lam| lam * param_bound * param_bound + scale * d * libm::log(1.0 + t as f64 * l2 / (lam * d)))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Inputs to the FS-SCB radius formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct FsRadiusInputs {
    pub dim: usize,
    pub feature_bound: f64,
    pub noise_scale: f64,
    pub param_bound: f64,
    pub reward_bound: f64,
    pub num_models: usize,
    pub delta: f64,
    pub lambdas: Vec<f64>,
}

/// Prediction-error bound of the true map's ridge expert:
///
/// Q_t = 1 + 2 max_i{λ_i S² + 4d log(1 + tL²/(λ_i d))}
///       + 32R² log((√8 R + √(1 + max_i{…})) / δ)
pub fn compute_qt(t: usize, p: &FsRadiusInputs) -> Result<f64> {
    check_delta(p.delta)?;
    let worst = worst_model_term(t, p.dim, p.feature_bound, p.param_bound, &p.lambdas, 4.0)?;
    let r = p.noise_scale;
    Ok(1.0 + 2.0 * worst
        + 32.0 * r * r * libm::log((libm::sqrt(8.0) * r + libm::sqrt(1.0 + worst)) / p.delta))
}

/// Aggregator regret bound in the feature-selection setting:
///
/// 8 log M · R²L² (G² + max_i{λ_i S² + d log(1 + tL²/(λ_i d))} + log(1/δ))
pub fn compute_rsq_fs(t: usize, p: &FsRadiusInputs) -> Result<f64> {
    if p.num_models == 0 {
        return Err(invalid("number of models must be at least 1"));
    }
    if !(p.delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let worst = worst_model_term(t, p.dim, p.feature_bound, p.param_bound, &p.lambdas, 1.0)?;
    let (r, l, g) = (p.noise_scale, p.feature_bound, p.reward_bound);
    Ok(8.0 * libm::log(p.num_models as f64) * r * r * l * l * (g * g + worst + libm::log(1.0 / p.delta)))
}

/// Oracle prediction-error bound D_t. Same closed form as the PS-OFUL
/// radius with Q_t in place of U_t.
pub fn compute_dt(delta: f64, q: f64, rsq: f64, noise_scale: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta must lie in (0, 1)"));
    }
    if q < 0.0 || rsq < 0.0 {
        return Err(invalid("error and regret bounds must be non-negative"));
    }
    let r = noise_scale;
    let noise = libm::sqrt(2.0 * (1.0 + q) * libm::log(libm::sqrt(1.0 + q) / delta));
    Ok(1.0 + 2.0 * rsq + 2.0 * q + 4.0 * r * noise
        + 32.0 * r * r
            * libm::log((libm::sqrt(8.0) * r + libm::sqrt(1.0 + rsq + q + 2.0 * r * noise)) / delta))
}

/// Aggregator range `[β, β + ℓ]` evaluated at round `t`, worst case over
/// the models: half-width G + RL √(d log((1 + tL²/(λ_i d))/δ)) + L √λ_i S.
pub fn prediction_range(t: usize, p: &FsRadiusInputs) -> (f64, f64) {
    let d = p.dim as f64;
    let (g, l, r, s) = (p.reward_bound, p.feature_bound, p.noise_scale, p.param_bound);
    let half = p
        .lambdas
        .iter()
        .map(|lam| {
            let growth = 1.0 + t as f64 * l * l / (lam * d);
            g + r * l * libm::sqrt(d * libm::log(growth / p.delta).max(0.0)) + l * libm::sqrt(*lam) * s
        })
        .fold(0.0, f64::max);
    (-half, 2.0 * half)
}

/// Inverse-gap-weighted distribution around the greedy action:
/// p(a) = 1 / (κ + α (ŷ(a′) − ŷ(a))) for a ≠ a′, the rest on a′.
pub fn igw_distribution(predictions: &[f64], alpha: f64, kappa: f64) -> Result<Vec<f64>> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if !(alpha > 0.0) || !(kappa >= 1.0) {
        return Err(invalid("need alpha > 0 and kappa >= 1"));
    }
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("predictions"));
    }
    let (greedy, top) = argmax(predictions.iter().copied()).ok_or(Error::EmptyInput("predictions"))?;
    let mut probs: Vec<f64> = predictions
        .iter()
        .map(|p| 1.0 / (kappa + alpha * (top - p)))
        .collect();
    probs[greedy] = 0.0;
    let rest: f64 = probs.iter().sum();
    let greedy_mass = 1.0 - rest;
    if greedy_mass < 0.0 {
        return Err(Error::InfeasibleDistribution(greedy_mass));
    }
    probs[greedy] = greedy_mass;
    Ok(probs)
}

/// Draws an index from a probability vector.
pub fn sample_action<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Result<usize> {
    let sampler = WeightedIndex::new(probabilities).map_err(|e| invalid(alloc::format!("{e}")))?;
    Ok(sampler.sample(rng))
}

/// Outcome of one FS-SCB selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FsDecision {
    pub action: usize,
    pub greedy: usize,
    pub probabilities: Vec<f64>,
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FsScb {
    models: Vec<FeatureMapModel>,
    experts: Vec<RegressorState>,
    aggregator: AggregatorState,
    alpha: f64,
    kappa: f64,
    constants: AssumptionConstants,
    rounds: usize,
}

/// Options for [`FsScb`].
#[derive(Debug, Clone, PartialEq)]
pub struct FsScbOptions {
    /// Regularization weight of every ridge expert (must be ≥ 1).
    pub lambda: f64,
    pub eta: f64,
}

impl Default for FsScbOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eta: DEFAULT_ETA,
        }
    }
}

impl FsScb {
    pub fn new(models: Vec<FeatureMapModel>, constants: &AssumptionConstants, options: FsScbOptions) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyInput("FS-SCB needs at least one feature map"));
        }
        if !(options.lambda >= 1.0) {
            return Err(invalid("ridge regularization must be at least 1"));
        }
        let mut constants = constants.clone();
        constants.num_models = models.len();
        constants.num_actions = models[0].num_actions();
        constants.validate()?;
        for m in &models {
            check_dim(constants.dim, m.dim())?;
            check_dim(constants.num_actions, m.num_actions())?;
        }
        let inputs = Self::radius_inputs_for(&constants, models.len(), options.lambda);
        let (beta, ell) = prediction_range(constants.horizon, &inputs);
        let aggregator = AggregatorState::new(models.len(), beta, ell, options.eta)?;
        let horizon = constants.horizon;
        let q = compute_qt(horizon, &inputs)?;
        let rsq = compute_rsq_fs(horizon, &inputs)?;
        let d_t = compute_dt(constants.delta, q, rsq, constants.noise_scale)?;
        let k = constants.num_actions as f64;
        let alpha = libm::sqrt(k * horizon as f64 / d_t);
        let experts = models
            .iter()
            .map(|m| RegressorState::ridge(m.dim(), options.lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            experts,
            aggregator,
            alpha,
            kappa: k,
            constants,
            rounds: 0,
        })
    }

    fn radius_inputs_for(c: &AssumptionConstants, num_models: usize, lambda: f64) -> FsRadiusInputs {
        FsRadiusInputs {
            dim: c.dim,
            feature_bound: c.feature_bound,
            noise_scale: c.noise_scale,
            param_bound: c.param_bound,
            reward_bound: c.reward_bound,
            num_models,
            delta: c.delta,
            lambdas: alloc::vec![lambda; num_models],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn aggregator(&self) -> &AggregatorState {
        &self.aggregator
    }

    pub fn experts(&self) -> &[RegressorState] {
        &self.experts
    }

    pub fn constants(&self) -> &AssumptionConstants {
        &self.constants
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds
    }

    /// Overrides the learning rate (used to probe the α → 0 limit).
    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0) {
            return Err(invalid("alpha must be positive"));
        }
        self.alpha = alpha;
        Ok(())
    }

    fn expert_predictions(&self, context: usize, action: usize) -> Result<Vec<f64>> {
        self.models
            .iter()
            .zip(&self.experts)
            .map(|(m, e)| e.predict(m.feature(context, action)?))
            .collect()
    }

    /// Aggregated predictions ŷ(x, a) for every action.
    pub fn predictions(&self, context: usize) -> Result<Vec<f64>> {
        (0..self.constants.num_actions)
            .map(|a| self.aggregator.predict(&self.expert_predictions(context, a)?))
            .collect()
    }

    /// Builds p_t and samples an action from it.
    pub fn select<R: Rng + ?Sized>(&self, context: usize, rng: &mut R) -> Result<FsDecision> {
        let predictions = self.predictions(context)?;
        let probabilities = igw_distribution(&predictions, self.alpha, self.kappa)?;
        let (greedy, _) = argmax(predictions.iter().copied()).ok_or(Error::EmptyInput("actions"))?;
        let action = sample_action(&probabilities, rng)?;
        Ok(FsDecision {
            action,
            greedy,
            probabilities,
            predictions,
        })
    }

    /// Feeds back the played (context, action, reward) triple.
    pub fn update(&mut self, context: usize, action: usize, reward: f64) -> Result<()> {
        let preds = self.expert_predictions(context, action)?;
        for (m, e) in self.models.iter().zip(self.experts.iter_mut()) {
            e.update(m.feature(context, action)?, reward)?;
        }
        self.aggregator.update(&preds, reward)?;
        self.rounds += 1;
        Ok(())
    }

    /// Full round with a reward callback on the played action.
    pub fn step<R, F>(&mut self, context: usize, mut reward: F, rng: &mut R) -> Result<(FsDecision, f64)>
    where
        R: Rng + ?Sized,
        F: FnMut(usize) -> f64,
    {
        let decision = self.select(context, rng)?;
        let y = reward(decision.action);
        self.update(context, decision.action, y)?;
        Ok((decision, y))
    }
}
