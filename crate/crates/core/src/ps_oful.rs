//! Parameter-selection OFUL.
//!
//! The agent is given M balls `B(μ̂_i, b_i + c_i)`, one of which contains the
//! reward parameter. Each ball gets a biased least-squares expert pulled
//! toward `μ̂_i`; a square-loss aggregator combines their predictions into
//! `ŷ_t`, and the confidence set is the ellipsoid around the least-squares
//! fit of those predictions:
//!
//! ```text
//! C_t = { θ : Σ_{s≤t} (ŷ_s − ⟨φ_s, θ⟩)² ≤ γ_t(δ) }
//! ```
//!
//! Actions are chosen optimistically over the containing ellipsoid
//! `‖θ − θ̂_t‖_{V_t} ≤ √γ_t` with `V_t = L²I + Σ φφᵀ`.

use alloc::vec::Vec;

use crate::aggregator::{AggregatorState, DEFAULT_ETA};
use crate::bandit::{Action, ActionFeature, ActionSet, AssumptionConstants};
use crate::error::{check_dim, check_finite, invalid, Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::policy::{optimistic_action, LinearBandit};
use crate::regressor::RegressorState;

/// A candidate model: the ball `B(μ̂, radius + center_error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallModel {
    pub center_estimate: Vec<f64>,
    pub radius: f64,
    pub center_error: f64,
}

impl BallModel {
    pub fn new(center_estimate: Vec<f64>, radius: f64, center_error: f64) -> Self {
        Self {
            center_estimate,
            radius,
            center_error,
        }
    }

    /// b + c
    pub fn effective_radius(&self) -> f64 {
        self.radius + self.center_error
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let diff: Vec<f64> = theta
            .iter()
            .zip(&self.center_estimate)
            .map(|(t, m)| t - m)
            .collect();
        norm(&diff) <= self.effective_radius() + 1e-12
    }
}

/// Regularization weight of a model's expert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelLambda {
    pub value: f64,
    /// The regret analysis asks for λ ≥ 1, i.e. b + c ≤ 1/√T.
    pub below_one: bool,
}

/// λ = 1 / (T (b + c)²). Values below one are allowed but logged.
pub fn lambda_for_model(horizon: usize, radius: f64, center_error: f64) -> Result<ModelLambda> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let bc = radius + center_error;
    if bc == 0.0 {
        return Err(Error::DivisionByZero("b + c = 0 in the regularization weight"));
    }
    if !(bc > 0.0 && bc.is_finite()) {
        return Err(invalid("b + c must be positive"));
    }
    let value = 1.0 / (horizon as f64 * bc * bc);
    let below_one = value < 1.0;
    if below_one {
        log::warn!("regularization weight {value} < 1 (b + c = {bc}, T = {horizon})");
    }
    Ok(ModelLambda { value, below_one })
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.25 {
        Ok(())
    } else {
        Err(invalid("delta must lie in (0, 1/4]"))
    }
}

/// log(1 + t T L² max(b+c)² / d), shared by U_t, R_Sq and the range.
fn growth_log(t: f64, horizon: f64, dim: f64, feature_bound: f64, max_bc: f64) -> f64 {
    libm::log(1.0 + t * horizon * feature_bound * feature_bound * max_bc * max_bc / dim)
}

/// Inputs to the PS-OFUL radius formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusInputs {
    pub horizon: usize,
    pub dim: usize,
    pub feature_bound: f64,
    pub noise_scale: f64,
    pub reward_bound: f64,
    pub num_models: usize,
    pub delta: f64,
    pub max_bc: f64,
}

impl RadiusInputs {
    pub fn from_constants(c: &AssumptionConstants, max_bc: f64) -> Self {
        Self {
            horizon: c.horizon,
            dim: c.dim,
            feature_bound: c.feature_bound,
            noise_scale: c.noise_scale,
            reward_bound: c.reward_bound,
            num_models: c.num_models,
            delta: c.delta,
            max_bc,
        }
    }
}

/// Prediction-error bound of the true model's expert after `t` rounds:
///
/// U_t = 1 + 2/T + 8d log(1 + tTL²m²/d)
///       + 32R² log((2√2 R + √(1 + 1/T + 4d log(1 + tTL²m²/d))) / δ)
///
/// with m = max_i (b_i + c_i).
pub fn compute_ut(
    t: usize,
    horizon: usize,
    dim: usize,
    feature_bound: f64,
    noise_scale: f64,
    delta: f64,
    max_bc: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if horizon == 0 || dim == 0 {
        return Err(invalid("horizon and dimension must be at least 1"));
    }
    let big_t = horizon as f64;
    let d = dim as f64;
    let g = growth_log(t as f64, big_t, d, feature_bound, max_bc);
    let r = noise_scale;
    let inner = libm::sqrt(1.0 + 1.0 / big_t + 4.0 * d * g);
    Ok(1.0 + 2.0 / big_t
        + 8.0 * d * g
        + 32.0 * r * r * libm::log((2.0 * core::f64::consts::SQRT_2 * r + inner) / delta))
}

/// Regret bound of the aggregator after `t` rounds in the parameter
/// selection setting:
///
/// 8 log M (G² + L²/T + 2GL/√T + R²L²d log((1 + tTL²m²/d)/δ))
pub fn compute_rsq_ps(t: usize, p: &RadiusInputs) -> Result<f64> {
    check_delta(p.delta)?;
    if p.num_models == 0 {
        return Err(invalid("number of models must be at least 1"));
    }
    let big_t = p.horizon as f64;
    let d = p.dim as f64;
    let (g, l, r) = (p.reward_bound, p.feature_bound, p.noise_scale);
    let growth = 1.0 + t as f64 * big_t * l * l * p.max_bc * p.max_bc / d;
    Ok(8.0
        * libm::log(p.num_models as f64)
        * (g * g + l * l / big_t + 2.0 * g * l / libm::sqrt(big_t)
            + r * r * l * l * d * libm::log(growth / p.delta)))
}

/// Confidence radius γ_t(δ) given the expert error bound `u` and the
/// aggregator regret bound `rsq`:
///
/// γ = 1 + 2 rsq + 2u + 4R √(2(1+u) log(√(1+u)/δ))
///     + 32R² log((√8 R + √(1 + rsq + u + 2R √(2(1+u) log(√(1+u)/δ)))) / δ)
pub fn gamma(delta: f64, u: f64, rsq: f64, noise_scale: f64) -> Result<f64> {
    check_delta(delta)?;
    if u < 0.0 || rsq < 0.0 {
        return Err(invalid("error and regret bounds must be non-negative"));
    }
    let r = noise_scale;
    let noise = libm::sqrt(2.0 * (1.0 + u) * libm::log(libm::sqrt(1.0 + u) / delta));
    Ok(1.0 + 2.0 * rsq + 2.0 * u + 4.0 * r * noise
        + 32.0 * r * r
            * libm::log((libm::sqrt(8.0) * r + libm::sqrt(1.0 + rsq + u + 2.0 * r * noise)) / delta))
}

/// γ_t(δ) from its components at history size `t`.
pub fn confidence_radius(t: usize, p: &RadiusInputs) -> Result<f64> {
    let u = compute_ut(t, p.horizon, p.dim, p.feature_bound, p.noise_scale, p.delta, p.max_bc)?;
    let rsq = compute_rsq_ps(t, p)?;
    gamma(p.delta, u, rsq, p.noise_scale)
}

/// Prediction range `[β, β + ℓ]` for the aggregator, evaluated at round `t`:
/// β = −(G + L/√T + RL √(d log((1 + tTL²m²/d)/δ))), ℓ = −2β.
pub fn prediction_range(t: usize, p: &RadiusInputs) -> (f64, f64) {
    let big_t = p.horizon as f64;
    let d = p.dim as f64;
    let (g, l, r) = (p.reward_bound, p.feature_bound, p.noise_scale);
    let growth = 1.0 + t as f64 * big_t * l * l * p.max_bc * p.max_bc / d;
    let half = g + l / libm::sqrt(big_t) + r * l * libm::sqrt(d * libm::log(growth / p.delta));
    (-half, 2.0 * half)
}

/// Magnitude bound on a still-plausible expert's prediction:
/// G + RL √(d log((1 + tL²/(λd))/δ)) + L √λ (b + c).
#[allow(clippy::too_many_arguments)]
pub fn expert_validity_bound(
    lambda: f64,
    dim: usize,
    reward_bound: f64,
    noise_scale: f64,
    feature_bound: f64,
    t: usize,
    delta: f64,
    effective_radius: f64,
) -> Result<f64> {
    check_finite(
        &[lambda, reward_bound, noise_scale, feature_bound, delta, effective_radius],
        "validity bound inputs",
    )?;
    if !(lambda > 0.0) {
        return Err(invalid("regularization weight must be positive"));
    }
    let d = dim as f64;
    let l = feature_bound;
    let growth = 1.0 + t as f64 * l * l / (lambda * d);
    let log_term = libm::log(growth / delta).max(0.0);
    Ok(reward_bound
        + noise_scale * l * libm::sqrt(d * log_term)
        + l * libm::sqrt(lambda) * effective_radius)
}

/// One oracle round: played feature, aggregated prediction, observed reward.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRound {
    pub feature: ActionFeature,
    pub prediction: f64,
    pub reward: f64,
}

/// Runtime options for [`PsOful`].
#[derive(Debug, Clone, PartialEq)]
pub struct PsOfulOptions {
    /// Aggregator loss-scaling exponent.
    pub eta: f64,
    /// Flag experts whose predictions exceed [`expert_validity_bound`].
    pub check_validity: bool,
}

impl Default for PsOfulOptions {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            check_validity: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsOful {
    models: Vec<BallModel>,
    experts: Vec<RegressorState>,
    aggregator: AggregatorState,
    conf_gram: Matrix,
    conf_inv_gram: Matrix,
    conf_moment: Vec<f64>,
    conf_theta: Vec<f64>,
    oracle_history: Vec<OracleRound>,
    constants: AssumptionConstants,
    radius: RadiusInputs,
    check_validity: bool,
    flagged: Vec<bool>,
}

impl PsOful {
    /// Builds the policy. `constants.num_models` is taken from `models`.
    pub fn new(models: Vec<BallModel>, constants: &AssumptionConstants, options: PsOfulOptions) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyInput("PS-OFUL needs at least one model"));
        }
        let mut constants = constants.clone();
        constants.num_models = models.len();
        constants.validate()?;
        let d = constants.dim;
        let mut experts = Vec::with_capacity(models.len());
        for m in &models {
            check_dim(d, m.center_estimate.len())?;
            let lambda = lambda_for_model(constants.horizon, m.radius, m.center_error)?;
            experts.push(RegressorState::new(m.center_estimate.clone(), lambda.value)?);
        }
        let max_bc = models.iter().map(BallModel::effective_radius).fold(0.0, f64::max);
        let radius = RadiusInputs::from_constants(&constants, max_bc);
        let (beta, ell) = prediction_range(constants.horizon, &radius);
        let aggregator = AggregatorState::new(models.len(), beta, ell, options.eta)?;
        let l2 = constants.feature_bound * constants.feature_bound;
        if !(l2 > 0.0) {
            return Err(invalid("feature bound must be positive"));
        }
        Ok(Self {
            flagged: alloc::vec![false; models.len()],
            models,
            experts,
            aggregator,
            conf_gram: Matrix::scaled_identity(d, l2),
            conf_inv_gram: Matrix::scaled_identity(d, 1.0 / l2),
            conf_moment: alloc::vec![0.0; d],
            conf_theta: alloc::vec![0.0; d],
            oracle_history: Vec::new(),
            radius,
            constants,
            check_validity: options.check_validity,
        })
    }

    pub fn models(&self) -> &[BallModel] {
        &self.models
    }

    pub fn experts(&self) -> &[RegressorState] {
        &self.experts
    }

    pub fn aggregator(&self) -> &AggregatorState {
        &self.aggregator
    }

    pub fn conf_gram(&self) -> &Matrix {
        &self.conf_gram
    }

    pub fn conf_inv_gram(&self) -> &Matrix {
        &self.conf_inv_gram
    }

    pub fn conf_theta(&self) -> &[f64] {
        &self.conf_theta
    }

    pub fn oracle_history(&self) -> &[OracleRound] {
        &self.oracle_history
    }

    pub fn constants(&self) -> &AssumptionConstants {
        &self.constants
    }

    pub fn radius_inputs(&self) -> &RadiusInputs {
        &self.radius
    }

    /// Experts flagged as inconsistent with their ball at some round.
    pub fn flagged(&self) -> &[bool] {
        &self.flagged
    }

    /// γ_t(δ) for history size `t`.
    pub fn gamma_at(&self, t: usize) -> Result<f64> {
        confidence_radius(t, &self.radius)
    }

    /// Optimistic action over C_{t−1} given its radius.
    pub fn select_action(&self, actions: &ActionSet, gamma_prev: f64) -> Result<Action> {
        if !(gamma_prev >= 0.0) {
            return Err(invalid("confidence radius must be non-negative"));
        }
        optimistic_action(actions, &self.conf_theta, &self.conf_inv_gram, libm::sqrt(gamma_prev))
    }

    /// Expert predictions at a feature.
    pub fn expert_predictions(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.experts.iter().map(|e| e.predict(phi)).collect()
    }

    /// Oracle prediction ŷ at a feature under the current weights.
    pub fn oracle_predict(&self, phi: &[f64]) -> Result<f64> {
        self.aggregator.predict(&self.expert_predictions(phi)?)
    }

    /// Full round: select, predict, observe through `reward`, update.
    pub fn step<F>(&mut self, actions: &ActionSet, mut reward: F) -> Result<(Action, f64)>
    where
        F: FnMut(&ActionFeature) -> f64,
    {
        let action = self.propose(actions)?;
        let phi = actions.feature(&action)?;
        let y = reward(&phi);
        self.update(&phi, y)?;
        Ok((action, y))
    }

    fn record(&mut self, phi: &ActionFeature, y: f64) -> Result<()> {
        check_dim(self.constants.dim, phi.dim())?;
        check_finite(phi, "feature")?;
        check_finite(&[y], "reward")?;
        let preds = self.expert_predictions(phi)?;
        let y_hat = self.aggregator.predict(&preds)?;
        if self.check_validity {
            self.flag_experts(&preds)?;
        }
        // least squares of the oracle predictions on the played features
        self.conf_inv_gram.sherman_morrison(phi);
        self.conf_gram.add_outer(phi);
        for (m, p) in self.conf_moment.iter_mut().zip(phi.iter()) {
            *m += p * y_hat;
        }
        self.conf_theta = self.conf_inv_gram.mul_vec(&self.conf_moment);
        self.oracle_history.push(OracleRound {
            feature: phi.clone(),
            prediction: y_hat,
            reward: y,
        });
        for expert in &mut self.experts {
            expert.update(phi, y)?;
        }
        self.aggregator.update(&preds, y)
    }

    fn flag_experts(&mut self, preds: &[f64]) -> Result<()> {
        let t = self.oracle_history.len();
        for (i, (expert, pred)) in self.experts.iter().zip(preds).enumerate() {
            let bound = expert_validity_bound(
                expert.lambda(),
                self.constants.dim,
                self.constants.reward_bound,
                self.constants.noise_scale,
                self.constants.feature_bound,
                t,
                self.constants.delta,
                self.models[i].effective_radius(),
            )?;
            if libm::fabs(*pred) > bound && !self.flagged[i] {
                log::debug!("expert {i} prediction {pred} exceeds validity bound {bound} at round {t}");
                self.flagged[i] = true;
            }
        }
        Ok(())
    }
}

impl LinearBandit for PsOful {
    fn propose(&mut self, actions: &ActionSet) -> Result<Action> {
        let gamma_prev = self.gamma_at(self.oracle_history.len())?;
        self.select_action(actions, gamma_prev)
    }

    fn update(&mut self, feature: &ActionFeature, reward: f64) -> Result<()> {
        self.record(feature, reward)
    }

    fn rounds_seen(&self) -> usize {
        self.oracle_history.len()
    }
}

/// Σ_{s≤t} (ŷ_s − ⟨φ_s, θ⟩)² for every prefix t of the oracle history.
pub fn oracle_error_prefix(history: &[OracleRound], theta: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    history
        .iter()
        .map(|r| {
            let e = r.prediction - dot(&r.feature, theta);
            acc += e * e;
            acc
        })
        .collect()
}
