//! Standard OFUL with a ridge estimate and the self-normalized confidence
//! width. Used as the no-prior-knowledge baseline.

use crate::bandit::{Action, ActionFeature, ActionSet};
use crate::error::{invalid, Result};
use crate::policy::{optimistic_action, LinearBandit};
use crate::regressor::RegressorState;

#[derive(Debug, Clone)]
pub struct Oful {
    regressor: RegressorState,
    param_bound: f64,
    noise_scale: f64,
    delta: f64,
}

impl Oful {
    pub fn new(dim: usize, lambda: f64, param_bound: f64, noise_scale: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta must lie in (0, 1)"));
        }
        if !(param_bound >= 0.0 && noise_scale >= 0.0) {
            return Err(invalid("S and R must be non-negative"));
        }
        Ok(Self {
            regressor: RegressorState::ridge(dim, lambda)?,
            param_bound,
            noise_scale,
            delta,
        })
    }

    pub fn regressor(&self) -> &RegressorState {
        &self.regressor
    }

    /// √λ S + R √(2 log(det(V)^{1/2} / (δ det(λI)^{1/2})))
    pub fn width(&self) -> f64 {
        let log_term = self.regressor.log_det_ratio() + 2.0 * libm::log(1.0 / self.delta);
        libm::sqrt(self.regressor.lambda()) * self.param_bound + self.noise_scale * libm::sqrt(log_term.max(0.0))
    }
}

impl LinearBandit for Oful {
    fn propose(&mut self, actions: &ActionSet) -> Result<Action> {
        optimistic_action(actions, self.regressor.coeffs(), self.regressor.inv_gram(), self.width())
    }

    fn update(&mut self, feature: &ActionFeature, reward: f64) -> Result<()> {
        self.regressor.update(feature, reward)
    }

    fn rounds_seen(&self) -> usize {
        self.regressor.n_obs()
    }
}
