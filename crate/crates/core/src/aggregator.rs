//! Square-loss prediction with expert advice.
//!
//! Predictions and outcomes live in a known interval `[β, β + ℓ]` and are
//! rescaled to `[0, 1]`. The forecaster keeps exponential weights over the
//! experts and predicts through the substitution function
//! `ŷ′ = (1 + Δ(0) − Δ(1)) / 2`, where
//!
//! ```text
//! Δ(y) = −(1/η) log Σ_i v_i exp(−η (y − h_i)²).
//! ```
//!
//! For η ≤ 2 the square loss is η-mixable on `[0, 1]`, so the substitution
//! prediction satisfies `ŷ′² ≤ Δ(0)` and `(1 − ŷ′)² ≤ Δ(1)`, which gives
//! regret at most `ℓ² log M / η` against the best expert.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, check_finite, invalid, Error, Result};

/// Default loss-scaling exponent (the square-loss mixability constant).
pub const DEFAULT_ETA: f64 = 2.0;

/// Slack allowed on the two substitution conditions.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorState {
    log_weights: Vec<f64>,
    beta: f64,
    ell: f64,
    eta: f64,
}

/// One aggregated prediction together with its internals.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePrediction {
    /// Prediction in the original units, `β + ℓ ŷ′`.
    pub value: f64,
    /// Prediction on the unit interval.
    pub scaled: f64,
    pub delta0: f64,
    pub delta1: f64,
}

impl AggregatorState {
    pub fn new(num_experts: usize, beta: f64, ell: f64, eta: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::EmptyInput("aggregator needs at least one expert"));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidRange(ell));
        }
        check_finite(&[beta], "range lower bound")?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("loss-scaling exponent must be positive"));
        }
        Ok(Self {
            log_weights: vec![0.0; num_experts],
            beta,
            ell,
            eta,
        })
    }

    pub fn with_default_eta(num_experts: usize, beta: f64, ell: f64) -> Result<Self> {
        Self::new(num_experts, beta, ell, DEFAULT_ETA)
    }

    pub fn num_experts(&self) -> usize {
        self.log_weights.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let lse = log_sum_exp(self.log_weights.iter().copied());
        self.log_weights
            .iter()
            .map(|w| libm::exp(w - lse))
            .collect()
    }

    /// Maps a value in original units to `[0, 1]`, clamping into range.
    pub fn scale(&self, value: f64) -> f64 {
        ((value - self.beta) / self.ell).clamp(0.0, 1.0)
    }

    pub fn predict(&self, expert_preds: &[f64]) -> Result<f64> {
        Ok(self.predict_detailed(expert_preds)?.value)
    }

    pub fn predict_detailed(&self, expert_preds: &[f64]) -> Result<AggregatePrediction> {
        check_dim(self.num_experts(), expert_preds.len())?;
        check_finite(expert_preds, "expert predictions")?;
        let lse = log_sum_exp(self.log_weights.iter().copied());
        let eta = self.eta;
        let mix = |target: f64| {
            let terms = self.log_weights.iter().zip(expert_preds).map(|(w, f)| {
                let h = self.scale(*f);
                (w - lse) - eta * (target - h) * (target - h)
            });
            -log_sum_exp(terms) / eta
        };
        let delta0 = mix(0.0);
        let delta1 = mix(1.0);
        let scaled = ((1.0 + delta0 - delta1) / 2.0).clamp(0.0, 1.0);
        if scaled * scaled > delta0 + FEASIBILITY_TOL
            || (1.0 - scaled) * (1.0 - scaled) > delta1 + FEASIBILITY_TOL
        {
            return Err(Error::InfeasiblePrediction);
        }
        Ok(AggregatePrediction {
            value: self.beta + self.ell * scaled,
            scaled,
            delta0,
            delta1,
        })
    }

    /// Exponential-weights update with the observed outcome `y`.
    pub fn update(&mut self, expert_preds: &[f64], y: f64) -> Result<()> {
        check_dim(self.num_experts(), expert_preds.len())?;
        check_finite(expert_preds, "expert predictions")?;
        check_finite(&[y], "observation")?;
        let target = self.scale(y);
        for (w, f) in self.log_weights.iter_mut().zip(expert_preds) {
            let h = ((f - self.beta) / self.ell).clamp(0.0, 1.0);
            *w -= self.eta * (target - h) * (target - h);
        }
        Ok(())
    }
}

pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + libm::log(values.map(|v| libm::exp(v - top)).sum::<f64>())
}

/// One round of an aggregation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRound {
    pub expert_preds: Vec<f64>,
    pub prediction: f64,
    pub outcome: f64,
}

/// Σ_t (ŷ_t − y_t)² − min_i Σ_t (f_t^i − y_t)².
pub fn empirical_sq_regret(trace: &[TraceRound]) -> Result<f64> {
    let first = trace.first().ok_or(Error::EmptyInput("trace"))?;
    let m = first.expert_preds.len();
    let mut expert_loss = vec![0.0; m];
    let mut own_loss = 0.0;
    for round in trace {
        check_dim(m, round.expert_preds.len())?;
        own_loss += (round.prediction - round.outcome) * (round.prediction - round.outcome);
        for (loss, f) in expert_loss.iter_mut().zip(&round.expert_preds) {
            *loss += (f - round.outcome) * (f - round.outcome);
        }
    }
    let best = expert_loss.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(own_loss - best)
}
