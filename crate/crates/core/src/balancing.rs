//! Regret balancing over a set of base bandit algorithms.
//!
//! Each round the balancer picks the base with the largest optimistic
//! average `R_i/N_i + U(N_i)/N_i`, plays the action it proposes and
//! feeds the observed reward back to that base only.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::bandit::{argmax, Action, ActionFeature, ActionSet};
use crate::error::{invalid, Error, Result};
use crate::policy::LinearBandit;

/// Reference regret bound
///
/// U(t) = √(d log(1 + t²L²m²/d))
///        + 2dRL √(t log M · log(1 + t/d) · log((1 + t²L²m²/d)/δ))
///
/// with m = max_i (b_i + c_i).
pub fn reference_u(t: usize, dim: usize, feature_bound: f64, noise_scale: f64, num_models: usize, delta: f64, max_bc: f64) -> Result<f64> {
    if num_models < 2 {
        return Err(invalid("reference bound needs at least two models (log M > 0)"));
    }
    if !(delta > 0.0) || dim == 0 {
        return Err(invalid("need delta > 0 and dim >= 1"));
    }
    let t = t as f64;
    let d = dim as f64;
    let l = feature_bound;
    let growth = 1.0 + t * t * l * l * max_bc * max_bc / d;
    let first = libm::sqrt(d * libm::log(growth));
    let second = 2.0 * d * noise_scale * l
        * libm::sqrt(t * libm::log(num_models as f64) * libm::log(1.0 + t / d) * libm::log(growth / delta));
    Ok(first + second)
}

/// Counts and reward sums of the bases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BalancerStats {
    pub n_pulls: Vec<usize>,
    pub cum_reward: Vec<f64>,
}

impl BalancerStats {
    pub fn new(num_bases: usize) -> Self {
        Self {
            n_pulls: vec![0; num_bases],
            cum_reward: vec![0.0; num_bases],
        }
    }

    pub fn len(&self) -> usize {
        self.n_pulls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_pulls.is_empty()
    }

    pub fn total_pulls(&self) -> usize {
        self.n_pulls.iter().sum()
    }

    /// Warm start on the first unpulled base, then
    /// argmax_i R_i/N_i + U(N_i)/N_i with ties to the lowest index.
    pub fn select<U: Fn(usize) -> f64>(&self, bound: U) -> Result<usize> {
        if self.n_pulls.is_empty() {
            return Err(Error::EmptyInput("no base algorithms"));
        }
        if let Some(i) = self.n_pulls.iter().position(|&n| n == 0) {
            return Ok(i);
        }
        let scores = self
            .n_pulls
            .iter()
            .zip(&self.cum_reward)
            .map(|(&n, &r)| (r + bound(n)) / n as f64);
        argmax(scores).map(|(i, _)| i).ok_or(Error::EmptyInput("no base algorithms"))
    }

    pub fn record(&mut self, base: usize, reward: f64) -> Result<()> {
        let len = self.n_pulls.len();
        let n = self.n_pulls.get_mut(base).ok_or(Error::Index { index: base, len })?;
        *n += 1;
        self.cum_reward[base] += reward;
        Ok(())
    }
}

/// Regret balancing over boxed base algorithms.
pub struct RegretBalancer<B: LinearBandit = Box<dyn LinearBandit + Send>> {
    bases: Vec<B>,
    stats: BalancerStats,
    bound: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    pending: Option<usize>,
    rounds: usize,
}

impl<B: LinearBandit> RegretBalancer<B> {
    pub fn new(bases: Vec<B>, bound: Box<dyn Fn(usize) -> f64 + Send + Sync>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::EmptyInput("no base algorithms"));
        }
        Ok(Self {
            stats: BalancerStats::new(bases.len()),
            bases,
            bound,
            pending: None,
            rounds: 0,
        })
    }

    pub fn stats(&self) -> &BalancerStats {
        &self.stats
    }

    pub fn bases(&self) -> &[B] {
        &self.bases
    }

    pub fn select_base(&self) -> Result<usize> {
        self.stats.select(&self.bound)
    }

    /// Credits `reward` to base `i` and updates that base's model.
    pub fn update_base(&mut self, i: usize, feature: &ActionFeature, reward: f64) -> Result<()> {
        self.stats.record(i, reward)?;
        self.bases[i].update(feature, reward)
    }

    /// Base chosen for the current round, if a proposal is outstanding.
    pub fn pending_base(&self) -> Option<usize> {
        self.pending
    }
}

impl<B: LinearBandit> LinearBandit for RegretBalancer<B> {
    fn propose(&mut self, actions: &ActionSet) -> Result<Action> {
        let i = self.select_base()?;
        let action = self.bases[i].propose(actions)?;
        self.pending = Some(i);
        Ok(action)
    }

    fn update(&mut self, feature: &ActionFeature, reward: f64) -> Result<()> {
        let i = self
            .pending
            .take()
            .ok_or_else(|| invalid("update without a preceding proposal"))?;
        self.rounds += 1;
        self.update_base(i, feature, reward)
    }

    fn rounds_seen(&self) -> usize {
        self.rounds
    }
}
