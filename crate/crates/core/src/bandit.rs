//! Shared domain types: problem constants, actions, histories and
//! pseudo-regret accounting.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{dot, norm};

/// Problem-level constants shared by the policies.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionConstants {
    /// Feature dimension.
    pub dim: usize,
    /// Bound on feature norms.
    pub feature_bound: f64,
    /// Bound on the reward parameter norm.
    pub param_bound: f64,
    /// Bound on the absolute mean reward.
    pub reward_bound: f64,
    /// Sub-Gaussian noise scale.
    pub noise_scale: f64,
    /// Horizon.
    pub horizon: usize,
    /// Number of candidate models.
    pub num_models: usize,
    /// Number of actions, 0 for a continuous action set.
    pub num_actions: usize,
    /// Confidence level δ ∈ (0, 1/4].
    pub delta: f64,
}

impl AssumptionConstants {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.horizon == 0 || self.num_models == 0 {
            return Err(invalid("dimension, horizon and model count must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 0.25) {
            return Err(invalid("delta must lie in (0, 1/4]"));
        }
        let bounds = [
            self.feature_bound,
            self.param_bound,
            self.reward_bound,
            self.noise_scale,
        ];
        if bounds.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(invalid("L, S, G and R must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Feature vector φ(a) of an action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionFeature(Vec<f64>);

impl ActionFeature {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = alloc::vec![0.0; dim];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ActionFeature {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActionFeature {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// The set of actions available in a round.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSet {
    Finite(Vec<ActionFeature>),
    /// The closed Euclidean unit ball in `dim` dimensions.
    UnitBall { dim: usize },
}

impl ActionSet {
    pub fn dim(&self) -> usize {
        match self {
            ActionSet::Finite(actions) => actions.first().map_or(0, |a| a.dim()),
            ActionSet::UnitBall { dim } => *dim,
        }
    }

    /// Resolves a chosen action to its feature vector.
    pub fn feature(&self, action: &Action) -> Result<ActionFeature> {
        match (self, action) {
            (ActionSet::Finite(actions), Action::Index(i)) => actions
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::InvalidAction(alloc::format!("index {i} of {}", actions.len()))),
            (ActionSet::UnitBall { dim }, Action::Point(phi)) => {
                check_dim(*dim, phi.dim())?;
                if phi.norm() > 1.0 + 1e-9 {
                    return Err(Error::InvalidAction("point outside the unit ball".to_string()));
                }
                Ok(phi.clone())
            }
            _ => Err(Error::InvalidAction("action kind does not match the action set".to_string())),
        }
    }

    /// Optimal mean reward under `theta` and, for finite sets, the lowest
    /// optimal index.
    pub fn best_mean(&self, theta: &[f64]) -> Result<(f64, Option<usize>)> {
        match self {
            ActionSet::Finite(actions) => {
                let (idx, val) = argmax(actions.iter().map(|a| dot(a, theta)))
                    .ok_or(Error::EmptyInput("action set"))?;
                Ok((val, Some(idx)))
            }
            ActionSet::UnitBall { .. } => Ok((norm(theta), None)),
        }
    }
}

/// A played action: an index into a finite set or a point of a
/// continuous set.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Index(usize),
    Point(ActionFeature),
}

/// Argmax with ties broken by lowest index. NaN entries never win.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Pseudo-regret of `chosen` against the best action under `theta`:
/// ⟨φ(a*), θ⟩ − ⟨φ(a), θ⟩.
pub fn instantaneous_regret(actions: &ActionSet, theta: &[f64], chosen: &Action) -> Result<f64> {
    let phi = actions.feature(chosen)?;
    check_dim(theta.len(), phi.dim())?;
    let (best, _) = actions.best_mean(theta)?;
    Ok((best - dot(&phi, theta)).max(0.0))
}

/// Append-only record of played features and observed rewards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    rounds: Vec<(ActionFeature, f64)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, feature: ActionFeature, reward: f64) {
        self.rounds.push((feature, reward));
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ActionFeature, f64)> {
        self.rounds.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord {
    pub instance_id: usize,
    /// 1-based round index.
    pub round: usize,
    pub algorithm: String,
    pub instantaneous_regret: f64,
    pub cumulative_regret: f64,
}

/// Mean and sample standard deviation of cumulative regret at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub algorithm: String,
    pub round: usize,
    pub mean: f64,
    pub std: f64,
    pub n_instances: usize,
}

/// Cumulative-regret curves keyed by algorithm, then instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTable {
    curves: BTreeMap<String, BTreeMap<usize, Vec<f64>>>,
}

/// Builds running sums from per-round records. Records for each
/// (instance, algorithm) stream must arrive in round order.
pub fn accumulate(records: &[RegretRecord]) -> Result<RegretTable> {
    let mut table = RegretTable::default();
    let mut last_round: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for rec in records {
        let key = (rec.instance_id, rec.algorithm.as_str());
        if let Some(&prev) = last_round.get(&key) {
            if rec.round == prev {
                return Err(Error::DuplicateRecord {
                    instance: rec.instance_id,
                    algorithm: rec.algorithm.clone(),
                    round: rec.round,
                });
            }
            if rec.round < prev {
                return Err(invalid("records must be sorted by round within each stream"));
            }
        }
        last_round.insert(key, rec.round);
        table.push(&rec.algorithm, rec.instance_id, rec.instantaneous_regret);
    }
    Ok(table)
}

impl RegretTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one round of instantaneous regret to a stream.
    pub fn push(&mut self, algorithm: &str, instance: usize, instantaneous: f64) {
        let curve = self
            .curves
            .entry(algorithm.to_string())
            .or_default()
            .entry(instance)
            .or_default();
        let prev = curve.last().copied().unwrap_or(0.0);
        curve.push(prev + instantaneous);
    }

    /// Inserts a whole cumulative curve for one instance.
    pub fn insert_curve(&mut self, algorithm: &str, instance: usize, cumulative: Vec<f64>) {
        self.curves
            .entry(algorithm.to_string())
            .or_default()
            .insert(instance, cumulative);
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn algorithms(&self) -> impl Iterator<Item = &str> {
        self.curves.keys().map(String::as_str)
    }

    pub fn curve(&self, algorithm: &str, instance: usize) -> Option<&[f64]> {
        self.curves.get(algorithm)?.get(&instance).map(Vec::as_slice)
    }

    /// Cumulative regrets at `round` (1-based) across instances.
    pub fn values_at(&self, algorithm: &str, round: usize) -> Vec<f64> {
        self.curves
            .get(algorithm)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|c| round.checked_sub(1).and_then(|r| c.get(r)).copied())
            .collect()
    }

    pub fn stats(&self, algorithm: &str, round: usize) -> Option<(f64, f64, usize)> {
        let vals = self.values_at(algorithm, round);
        mean_std(&vals).map(|(m, s)| (m, s, vals.len()))
    }

    pub fn max_round(&self, algorithm: &str) -> usize {
        self.curves
            .get(algorithm)
            .into_iter()
            .flat_map(|m| m.values())
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }

    /// Per-round summary rows sorted by (algorithm, round).
    pub fn summary(&self) -> Vec<RoundSummary> {
        let mut rows = Vec::new();
        for alg in self.curves.keys() {
            for round in 1..=self.max_round(alg) {
                if let Some((mean, std, n)) = self.stats(alg, round) {
                    rows.push(RoundSummary {
                        algorithm: alg.clone(),
                        round,
                        mean,
                        std,
                        n_instances: n,
                    });
                }
            }
        }
        rows
    }
}

/// Mean and sample (n − 1) standard deviation; std is 0 for one value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, libm::sqrt(var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_arms() -> ActionSet {
        ActionSet::Finite(vec![
            ActionFeature::new(vec![1.0, 0.0]),
            ActionFeature::new(vec![0.0, 1.0]),
        ])
    }

    #[test]
    fn optimal_action_has_zero_regret() {
        let theta = [1.0, 0.4];
        assert_eq!(instantaneous_regret(&two_arms(), &theta, &Action::Index(0)).unwrap(), 0.0);
    }

    #[test]
    fn suboptimal_gap() {
        let theta = [1.0, 0.4];
        let r = instantaneous_regret(&two_arms(), &theta, &Action::Index(1)).unwrap();
        assert!((r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn identical_features_never_regret() {
        let set = ActionSet::Finite(vec![ActionFeature::new(vec![0.3, 0.3]); 4]);
        for i in 0..4 {
            assert_eq!(instantaneous_regret(&set, &[2.0, -1.0], &Action::Index(i)).unwrap(), 0.0);
        }
    }

    #[test]
    fn unknown_action_rejected() {
        let err = instantaneous_regret(&two_arms(), &[1.0, 0.0], &Action::Index(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidAction(_)));
    }

    #[test]
    fn unit_ball_regret() {
        let set = ActionSet::UnitBall { dim: 2 };
        let theta = [3.0, 4.0];
        let best = Action::Point(ActionFeature::new(vec![0.6, 0.8]));
        assert!(instantaneous_regret(&set, &theta, &best).unwrap() < 1e-15);
        let r = instantaneous_regret(&set, &theta, &Action::Point(ActionFeature::unit(2, 0))).unwrap();
        assert!((r - 2.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_to_lowest_index() {
        assert_eq!(argmax([1.0, 3.0, 3.0]), Some((1, 3.0)));
        assert_eq!(argmax(core::iter::empty()), None);
    }

    fn rec(instance: usize, round: usize, inst: f64) -> RegretRecord {
        RegretRecord {
            instance_id: instance,
            round,
            algorithm: "a".into(),
            instantaneous_regret: inst,
            cumulative_regret: 0.0,
        }
    }

    #[test]
    fn accumulate_prefix_sums() {
        let recs = [rec(0, 1, 0.5), rec(0, 2, 0.5), rec(0, 3, 0.0)];
        let table = accumulate(&recs).unwrap();
        assert_eq!(table.curve("a", 0).unwrap(), &[0.5, 1.0, 1.0]);
    }

    #[test]
    fn accumulate_empty_and_duplicates() {
        assert!(accumulate(&[]).unwrap().is_empty());
        let err = accumulate(&[rec(0, 1, 0.1), rec(0, 1, 0.2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateRecord { round: 1, .. }));
    }

    #[test]
    fn mean_and_sample_std_across_instances() {
        let mut table = RegretTable::new();
        table.insert_curve("a", 0, vec![2.0; 10]);
        table.insert_curve("a", 1, vec![4.0; 10]);
        let (mean, std, n) = table.stats("a", 10).unwrap();
        assert_eq!(n, 2);
        assert!((mean - 3.0).abs() < 1e-15);
        assert!((std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constants_validation() {
        let mut c = AssumptionConstants {
            dim: 2,
            feature_bound: 1.0,
            param_bound: 1.0,
            reward_bound: 1.0,
            noise_scale: 0.1,
            horizon: 10,
            num_models: 2,
            num_actions: 0,
            delta: 0.25,
        };
        assert!(c.validate().is_ok());
        c.delta = 0.3;
        assert!(c.validate().is_err());
        c.delta = 0.1;
        c.horizon = 0;
        assert!(c.validate().is_err());
    }
}
