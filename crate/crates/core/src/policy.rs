//! Policy interface and the optimistic action rule shared by the
//! ellipsoid-based algorithms.

use alloc::vec;
use alloc::vec::Vec;

use crate::bandit::{argmax, Action, ActionFeature, ActionSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// A linear bandit algorithm that proposes an action and learns from the
/// reward of the action actually played.
pub trait LinearBandit {
    fn propose(&mut self, actions: &ActionSet) -> Result<Action>;

    fn update(&mut self, feature: &ActionFeature, reward: f64) -> Result<()>;

    /// Rounds observed so far.
    fn rounds_seen(&self) -> usize;
}

impl<P: LinearBandit + ?Sized> LinearBandit for alloc::boxed::Box<P> {
    fn propose(&mut self, actions: &ActionSet) -> Result<Action> {
        (**self).propose(actions)
    }

    fn update(&mut self, feature: &ActionFeature, reward: f64) -> Result<()> {
        (**self).update(feature, reward)
    }

    fn rounds_seen(&self) -> usize {
        (**self).rounds_seen()
    }
}

/// argmax_a ⟨φ(a), θ̂⟩ + w ‖φ(a)‖_{V⁻¹}, the maximizer of ⟨φ, θ⟩ over the
/// ellipsoid {θ : ‖θ − θ̂‖_V ≤ w}. Finite-set ties go to the lowest index.
pub fn optimistic_action(
    actions: &ActionSet,
    center: &[f64],
    inv_gram: &Matrix,
    width: f64,
) -> Result<Action> {
    match actions {
        ActionSet::Finite(set) => {
            if set.is_empty() {
                return Err(Error::EmptyInput("action set"));
            }
            for a in set {
                check_dim(center.len(), a.dim())?;
            }
            let scores = set.iter().map(|a| {
                dot(a, center) + width * libm::sqrt(inv_gram.quad_form(a).max(0.0))
            });
            let (idx, _) = argmax(scores).ok_or(Error::EmptyInput("action set"))?;
            Ok(Action::Index(idx))
        }
        ActionSet::UnitBall { dim } => {
            check_dim(*dim, center.len())?;
            Ok(Action::Point(unit_ball_optimistic(center, inv_gram, width)))
        }
    }
}

/// Optimistic action over the unit ball.
///
/// max_{‖φ‖≤1} max_{θ∈E} ⟨φ, θ⟩ = max_{θ∈E} ‖θ‖, attained at φ = θ/‖θ‖, so
/// we find the point of the ellipsoid E = {θ̂ + w V^{-1/2} u : ‖u‖ ≤ 1}
/// farthest from the origin. In the eigenbasis of V⁻¹ (eigenvalues σ_k²
/// after scaling by w²) the maximizer is u_k = σ_k c_k / (ν − σ_k²) with
/// ν ≥ max σ_k² chosen so that ‖u‖ = 1.
pub fn unit_ball_optimistic(center: &[f64], inv_gram: &Matrix, width: f64) -> ActionFeature {
    let d = center.len();
    let width = width.max(0.0);
    let (eig, vecs) = inv_gram.symmetric_eigen();
    // semi-axes of the ellipsoid and the center in the eigenbasis
    let s: Vec<f64> = eig.iter().map(|e| width * libm::sqrt(e.max(0.0))).collect();
    let c: Vec<f64> = (0..d)
        .map(|k| (0..d).map(|i| vecs.get(i, k) * center[i]).sum())
        .collect();
    let s2_max = s.iter().map(|x| x * x).fold(0.0, f64::max);

    let mut u = vec![0.0; d];
    if s2_max > 0.0 {
        let scale = s2_max.max(dot(&c, &c)).max(1.0);
        let tol = 1e-12 * scale;
        let u_norm2 = |nu: f64| -> f64 {
            (0..d)
                .map(|k| {
                    let den = nu - s[k] * s[k];
                    if den <= 0.0 {
                        if libm::fabs(s[k] * c[k]) > 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    } else {
                        let v = s[k] * c[k] / den;
                        v * v
                    }
                })
                .sum()
        };
        let top: Vec<usize> = (0..d).filter(|&k| s2_max - s[k] * s[k] <= tol).collect();
        let top_coupled = top.iter().any(|&k| libm::fabs(s[k] * c[k]) > tol * 1e-3);
        // Hard case: the center has no component along the longest axes and the
        // remaining components do not exhaust the unit budget at ν = σ²_max.
        let rest_at_top: f64 = (0..d)
            .filter(|k| !top.contains(k))
            .map(|k| {
                let v = s[k] * c[k] / (s2_max - s[k] * s[k]);
                v * v
            })
            .sum();
        if !top_coupled && rest_at_top <= 1.0 {
            for k in 0..d {
                if !top.contains(&k) {
                    u[k] = s[k] * c[k] / (s2_max - s[k] * s[k]);
                }
            }
            u[top[0]] = libm::sqrt((1.0 - rest_at_top).max(0.0));
        } else {
            let mut lo = s2_max;
            let mut hi = s2_max + 1.0;
            while u_norm2(hi) > 1.0 {
                hi = s2_max + 2.0 * (hi - s2_max);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if u_norm2(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let nu = hi;
            for k in 0..d {
                let den = nu - s[k] * s[k];
                u[k] = if den > 0.0 { s[k] * c[k] / den } else { 0.0 };
            }
        }
    }
    // farthest point in the eigenbasis, then rotate back
    let far: Vec<f64> = (0..d).map(|k| c[k] + s[k] * u[k]).collect();
    let theta: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|k| vecs.get(i, k) * far[k]).sum())
        .collect();
    let n = norm(&theta);
    if n > 0.0 {
        ActionFeature::new(theta.iter().map(|t| t / n).collect())
    } else {
        ActionFeature::unit(d, 0)
    }
}

/// Optimistic value ⟨φ, θ̂⟩ + w ‖φ‖_{V⁻¹} of a single feature.
pub fn optimistic_value(phi: &[f64], center: &[f64], inv_gram: &Matrix, width: f64) -> f64 {
    dot(phi, center) + width * libm::sqrt(inv_gram.quad_form(phi).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_circle(center: &[f64], inv: &Matrix, width: f64) -> f64 {
        (0..200_000)
            .map(|i| {
                let a = i as f64 * core::f64::consts::TAU / 200_000.0;
                let phi = [libm::cos(a), libm::sin(a)];
                optimistic_value(&phi, center, inv, width)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn unit_ball_matches_brute_force() {
        let cases: [(&[f64], [f64; 4], f64); 5] = [
            (&[1.0, 0.5], [0.5, 0.1, 0.1, 0.2], 1.0),
            (&[0.0, 0.0], [0.5, 0.1, 0.1, 0.2], 2.0),
            (&[2.0, -1.0], [0.01, 0.0, 0.0, 0.9], 5.0),
            (&[0.0, 1.0], [1.0, 0.0, 0.0, 0.25], 3.0),
            (&[0.3, 0.0], [0.2, 0.0, 0.0, 1.0], 0.0),
        ];
        for (center, m, w) in cases {
            let inv = Matrix::from_row_major(2, m.to_vec());
            let phi = unit_ball_optimistic(center, &inv, w);
            assert!((phi.norm() - 1.0).abs() < 1e-12);
            let got = optimistic_value(&phi, center, &inv, w);
            let best = brute_force_circle(center, &inv, w);
            assert!(got >= best - 1e-6, "got {got} best {best}");
        }
    }

    #[test]
    fn hard_case_center_orthogonal_to_long_axis() {
        // Long axis along e2, center along e1 and small: the maximizer leaves
        // the center's direction entirely.
        let inv = Matrix::from_row_major(2, vec![0.01, 0.0, 0.0, 1.0]);
        let phi = unit_ball_optimistic(&[0.05, 0.0], &inv, 1.0);
        let best = brute_force_circle(&[0.05, 0.0], &inv, 1.0);
        assert!(optimistic_value(&phi, &[0.05, 0.0], &inv, 1.0) >= best - 1e-6);
    }

    #[test]
    fn finite_greedy_and_ties() {
        let inv = Matrix::scaled_identity(1, 0.25);
        let set = ActionSet::Finite(vec![ActionFeature::new(vec![1.0]), ActionFeature::new(vec![-2.0])]);
        // scores 1 + 2·0.5 = 2 and −2 + 2·1 = 0
        assert_eq!(optimistic_action(&set, &[1.0], &inv, 2.0).unwrap(), Action::Index(0));
        let tie = ActionSet::Finite(vec![ActionFeature::new(vec![1.0, 0.0]), ActionFeature::new(vec![0.0, 1.0])]);
        let inv2 = Matrix::scaled_identity(2, 1.0);
        assert_eq!(optimistic_action(&tie, &[0.0, 0.0], &inv2, 1.0).unwrap(), Action::Index(0));
        assert!(optimistic_action(&ActionSet::Finite(vec![]), &[0.0], &inv, 1.0).is_err());
    }
}
