//! Incremental biased regularized least squares.
//!
//! Each expert solves
//!
//! ```text
//! θ̂ = argmin_θ Σ_s (⟨φ_s, θ⟩ − y_s)² + λ‖θ − μ̂‖²
//!   = (λI + Σ φφᵀ)⁻¹ Σ φ (y − ⟨φ, μ̂⟩) + μ̂
//! ```
//!
//! and keeps the inverse Gram matrix current with rank-one updates.
//! Plain ridge regression is the `μ̂ = 0` case.

use alloc::vec;
use alloc::vec::Vec;

use crate::bandit::ActionFeature;
use crate::error::{check_dim, check_finite, invalid, Result};
use crate::linalg::{dot, Matrix};

/// Updates between full re-inversion checks.
const REINVERT_PERIOD: usize = 1000;
/// Coefficient drift that triggers replacing the running inverse.
const REINVERT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorState {
    bias: Vec<f64>,
    lambda: f64,
    gram: Matrix,
    inv_gram: Matrix,
    /// Σ φ (y − ⟨φ, bias⟩)
    moment: Vec<f64>,
    coeffs: Vec<f64>,
    /// log det(V) − d log λ, tracked by the matrix determinant lemma.
    log_det_ratio: f64,
    n_obs: usize,
}

impl RegressorState {
    pub fn new(bias: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("regularization weight must be positive"));
        }
        check_finite(&bias, "regressor bias")?;
        let d = bias.len();
        if d == 0 {
            return Err(invalid("regressor dimension must be at least 1"));
        }
        Ok(Self {
            gram: Matrix::scaled_identity(d, lambda),
            inv_gram: Matrix::scaled_identity(d, 1.0 / lambda),
            moment: vec![0.0; d],
            coeffs: bias.clone(),
            bias,
            lambda,
            log_det_ratio: 0.0,
            n_obs: 0,
        })
    }

    /// Ridge regressor (zero bias).
    pub fn ridge(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], lambda)
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn inv_gram(&self) -> &Matrix {
        &self.inv_gram
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// log(det V_t / det(λI)).
    pub fn log_det_ratio(&self) -> f64 {
        self.log_det_ratio
    }

    pub fn update(&mut self, phi: &ActionFeature, y: f64) -> Result<()> {
        check_dim(self.dim(), phi.dim())?;
        check_finite(phi, "feature")?;
        check_finite(&[y], "reward")?;
        let q = self.inv_gram.sherman_morrison(phi);
        self.log_det_ratio += libm::log1p(q);
        self.gram.add_outer(phi);
        let residual = y - dot(phi, &self.bias);
        for (m, p) in self.moment.iter_mut().zip(phi.iter()) {
            *m += p * residual;
        }
        self.n_obs += 1;
        self.refresh_coeffs();
        if self.n_obs.is_multiple_of(REINVERT_PERIOD) {
            self.reinvert_if_drifted();
        }
        Ok(())
    }

    pub fn predict(&self, phi: &[f64]) -> Result<f64> {
        check_dim(self.dim(), phi.len())?;
        Ok(dot(phi, &self.coeffs))
    }

    /// ‖φ‖ in the inverse-Gram norm, √(φᵀ V⁻¹ φ).
    pub fn weighted_norm(&self, phi: &[f64]) -> Result<f64> {
        check_dim(self.dim(), phi.len())?;
        Ok(libm::sqrt(self.inv_gram.quad_form(phi).max(0.0)))
    }

    fn refresh_coeffs(&mut self) {
        let v = self.inv_gram.mul_vec(&self.moment);
        for ((c, v), b) in self.coeffs.iter_mut().zip(v).zip(&self.bias) {
            *c = v + b;
        }
    }

    fn reinvert_if_drifted(&mut self) {
        let Some(direct) = self.gram.spd_inverse() else {
            return;
        };
        let direct_coeffs = direct.mul_vec(&self.moment);
        let drift = direct_coeffs
            .iter()
            .zip(&self.coeffs)
            .zip(&self.bias)
            .map(|((d, c), b)| libm::fabs(d + b - c))
            .fold(0.0, f64::max);
        if drift > REINVERT_TOLERANCE {
            log::debug!("regressor drift {drift:e} after {} updates; re-inverting", self.n_obs);
            self.inv_gram = direct;
            self.refresh_coeffs();
        }
    }
}
