//! Small dense linear algebra for the d×d Gram matrices used by the
//! regressors and confidence sets. Dimensions in this crate are tiny
//! (d ≤ a few dozen), so everything is plain row-major `Vec<f64>`.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be `dim²`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data has wrong length");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| dot(row, x))
            .collect()
    }

    /// xᵀ A x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// A ← A + x xᵀ
    pub fn add_outer(&mut self, x: &[f64]) {
        for (i, xi) in x.iter().enumerate() {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (r, xj) in row.iter_mut().zip(x) {
                *r += xi * xj;
            }
        }
    }

    /// Rank-one inverse update: given `self = A⁻¹`, overwrite with
    /// (A + x xᵀ)⁻¹ and return xᵀ A⁻¹ x.
    pub fn sherman_morrison(&mut self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        let q = dot(x, &ax);
        let denom = 1.0 + q;
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] -= ax[i] * ax[j] / denom;
            }
        }
        self.symmetrize();
        q
    }

    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max(libm::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Option<Matrix> {
        let d = self.dim;
        let mut l = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l.set(i, i, libm::sqrt(sum));
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Option<Matrix> {
        let l = self.cholesky()?;
        let d = self.dim;
        let mut inv = Matrix::zeros(d);
        let mut e = vec![0.0; d];
        for col in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[col] = 1.0;
            let x = cholesky_solve(&l, &e);
            for row in 0..d {
                inv.set(row, col, x[row]);
            }
        }
        inv.symmetrize();
        Some(inv)
    }

    /// log det of a symmetric positive definite matrix.
    pub fn spd_log_det(&self) -> Option<f64> {
        let l = self.cholesky()?;
        Some((0..self.dim).map(|i| 2.0 * libm::log(l.get(i, i))).sum())
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the matrix whose columns are the
    /// corresponding orthonormal eigenvectors.
    pub fn symmetric_eigen(&self) -> (Vec<f64>, Matrix) {
        let d = self.dim;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Matrix::scaled_identity(d, 1.0);
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    off += a.get(i, j) * a.get(i, j);
                }
            }
            let scale: f64 = a.data.iter().map(|x| x * x).sum();
            if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a.get(p, q);
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..d {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..d {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                    for k in 0..d {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        ((0..d).map(|i| a.get(i, i)).collect(), v)
    }
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let d = l.dim();
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = y[i];
        for k in (i + 1)..d {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}
