//! Covariance family generated by shared and pairwise Gaussian latents.
//!
//! `X_l = ε_X E_l + α U_all + β_X U_X + λ Z_l` for `l <= K`, with `η_X E'_l` replacing
//! `λ Z_l` for `l > K` (and symmetrically for `Y`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{cholesky, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentCovarianceParams {
    pub m: usize,
    pub n: usize,
    /// Number of strongly interacting `(X_l, Y_l)` pairs.
    pub k: usize,
    pub alpha: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub lambda: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub eta_x: f64,
    pub eta_y: f64,
}

impl LatentCovarianceParams {
    /// `λ = η = β = 0`, shared `ε`: every pair of distinct variables has correlation
    /// `α² / (α² + ε²)`.
    pub fn dense(m: usize, n: usize, alpha: f64, eps: f64) -> Self {
        LatentCovarianceParams {
            m,
            n,
            k: 0,
            alpha,
            beta_x: 0.0,
            beta_y: 0.0,
            lambda: 0.0,
            eps_x: eps,
            eps_y: eps,
            eta_x: 0.0,
            eta_y: 0.0,
        }
    }

    /// Interpolating family used by the sparsity sweep: `β = 0`, `η = λ`, shared `ε`,
    /// so every variable has variance `α² + ε² + λ²`.
    pub fn interpolating(m: usize, n: usize, k: usize, alpha: f64, lambda: f64, eps: f64) -> Self {
        LatentCovarianceParams {
            m,
            n,
            k,
            alpha,
            beta_x: 0.0,
            beta_y: 0.0,
            lambda,
            eps_x: eps,
            eps_y: eps,
            eta_x: lambda,
            eta_y: lambda,
        }
    }

    /// `α = β = 0`, `η = λ`: only the first `K` pairs interact.
    pub fn sparse(m: usize, n: usize, k: usize, lambda: f64, eps: f64) -> Self {
        Self::interpolating(m, n, k, 0.0, lambda, eps)
    }

    fn validate(&self) -> Result<()> {
        let reals = [
            ("alpha", self.alpha),
            ("beta_x", self.beta_x),
            ("beta_y", self.beta_y),
            ("lambda", self.lambda),
            ("eps_x", self.eps_x),
            ("eps_y", self.eps_y),
            ("eta_x", self.eta_x),
            ("eta_y", self.eta_y),
        ];
        for (name, v) in reals {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Construction(format!("{name} must be a finite nonnegative real, got {v}")));
            }
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::Construction("dimensions must be positive".into()));
        }
        if self.k > self.m.min(self.n) {
            return Err(Error::Construction(format!(
                "K = {} exceeds min(m, n) = {}",
                self.k,
                self.m.min(self.n)
            )));
        }
        Ok(())
    }
}

/// Closed-form covariance of the latent family; verified SPD.
pub fn covariance_from_latents(p: &LatentCovarianceParams) -> Result<Matrix> {
    p.validate()?;
    let (m, n, k) = (p.m, p.n, p.k);
    let d = m + n;
    let a2 = p.alpha * p.alpha;
    let l2 = p.lambda * p.lambda;
    let mut cov = Matrix::zeros(d, d);
    for i in 0..m {
        for j in 0..m {
            let mut v = a2 + p.beta_x * p.beta_x;
            if i == j {
                v += p.eps_x * p.eps_x + if i < k { l2 } else { p.eta_x * p.eta_x };
            }
            cov[(i, j)] = v;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut v = a2 + p.beta_y * p.beta_y;
            if i == j {
                v += p.eps_y * p.eps_y + if i < k { l2 } else { p.eta_y * p.eta_y };
            }
            cov[(m + i, m + j)] = v;
        }
    }
    for i in 0..m {
        for j in 0..n {
            let v = a2 + if i == j && i < k { l2 } else { 0.0 };
            cov[(i, m + j)] = v;
            cov[(m + j, i)] = v;
        }
    }
    cholesky(&cov).map_err(|e| Error::Construction(format!("latent covariance is not SPD: {e}")))?;
    Ok(cov)
}
