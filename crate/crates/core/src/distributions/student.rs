use crate::error::{Error, Result};
use crate::numerics::linalg::{cholesky, principal_block, CholeskyFactor, Matrix};
use crate::numerics::special::{digamma_unchecked, ln_gamma_unchecked};
use crate::numerics::RngStream;
use crate::sample::Sample;

use super::gaussian::{check_block_shape, gaussian_mi};

/// `f(x) = ln Γ(x/2) - (x/2) ψ(x/2)`.
fn entropy_term(x: f64) -> f64 {
    let h = 0.5 * x;
    ln_gamma_unchecked(h) - h * digamma_unchecked(h)
}

/// MI gained by the shared χ² scale of a multivariate Student law:
/// `c(ν, m, n) = f(ν) + f(ν + m + n) - f(ν + m) - f(ν + n)`.
pub fn student_correction(dof: f64, dim_x: usize, dim_y: usize) -> Result<f64> {
    if !(dof >= 1.0) || !dof.is_finite() {
        return Err(Error::Domain(format!("degrees of freedom must be >= 1, got {dof}")));
    }
    if dim_x == 0 || dim_y == 0 {
        return Err(Error::Domain("dimensions must be positive".into()));
    }
    let (m, n) = (dim_x as f64, dim_y as f64);
    Ok(entropy_term(dof) + entropy_term(dof + m + n) - entropy_term(dof + m) - entropy_term(dof + n))
}

/// Multivariate Student over `R^m x R^n` with dispersion `Ω` and `ν` degrees of freedom.
#[derive(Debug, Clone)]
pub struct StudentJoint {
    dim_x: usize,
    dim_y: usize,
    dof: u32,
    dispersion: Matrix,
    factor: CholeskyFactor,
    marginal_x: CholeskyFactor,
    marginal_y: CholeskyFactor,
    mi_true: f64,
}

impl StudentJoint {
    pub fn new(dispersion: Matrix, dof: u32, dim_x: usize, dim_y: usize) -> Result<Self> {
        check_block_shape(&dispersion, dim_x, dim_y)?;
        if dof < 1 {
            return Err(Error::Domain("degrees of freedom must be >= 1".into()));
        }
        let factor = cholesky(&dispersion)?;
        let marginal_x = cholesky(&principal_block(&dispersion, 0, dim_x))?;
        let marginal_y = cholesky(&principal_block(&dispersion, dim_x, dim_y))?;
        let mi_true = gaussian_mi(&dispersion, dim_x, dim_y)? + student_correction(dof as f64, dim_x, dim_y)?;
        Ok(StudentJoint {
            dim_x,
            dim_y,
            dof,
            dispersion,
            factor,
            marginal_x,
            marginal_y,
            mi_true,
        })
    }

    /// Identity dispersion: all information sits in the shared scale.
    pub fn identity(dof: u32, dim_x: usize, dim_y: usize) -> Result<Self> {
        let d = dim_x + dim_y;
        Self::new(Matrix::identity(d, d), dof, dim_x, dim_y)
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn dispersion(&self) -> &Matrix {
        &self.dispersion
    }

    pub fn mi_true(&self) -> f64 {
        self.mi_true
    }

    /// Each row is a N(0, Ω) draw scaled by `sqrt(ν / U)` with a fresh `U ~ χ²_ν`.
    pub fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
        let d = self.dim_x + self.dim_y;
        let l = self.factor.lower();
        let nu = self.dof as f64;
        let mut values = Vec::with_capacity(n_points * d);
        let mut eps = vec![0.0; d];
        for _ in 0..n_points {
            for e in eps.iter_mut() {
                *e = rng.standard_normal();
            }
            let u = rng.draw_chi_square(nu);
            let scale = (nu / u).sqrt();
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += l[(i, j)] * eps[j];
                }
                values.push(acc * scale);
            }
        }
        Sample::new(values, self.dim_x, self.dim_y)
    }

    pub fn pmi(&self, x: &[f64], y: &[f64]) -> f64 {
        let joint: Vec<f64> = x.iter().chain(y).copied().collect();
        let nu = self.dof as f64;
        student_log_density(&self.factor, nu, &joint)
            - student_log_density(&self.marginal_x, nu, x)
            - student_log_density(&self.marginal_y, nu, y)
    }
}

/// Log density of the multivariate Student law, with Gamma terms kept in log space.
fn student_log_density(factor: &CholeskyFactor, nu: f64, z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let q = factor.mahalanobis_sq(z);
    ln_gamma_unchecked(0.5 * (nu + d)) - ln_gamma_unchecked(0.5 * nu)
        - 0.5 * d * (nu * std::f64::consts::PI).ln()
        - 0.5 * factor.log_det()
        - 0.5 * (nu + d) * (q / nu).ln_1p()
}
