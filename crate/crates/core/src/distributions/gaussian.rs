use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{cholesky, inverse_sqrt_symmetric, principal_block, svd, CholeskyFactor, Matrix};
use crate::numerics::RngStream;
use crate::sample::Sample;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Centered multivariate normal over `R^m x R^n` with its exact mutual information.
#[derive(Debug, Clone)]
pub struct GaussianJoint {
    dim_x: usize,
    dim_y: usize,
    covariance: Matrix,
    factor: CholeskyFactor,
    marginal_x: CholeskyFactor,
    marginal_y: CholeskyFactor,
    mi_true: f64,
}

impl GaussianJoint {
    pub fn new(covariance: Matrix, dim_x: usize, dim_y: usize) -> Result<Self> {
        check_block_shape(&covariance, dim_x, dim_y)?;
        let factor = cholesky(&covariance)?;
        let marginal_x = cholesky(&principal_block(&covariance, 0, dim_x))?;
        let marginal_y = cholesky(&principal_block(&covariance, dim_x, dim_y))?;
        let mi_true = 0.5 * (marginal_x.log_det() + marginal_y.log_det() - factor.log_det());
        Ok(GaussianJoint {
            dim_x,
            dim_y,
            covariance,
            factor,
            marginal_x,
            marginal_y,
            mi_true,
        })
    }

    /// Bivariate normal with unit variances and correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::new(bivariate_covariance(rho)?, 1, 1)
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn mi_true(&self) -> f64 {
        self.mi_true
    }

    /// Rows drawn i.i.d. from N(0, Σ) as `L ε`.
    pub fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
        let d = self.dim_x + self.dim_y;
        let l = self.factor.lower();
        let mut values = Vec::with_capacity(n_points * d);
        let mut eps = vec![0.0; d];
        for _ in 0..n_points {
            for e in eps.iter_mut() {
                *e = rng.standard_normal();
            }
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += l[(i, j)] * eps[j];
                }
                values.push(acc);
            }
        }
        Sample::new(values, self.dim_x, self.dim_y)
    }

    /// Pointwise mutual information `ln p(x, y) - ln p(x) - ln p(y)`.
    pub fn pmi(&self, x: &[f64], y: &[f64]) -> f64 {
        let joint: Vec<f64> = x.iter().chain(y).copied().collect();
        let lj = gaussian_log_density(&self.factor, &joint);
        let lx = gaussian_log_density(&self.marginal_x, x);
        let ly = gaussian_log_density(&self.marginal_y, y);
        lj - lx - ly
    }
}

fn gaussian_log_density(factor: &CholeskyFactor, z: &[f64]) -> f64 {
    let d = z.len() as f64;
    -0.5 * (d * LN_2PI + factor.log_det() + factor.mahalanobis_sq(z))
}

pub(crate) fn check_block_shape(m: &Matrix, dim_x: usize, dim_y: usize) -> Result<()> {
    if dim_x == 0 || dim_y == 0 {
        return Err(Error::Argument("block dimensions must be positive".into()));
    }
    if m.nrows() != dim_x + dim_y || m.ncols() != dim_x + dim_y {
        return Err(Error::Argument(format!(
            "matrix is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            dim_x + dim_y,
            dim_x + dim_y
        )));
    }
    Ok(())
}

/// Exact Gaussian MI in nats: `½ (ln det Σ_X + ln det Σ_Y - ln det Σ)`.
pub fn gaussian_mi(cov: &Matrix, dim_x: usize, dim_y: usize) -> Result<f64> {
    check_block_shape(cov, dim_x, dim_y)?;
    let joint = cholesky(cov)?.log_det();
    let lx = cholesky(&principal_block(cov, 0, dim_x))?.log_det();
    let ly = cholesky(&principal_block(cov, dim_x, dim_y))?.log_det();
    Ok(0.5 * (lx + ly - joint))
}

/// Canonical correlations of the blocks of an SPD covariance, sorted descending.
pub fn canonical_correlations(cov: &Matrix, dim_x: usize, dim_y: usize) -> Result<Vec<f64>> {
    check_block_shape(cov, dim_x, dim_y)?;
    cholesky(cov)?;
    let sxx = principal_block(cov, 0, dim_x);
    let syy = principal_block(cov, dim_x, dim_y);
    let sxy = cov.view((0, dim_x), (dim_x, dim_y)).into_owned();
    let (wx, _) = inverse_sqrt_symmetric(&sxx, 1e-14);
    let (wy, _) = inverse_sqrt_symmetric(&syy, 1e-14);
    Ok(svd(&(wx * sxy * wy))?.singular_values)
}

/// Gaussian MI through canonical correlations: `-Σ ½ ln(1 - ρ_i²)`.
pub fn gaussian_mi_cca(cov: &Matrix, dim_x: usize, dim_y: usize) -> Result<f64> {
    let rhos = canonical_correlations(cov, dim_x, dim_y)?;
    Ok(rhos.iter().map(|r| -0.5 * (-r * r).ln_1p()).sum())
}

pub fn bivariate_covariance(rho: f64) -> Result<Matrix> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("correlation must lie in (-1, 1), got {rho}")));
    }
    Ok(Matrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
}

/// Unit-variance covariance with every off-diagonal correlation equal to `rho`.
pub fn dense_covariance(dim_x: usize, dim_y: usize, rho: f64) -> Matrix {
    let d = dim_x + dim_y;
    Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
}

/// Identity covariance plus `Cor(X_i, Y_i) = rho` for the first `pairs` coordinates.
pub fn paired_covariance(dim_x: usize, dim_y: usize, pairs: usize, rho: f64) -> Result<Matrix> {
    if pairs > dim_x.min(dim_y) {
        return Err(Error::Argument(format!(
            "{pairs} pairs do not fit in {dim_x}x{dim_y}"
        )));
    }
    let d = dim_x + dim_y;
    let mut m = Matrix::identity(d, d);
    for i in 0..pairs {
        m[(i, dim_x + i)] = rho;
        m[(dim_x + i, i)] = rho;
    }
    Ok(m)
}

/// Parameter record describing how a Gaussian covariance was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "kebab-case")]
pub enum CovarianceSpec {
    Identity,
    Bivariate { rho: f64 },
    Dense { rho: f64 },
    Paired { pairs: usize, rho: f64 },
    Latent(super::latent::LatentCovarianceParams),
}

impl CovarianceSpec {
    pub fn build(&self, dim_x: usize, dim_y: usize) -> Result<Matrix> {
        match self {
            CovarianceSpec::Identity => Ok(Matrix::identity(dim_x + dim_y, dim_x + dim_y)),
            CovarianceSpec::Bivariate { rho } => {
                if dim_x != 1 || dim_y != 1 {
                    return Err(Error::Argument("bivariate covariance is 1x1".into()));
                }
                bivariate_covariance(*rho)
            }
            CovarianceSpec::Dense { rho } => Ok(dense_covariance(dim_x, dim_y, *rho)),
            CovarianceSpec::Paired { pairs, rho } => paired_covariance(dim_x, dim_y, *pairs, *rho),
            CovarianceSpec::Latent(p) => {
                if p.m != dim_x || p.n != dim_y {
                    return Err(Error::Argument("latent parameters disagree with dims".into()));
                }
                super::latent::covariance_from_latents(p)
            }
        }
    }
}
