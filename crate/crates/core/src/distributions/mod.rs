//! Base joint laws with closed-form mutual information.

mod additive;
mod gaussian;
mod latent;
mod solve;
mod student;

pub use additive::{additive_noise_mi, sample_additive_noise, AdditiveNoiseJoint};
pub use gaussian::{
    bivariate_covariance, canonical_correlations, dense_covariance, gaussian_mi, gaussian_mi_cca,
    paired_covariance, CovarianceSpec, GaussianJoint,
};
pub use latent::{covariance_from_latents, LatentCovarianceParams};
pub use solve::{
    bivariate_rho_for_mi, dense_alpha_for_mi, interpolating_mi, lambda_for_mi, paired_rho_for_mi,
    solve_parameter_for_mi, MAX_BISECTION_ITER, MI_TOLERANCE, RHO_MAX,
};
pub use student::{student_correction, StudentJoint};

use crate::error::Result;
use crate::numerics::RngStream;
use crate::sample::Sample;

/// A sampler over `R^m x R^n` that knows its exact mutual information.
pub trait JointDistribution: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    /// Ground-truth mutual information in nats.
    fn mi_true(&self) -> f64;
    fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample>;
    /// Pointwise mutual information, when the law has a tractable density.
    fn pmi(&self, _x: &[f64], _y: &[f64]) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum BaseDistribution {
    Gaussian(GaussianJoint),
    Student(StudentJoint),
    AdditiveNoise(AdditiveNoiseJoint),
}

impl JointDistribution for BaseDistribution {
    fn dim_x(&self) -> usize {
        match self {
            BaseDistribution::Gaussian(g) => g.dim_x(),
            BaseDistribution::Student(s) => s.dim_x(),
            BaseDistribution::AdditiveNoise(_) => 1,
        }
    }

    fn dim_y(&self) -> usize {
        match self {
            BaseDistribution::Gaussian(g) => g.dim_y(),
            BaseDistribution::Student(s) => s.dim_y(),
            BaseDistribution::AdditiveNoise(_) => 1,
        }
    }

    fn mi_true(&self) -> f64 {
        match self {
            BaseDistribution::Gaussian(g) => g.mi_true(),
            BaseDistribution::Student(s) => s.mi_true(),
            BaseDistribution::AdditiveNoise(a) => a.mi_true(),
        }
    }

    fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
        match self {
            BaseDistribution::Gaussian(g) => g.sample(rng, n_points),
            BaseDistribution::Student(s) => s.sample(rng, n_points),
            BaseDistribution::AdditiveNoise(a) => a.sample(rng, n_points),
        }
    }

    fn pmi(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        match self {
            BaseDistribution::Gaussian(g) => Some(g.pmi(x, y)),
            BaseDistribution::Student(s) => Some(s.pmi(x, y)),
            BaseDistribution::AdditiveNoise(_) => None,
        }
    }
}

impl From<GaussianJoint> for BaseDistribution {
    fn from(g: GaussianJoint) -> Self {
        BaseDistribution::Gaussian(g)
    }
}

impl From<StudentJoint> for BaseDistribution {
    fn from(s: StudentJoint) -> Self {
        BaseDistribution::Student(s)
    }
}

impl From<AdditiveNoiseJoint> for BaseDistribution {
    fn from(a: AdditiveNoiseJoint) -> Self {
        BaseDistribution::AdditiveNoise(a)
    }
}

/// Monte-Carlo mean of the PMI and its standard error over `m` joint draws.
pub fn monte_carlo_pmi(dist: &dyn JointDistribution, rng: &mut RngStream, m: usize) -> Option<(f64, f64)> {
    let sample = dist.sample(rng, m).ok()?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..m {
        let v = dist.pmi(sample.x_row(i), sample.y_row(i))?;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / m as f64;
    let var = (sum_sq / m as f64 - mean * mean).max(0.0) * m as f64 / (m as f64 - 1.0);
    Some((mean, (var / m as f64).sqrt()))
}
