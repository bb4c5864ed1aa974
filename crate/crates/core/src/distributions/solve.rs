//! Bisection for the parameter value of a one-parameter family that carries a target MI.

use crate::error::{Error, Result};

use super::gaussian::{gaussian_mi, paired_covariance};
use super::latent::{covariance_from_latents, LatentCovarianceParams};

pub const MAX_BISECTION_ITER: usize = 200;
pub const MI_TOLERANCE: f64 = 1e-9;
/// Upper end of the correlation bracket.
pub const RHO_MAX: f64 = 1.0 - 1e-12;

/// Finds `p` in `[low, high]` with `mi(p) = target`, for `mi` continuous and strictly
/// increasing on the bracket.
pub fn solve_parameter_for_mi<F>(mi: F, low: f64, high: f64, target: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (low, high);
    let f_lo = mi(lo)?;
    let f_hi = mi(hi)?;
    if (target - f_lo).abs() <= MI_TOLERANCE {
        return Ok(lo);
    }
    if (target - f_hi).abs() <= MI_TOLERANCE {
        return Ok(hi);
    }
    if !(target > f_lo && target < f_hi) {
        return Err(Error::Bracketing {
            target,
            low: f_lo,
            high: f_hi,
        });
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..MAX_BISECTION_ITER {
        let mid = 0.5 * (lo + hi);
        let f_mid = mi(mid)?;
        let err = (f_mid - target).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if f_mid < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
            break;
        }
    }
    if best.0 > MI_TOLERANCE {
        return Err(Error::Numerical {
            iterations: MAX_BISECTION_ITER,
            message: format!("bisection stalled {:.3e} nats from the target", best.0),
        });
    }
    Ok(best.1)
}

/// Correlation `ρ >= 0` of a bivariate normal with MI `target`.
pub fn bivariate_rho_for_mi(target: f64) -> Result<f64> {
    solve_parameter_for_mi(|rho| Ok(-0.5 * (-rho * rho).ln_1p()), 0.0, RHO_MAX, target)
}

/// Correlation of a `pairs`-pair structure of the given dimensions with MI `target`.
pub fn paired_rho_for_mi(dim_x: usize, dim_y: usize, pairs: usize, target: f64) -> Result<f64> {
    solve_parameter_for_mi(
        |rho| gaussian_mi(&paired_covariance(dim_x, dim_y, pairs, rho)?, dim_x, dim_y),
        0.0,
        RHO_MAX,
        target,
    )
}

/// MI of the interpolating latent family (`β = 0`, `η = λ`, `ε = 1`).
pub fn interpolating_mi(m: usize, n: usize, k: usize, alpha: f64, lambda: f64) -> Result<f64> {
    let p = LatentCovarianceParams::interpolating(m, n, k, alpha, lambda, 1.0);
    gaussian_mi(&covariance_from_latents(&p)?, m, n)
}

/// `λ` so that the interpolating family at `(α, K)` carries `target` nats.
pub fn lambda_for_mi(m: usize, n: usize, k: usize, alpha: f64, target: f64) -> Result<f64> {
    let mut high = 1.0;
    while interpolating_mi(m, n, k, alpha, high)? < target {
        high *= 2.0;
        if high > 1e6 {
            return Err(Error::Bracketing {
                target,
                low: interpolating_mi(m, n, k, alpha, 0.0)?,
                high: interpolating_mi(m, n, k, alpha, high)?,
            });
        }
    }
    solve_parameter_for_mi(|l| interpolating_mi(m, n, k, alpha, l), 0.0, high, target)
}

/// Largest `α` (at `λ = 0`) whose dense structure carries `target` nats.
pub fn dense_alpha_for_mi(m: usize, n: usize, target: f64) -> Result<f64> {
    let mut high = 1.0;
    while interpolating_mi(m, n, 0, high, 0.0)? < target {
        high *= 2.0;
        if high > 1e6 {
            return Err(Error::Bracketing {
                target,
                low: 0.0,
                high: interpolating_mi(m, n, 0, high, 0.0)?,
            });
        }
    }
    solve_parameter_for_mi(|a| interpolating_mi(m, n, 0, a, 0.0), 0.0, high, target)
}
