use crate::error::{Error, Result};
use crate::numerics::linalg::{inverse_sqrt_symmetric, svd, Matrix};
use crate::sample::Sample;

use super::{EstimateFlag, EstimateResult};

/// Largest canonical correlation allowed into the log.
pub const RHO_CLIP: f64 = 1.0 - 1e-9;
const RANK_FLOOR: f64 = 1e-12;

/// Gaussian model fit: `-Σ ½ ln(1 - ρ_i²)` over the sample canonical correlations.
pub fn estimate_cca(s: &Sample) -> Result<EstimateResult> {
    let (n, m, k) = (s.n_points(), s.dim_x(), s.dim_y());
    let d = m + k;
    if n <= d {
        return Err(Error::Argument(format!("CCA needs N > m + n, got N = {n} with {d} columns")));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (acc, v) in mean.iter_mut().zip(s.row(i)) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for (c, (v, mu)) in centered.iter_mut().zip(s.row(i).iter().zip(&mean)) {
            *c = v - mu;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let sxx = cov.view((0, 0), (m, m)).into_owned();
    let syy = cov.view((m, m), (k, k)).into_owned();
    let sxy = cov.view((0, m), (m, k)).into_owned();
    let (wx, def_x) = inverse_sqrt_symmetric(&sxx, RANK_FLOOR);
    let (wy, def_y) = inverse_sqrt_symmetric(&syy, RANK_FLOOR);
    let whitened = wx * sxy * wy;
    let rhos = svd(&whitened)?.singular_values;

    let mut flags = Vec::new();
    if def_x || def_y {
        flags.push(EstimateFlag::DegenerateInput);
    }
    let mut value = 0.0;
    for &r in rhos.iter().take(m.min(k)) {
        let r = if r > RHO_CLIP {
            flags.push(EstimateFlag::Clipped);
            RHO_CLIP
        } else {
            r
        };
        value += -0.5 * (-r * r).ln_1p();
    }
    Ok(EstimateResult::new("cca", value, flags))
}
