//! Special functions: log-Gamma, digamma and the standard normal CDF / quantile.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument the Stirling / asymptotic series are shifted upward.
const ASYMPTOTIC_THRESHOLD: f64 = 12.0;

/// Natural logarithm of the Gamma function for `x > 0`.
///
/// Arguments below 12 are shifted upward with `ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1))`
/// and evaluated with the Stirling series, which is accurate to machine precision there.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut shifted = x;
    let mut log_product = 0.0;
    if shifted < ASYMPTOTIC_THRESHOLD {
        let mut product = 1.0;
        while shifted < ASYMPTOTIC_THRESHOLD {
            product *= shifted;
            shifted += 1.0;
        }
        log_product = product.ln();
    }
    stirling(shifted) - log_product
}

fn stirling(x: f64) -> f64 {
    // Bernoulli-number coefficients B_2k / (2k (2k-1)).
    const COEFFS: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series * inv
}

/// Digamma function ψ(x) for `x > 0`.
///
/// Upward recursion ψ(x) = ψ(x + 1) - 1/x until the argument reaches 12, then the
/// asymptotic expansion.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    if x == 1.0 {
        return -EULER_GAMMA;
    }
    let mut shifted = x;
    let mut correction = 0.0;
    while shifted < ASYMPTOTIC_THRESHOLD {
        correction += 1.0 / shifted;
        shifted += 1.0;
    }
    // B_2k / (2k) coefficients.
    const COEFFS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32_760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (shifted * shifted);
    let mut series = 0.0;
    for c in COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    shifted.ln() - 0.5 / shifted - series * inv2 - correction
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF.
///
/// Central region uses the positive-term series of erf; tails use the Mills-ratio
/// continued fraction so that small tail probabilities keep full relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -3.0 {
        normal_pdf(x) * mills_ratio(-x)
    } else if x > 3.0 {
        1.0 - normal_pdf(x) * mills_ratio(x)
    } else {
        0.5 + 0.5 * erf_series(x * FRAC_1_SQRT_2)
    }
}

/// Upper tail probability 1 - Φ(x), accurate for large positive `x`.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

fn erf_series(z: f64) -> f64 {
    // erf(z) = 2/sqrt(pi) exp(-z^2) sum_n 2^n z^(2n+1) / (1*3*...*(2n+1))
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * (-z2).exp() * sum
}

/// R(x) = (1 - Φ(x)) / φ(x) for x > 0, by modified Lentz evaluation of
/// 1 / (x + 1 / (x + 2 / (x + 3 / ...))).
fn mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Quantile of the standard normal distribution for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile requires p in (0, 1), got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact for p in (0.5, 1).
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

/// Quantile for p <= 0.5: rational initial guess, then Halley steps on the CDF.
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = initial_quantile(p);
    for _ in 0..8 {
        let err = normal_cdf(x) - p;
        let step = err / normal_pdf(x);
        let next = x - step / (1.0 + 0.5 * x * step);
        let done = (next - x).abs() <= 1e-15 * x.abs().max(1.0);
        x = next;
        if done {
            break;
        }
    }
    x
}

fn initial_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!((ln_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        // 0.5 * ln(pi)
        assert!((ln_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-13);
        // ln(10!) via direct product.
        let ln_fact10: f64 = (1..=10).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma(11.0).unwrap() - ln_fact10).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_recurrence_over_range() {
        // ln Γ(x + 1) = ln Γ(x) + ln x, relative to the magnitude of the values.
        let mut x = 1e-3;
        while x < 1e6 {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            let scale = lhs.abs().max(1.0);
            assert!((lhs - rhs).abs() <= 1e-12 * scale, "x = {x}: {lhs} vs {rhs}");
            x *= 1.7;
        }
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-14);
        let half = -EULER_GAMMA - 2.0 * 2f64.ln();
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-13);
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn digamma_recurrence_on_half_grid() {
        let mut x = 0.5;
        while x <= 50.0 {
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
            assert!(d.abs() <= 1e-12, "x = {x}: residual {d}");
            x += 0.5;
        }
    }

    #[test]
    fn digamma_is_derivative_of_ln_gamma() {
        for &x in &[0.3f64, 1.7, 4.2, 13.0, 250.0] {
            let h = 1e-5 * x.max(1.0);
            let fd = (ln_gamma(x + h).unwrap() - ln_gamma(x - h).unwrap()) / (2.0 * h);
            assert!((fd - digamma(x).unwrap()).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_964) - 0.975).abs() < 1e-7);
        // Φ(-1) from erfc(1/sqrt 2) / 2.
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        // deep tail keeps relative precision.
        let tail = normal_cdf(-8.0);
        assert!((tail / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_continuous_at_branch_points() {
        for &x in &[-3.0, 3.0] {
            let lo = normal_cdf(x - 1e-12);
            let hi = normal_cdf(x + 1e-12);
            assert!((hi - lo).abs() < 1e-13);
        }
    }

    #[test]
    fn normal_quantile_basics() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        // Tolerance is 1e-9 in x plus the conditioning floor of representing Φ(x)
        // as a double: one ulp of p maps to ulp(p) / φ(x) in x.
        let mut x = -8.0;
        while x <= 8.0 {
            let p = normal_cdf(x);
            let back = normal_quantile(p).unwrap();
            let ulp = f64::EPSILON * p;
            let floor = if x > 0.0 { ulp / normal_pdf(x) } else { 0.0 };
            assert!((back - x).abs() <= 1e-9 + 2.0 * floor, "x = {x}: back {back}");
            x += 0.01;
        }
        // The upper tail inverts exactly through the complement.
        let mut x = 0.0;
        while x <= 8.0 {
            let back = -normal_quantile(normal_sf(x)).unwrap();
            assert!((back - x).abs() <= 1e-9, "x = {x}");
            x += 0.05;
        }
    }
}
