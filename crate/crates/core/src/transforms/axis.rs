//! Elementwise monotone maps of the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::normal_cdf;

/// How injectivity of a scalar map was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectivityCertificate {
    StrictlyMonotone,
    ConstraintVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AxisMapKind {
    NormalCdf,
    /// `x -> |x|^k sgn x`.
    Power { k: f64 },
    Asinh,
    /// `x -> x + Σ a_i sin(ω_i x + φ_i)`.
    Wiggly {
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
    /// Quantile function of a one-dimensional Gaussian mixture, defined on (0, 1).
    GmmQuantile {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
}

/// Injective scalar map applied to every coordinate of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AxisMapKind", into = "AxisMapKind")]
pub struct AxisMap {
    kind: AxisMapKind,
    certificate: InjectivityCertificate,
}

pub const GMM_QUANTILE_TOL: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;

impl TryFrom<AxisMapKind> for AxisMap {
    type Error = Error;

    fn try_from(kind: AxisMapKind) -> Result<Self> {
        let certificate = match &kind {
            AxisMapKind::NormalCdf | AxisMapKind::Asinh => InjectivityCertificate::StrictlyMonotone,
            AxisMapKind::Power { k } => {
                if !(*k >= 1.0) || !k.is_finite() {
                    return Err(Error::Construction(format!("power map needs k >= 1, got {k}")));
                }
                InjectivityCertificate::StrictlyMonotone
            }
            AxisMapKind::Wiggly {
                amplitudes,
                frequencies,
                phases,
            } => {
                if amplitudes.len() != frequencies.len() || amplitudes.len() != phases.len() {
                    return Err(Error::Construction("wiggly parameter lists differ in length".into()));
                }
                if amplitudes.iter().chain(frequencies).chain(phases).any(|v| !v.is_finite()) {
                    return Err(Error::Construction("wiggly parameters must be finite".into()));
                }
                let slope = wiggly_slope_bound(amplitudes, frequencies);
                if slope >= 1.0 {
                    return Err(Error::Construction(format!(
                        "wiggly map needs sum |a_i w_i| < 1, got {slope}"
                    )));
                }
                InjectivityCertificate::ConstraintVerified
            }
            AxisMapKind::GmmQuantile { weights, means, sds } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len() {
                    return Err(Error::Construction("mixture parameter lists are empty or differ in length".into()));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::Construction("mixture weights must be positive".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::Construction(format!("mixture weights sum to {total}, not 1")));
                }
                if sds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Construction("mixture means must be finite and sds positive".into()));
                }
                InjectivityCertificate::StrictlyMonotone
            }
        };
        Ok(AxisMap { kind, certificate })
    }
}

impl From<AxisMap> for AxisMapKind {
    fn from(m: AxisMap) -> Self {
        m.kind
    }
}

/// `Σ |a_i ω_i|`; the derivative of a wiggly map is at least `1` minus this.
pub fn wiggly_slope_bound(amplitudes: &[f64], frequencies: &[f64]) -> f64 {
    amplitudes.iter().zip(frequencies).map(|(a, w)| (a * w).abs()).sum()
}

impl AxisMap {
    pub fn normal_cdf() -> Self {
        AxisMap {
            kind: AxisMapKind::NormalCdf,
            certificate: InjectivityCertificate::StrictlyMonotone,
        }
    }

    pub fn power(k: f64) -> Result<Self> {
        AxisMapKind::Power { k }.try_into()
    }

    /// Power map with `k = 3/2`.
    pub fn half_cube() -> Self {
        AxisMap {
            kind: AxisMapKind::Power { k: 1.5 },
            certificate: InjectivityCertificate::StrictlyMonotone,
        }
    }

    pub fn asinh() -> Self {
        AxisMap {
            kind: AxisMapKind::Asinh,
            certificate: InjectivityCertificate::StrictlyMonotone,
        }
    }

    pub fn wiggly(amplitudes: Vec<f64>, frequencies: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        AxisMapKind::Wiggly {
            amplitudes,
            frequencies,
            phases,
        }
        .try_into()
    }

    pub fn gmm_quantile(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        AxisMapKind::GmmQuantile { weights, means, sds }.try_into()
    }

    pub fn kind(&self) -> &AxisMapKind {
        &self.kind
    }

    pub fn certificate(&self) -> InjectivityCertificate {
        self.certificate
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            AxisMapKind::NormalCdf => "normal-cdf",
            AxisMapKind::Power { k } if *k == 1.5 => "half-cube",
            AxisMapKind::Power { .. } => "power",
            AxisMapKind::Asinh => "asinh",
            AxisMapKind::Wiggly { .. } => "wiggly",
            AxisMapKind::GmmQuantile { .. } => "gmm-quantile",
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        match &self.kind {
            AxisMapKind::NormalCdf => normal_cdf(x),
            AxisMapKind::Power { k } => {
                if *k == 1.0 {
                    x
                } else {
                    x.abs().powf(*k).copysign(x)
                }
            }
            AxisMapKind::Asinh => x.asinh(),
            AxisMapKind::Wiggly {
                amplitudes,
                frequencies,
                phases,
            } => {
                let mut v = x;
                for ((a, w), p) in amplitudes.iter().zip(frequencies).zip(phases) {
                    v += a * (w * x + p).sin();
                }
                v
            }
            AxisMapKind::GmmQuantile { weights, means, sds } => gmm_quantile(weights, means, sds, x),
        }
    }
}

/// CDF of a one-dimensional Gaussian mixture.
pub fn gmm_cdf(weights: &[f64], means: &[f64], sds: &[f64], x: f64) -> f64 {
    weights
        .iter()
        .zip(means)
        .zip(sds)
        .map(|((w, m), s)| w * normal_cdf((x - m) / s))
        .sum()
}

/// Inverts the mixture CDF by bisection on `[μ_min - 10σ_max, μ_max + 10σ_max]`.
/// Probabilities at or beyond the bracket ends map to the ends.
fn gmm_quantile(weights: &[f64], means: &[f64], sds: &[f64], p: f64) -> f64 {
    let s_max = sds.iter().copied().fold(0.0, f64::max);
    let mut lo = means.iter().copied().fold(f64::INFINITY, f64::min) - 10.0 * s_max;
    let mut hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 10.0 * s_max;
    if p <= gmm_cdf(weights, means, sds, lo) {
        return lo;
    }
    if p >= gmm_cdf(weights, means, sds, hi) {
        return hi;
    }
    // Continue past the tolerance until the bracket collapses, so nearby
    // probabilities keep distinct images.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gmm_cdf(weights, means, sds, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bimodal_x() -> AxisMap {
        AxisMap::gmm_quantile(vec![0.3, 0.7], vec![0.0, 5.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn power_values() {
        assert_eq!(AxisMap::power(1.5).unwrap().forward(4.0), 8.0);
        assert_eq!(AxisMap::half_cube().forward(-4.0), -8.0);
        let id = AxisMap::power(1.0).unwrap();
        for x in [-3.7, -1e-300, 0.0, 2.5, 1e10] {
            assert!((id.forward(x) - x).abs() <= 1e-15 * x.abs().max(1.0));
        }
        assert!(AxisMap::power(0.5).is_err());
        assert!(AxisMap::power(f64::NAN).is_err());
    }

    #[test]
    fn asinh_at_zero() {
        assert_eq!(AxisMap::asinh().forward(0.0), 0.0);
    }

    #[test]
    fn gmm_quantile_median() {
        let q = bimodal_x();
        let root = q.forward(0.5);
        let f = gmm_cdf(&[0.3, 0.7], &[0.0, 5.0], &[1.0, 1.0], root);
        assert!((f - 0.5).abs() < GMM_QUANTILE_TOL, "F(root) = {f}");
    }

    #[test]
    fn gmm_weights_validated() {
        assert!(AxisMap::gmm_quantile(vec![0.3, 0.6], vec![0.0, 5.0], vec![1.0, 1.0]).is_err());
        assert!(AxisMap::gmm_quantile(vec![1.2, -0.2], vec![0.0, 5.0], vec![1.0, 1.0]).is_err());
        assert!(AxisMap::gmm_quantile(vec![1.0], vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn wiggly_constraint() {
        let a = vec![0.4, 0.2, 0.03];
        let w = vec![1.0, 1.7, 3.3];
        let p = vec![0.0, 1.0, -2.5];
        assert!((wiggly_slope_bound(&a, &w) - 0.839).abs() < 1e-12);
        let m = AxisMap::wiggly(a.clone(), w.clone(), p.clone()).unwrap();
        assert_eq!(m.certificate(), InjectivityCertificate::ConstraintVerified);
        let doubled: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        assert!(matches!(AxisMap::wiggly(doubled, w, p), Err(Error::Construction(_))));
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let m = AxisMap::power(2.0).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"name":"power","k":2.0}"#);
        assert_eq!(serde_json::from_str::<AxisMap>(&s).unwrap(), m);
        assert!(serde_json::from_str::<AxisMap>(r#"{"name":"power","k":0.5}"#).is_err());
    }

    #[test]
    fn monotone_on_random_pairs() {
        use crate::numerics::RngStream;
        let maps = [
            (AxisMap::normal_cdf(), -6.0, 6.0),
            (AxisMap::half_cube(), -50.0, 50.0),
            (AxisMap::power(3.0).unwrap(), -50.0, 50.0),
            (AxisMap::asinh(), -50.0, 50.0),
            (
                AxisMap::wiggly(vec![0.4, 0.2, 0.03], vec![1.0, 1.7, 3.3], vec![0.0, 1.0, -2.5]).unwrap(),
                -50.0,
                50.0,
            ),
            (bimodal_x(), 1e-6, 1.0 - 1e-6),
        ];
        let mut rng = RngStream::new(11, 0);
        for (map, lo, hi) in &maps {
            for _ in 0..100_000 {
                let a = lo + (hi - lo) * rng.uniform01();
                let b = lo + (hi - lo) * rng.uniform01();
                if a == b {
                    continue;
                }
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                assert!(map.forward(a) < map.forward(b), "{} not increasing at {a} < {b}", map.name());
            }
        }
    }
}
