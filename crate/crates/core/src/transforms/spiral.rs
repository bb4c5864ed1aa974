//! Norm-dependent rotations `x -> exp(v ||x||^2 A) x` and the Swiss-roll embedding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpiralSpec {
    dim: usize,
    /// Row-major generator.
    generator: Vec<f64>,
    speed: f64,
}

/// Spiral diffeomorphism with a skew-symmetric generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpiralSpec", into = "SpiralSpec")]
pub struct SpiralMap {
    dim: usize,
    generator: Matrix,
    speed: f64,
    /// `(i, j, a)` when the generator only has entries `A_ij = a = -A_ji`.
    plane: Option<(usize, usize, f64)>,
}

impl TryFrom<SpiralSpec> for SpiralMap {
    type Error = Error;

    fn try_from(s: SpiralSpec) -> Result<Self> {
        if s.generator.len() != s.dim * s.dim {
            return Err(Error::Construction(format!(
                "generator has {} entries, expected {}",
                s.generator.len(),
                s.dim * s.dim
            )));
        }
        SpiralMap::new(Matrix::from_row_slice(s.dim, s.dim, &s.generator), s.speed)
    }
}

impl From<SpiralMap> for SpiralSpec {
    fn from(m: SpiralMap) -> Self {
        let d = m.dim;
        let generator = (0..d * d).map(|k| m.generator[(k / d, k % d)]).collect();
        SpiralSpec {
            dim: d,
            generator,
            speed: m.speed,
        }
    }
}

impl SpiralMap {
    pub fn new(generator: Matrix, speed: f64) -> Result<Self> {
        let d = generator.nrows();
        if d == 0 || generator.ncols() != d {
            return Err(Error::Construction("generator must be square and nonempty".into()));
        }
        if !speed.is_finite() {
            return Err(Error::Construction(format!("speed must be finite, got {speed}")));
        }
        let mut nonzero = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let a = generator[(i, j)];
                if !a.is_finite() || a != -generator[(j, i)] {
                    return Err(Error::Construction(format!(
                        "generator is not skew-symmetric at ({i}, {j})"
                    )));
                }
                if i < j && a != 0.0 {
                    nonzero.push((i, j, a));
                }
            }
        }
        let plane = if nonzero.len() == 1 { Some(nonzero[0]) } else { None };
        Ok(SpiralMap {
            dim: d,
            generator,
            speed,
            plane,
        })
    }

    /// Generator with `A_ij = 1`, `A_ji = -1`.
    pub fn plane(dim: usize, i: usize, j: usize, speed: f64) -> Result<Self> {
        if i == j || i >= dim || j >= dim {
            return Err(Error::Construction(format!("invalid plane ({i}, {j}) in dimension {dim}")));
        }
        let mut a = Matrix::zeros(dim, dim);
        a[(i, j)] = 1.0;
        a[(j, i)] = -1.0;
        Self::new(a, speed)
    }

    /// Two-dimensional spiral turning counterclockwise by `v ||x||^2`.
    pub fn planar(speed: f64) -> Self {
        Self::plane(2, 1, 0, speed).expect("valid plane")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// Applies the spiral in place.
    pub fn apply_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let t = self.speed * r2;
        if t == 0.0 {
            return;
        }
        match self.plane {
            Some((i, j, a)) => {
                // exp(θ G) with G_ij = 1, G_ji = -1 is a Givens rotation.
                let (s, c) = (t * a).sin_cos();
                let (xi, xj) = (x[i], x[j]);
                x[i] = c * xi + s * xj;
                x[j] = -s * xi + c * xj;
            }
            None => {
                let r = (&self.generator * t).exp();
                let v = nalgebra::DVector::from_column_slice(x);
                let out = r * v;
                x.copy_from_slice(out.as_slice());
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}

fn swiss_roll_curve(x: f64) -> [f64; 2] {
    let t = 1.5 * PI * (1.0 + 2.0 * x);
    let (s, c) = t.sin_cos();
    [t * c / 21.0, t * s / 21.0]
}

/// `(e_1(x), e_2(x), y)` with `e(x) = (t cos t, t sin t) / 21`, `t = 3π(1 + 2x)/2`.
pub fn swiss_roll_embed(x: f64, y: f64) -> Result<[f64; 3]> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("swiss roll needs x in (0, 1), got {x}")));
    }
    let [a, b] = swiss_roll_curve(x);
    Ok([a, b, y])
}

/// Curve part of the embedding, without the domain check (used on sampled CDF values,
/// which reach 0 or 1 only with probability below 1e-16 per draw).
pub(crate) fn swiss_roll_point(x: f64) -> [f64; 2] {
    swiss_roll_curve(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn zero_speed_is_identity() {
        let s = SpiralMap::plane(3, 0, 1, 0.0).unwrap();
        let x = [0.3, -1.2, 4.0];
        assert_eq!(s.apply(&x), x.to_vec());
    }

    #[test]
    fn unit_vector_rotates_by_one_radian() {
        let s = SpiralMap::planar(1.0);
        let y = s.apply(&[1.0, 0.0]);
        assert!((y[0] - 1f64.cos()).abs() < 1e-15);
        assert!((y[1] - 1f64.sin()).abs() < 1e-15);
        assert!((y[0] - 0.540_302).abs() < 1e-6 && (y[1] - 0.841_471).abs() < 1e-6);
    }

    #[test]
    fn preserves_norm() {
        let mut rng = RngStream::new(5, 5);
        let maps = [
            SpiralMap::planar(1.3),
            SpiralMap::plane(5, 1, 2, 0.2).unwrap(),
            {
                let mut a = Matrix::zeros(4, 4);
                for (i, j, v) in [(0, 1, 1.0), (1, 3, -0.5), (2, 3, 0.7), (0, 2, 0.3)] {
                    a[(i, j)] = v;
                    a[(j, i)] = -v;
                }
                SpiralMap::new(a, 0.4).unwrap()
            },
        ];
        for s in &maps {
            for _ in 0..1000 {
                let x = rng.draw_standard_normal(s.dim());
                let y = s.apply(&x);
                let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((nx - ny).abs() < 1e-12 * nx.max(1.0));
            }
        }
    }

    #[test]
    fn general_exponential_matches_plane_rotation() {
        let plane = SpiralMap::plane(3, 1, 2, 0.7).unwrap();
        let general = SpiralMap {
            plane: None,
            ..plane.clone()
        };
        let x = [0.4, -1.1, 0.9];
        let (a, b) = (plane.apply(&x), general.apply(&x));
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_skew_generator() {
        let mut a = Matrix::zeros(2, 2);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = -0.999;
        assert!(SpiralMap::new(a, 1.0).is_err());
        let mut b = Matrix::zeros(2, 2);
        b[(0, 0)] = 1.0;
        assert!(SpiralMap::new(b, 1.0).is_err());
    }

    #[test]
    fn measure_preservation() {
        let n = 10_000;
        for v in [0.5, 1.0, 3.0] {
            let s = SpiralMap::planar(v);
            let mut rng = RngStream::new(21, 3);
            let mut mean = [0.0; 2];
            let mut cov = [[0.0; 2]; 2];
            let pts: Vec<Vec<f64>> = (0..n).map(|_| s.apply(&rng.draw_standard_normal(2))).collect();
            for p in &pts {
                mean[0] += p[0] / n as f64;
                mean[1] += p[1] / n as f64;
            }
            for p in &pts {
                for a in 0..2 {
                    for b in 0..2 {
                        cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]) / (n as f64 - 1.0);
                    }
                }
            }
            for a in 0..2 {
                assert!(mean[a].abs() < 0.05, "v={v} mean {mean:?}");
                for b in 0..2 {
                    let target = if a == b { 1.0 } else { 0.0 };
                    assert!((cov[a][b] - target).abs() < 0.05, "v={v} cov {cov:?}");
                }
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let s = SpiralMap::plane(3, 0, 1, 1.0 / 3.0).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SpiralMap>(&json).unwrap(), s);
        let bad = r#"{"dim":2,"generator":[0.0,1.0,1.0,0.0],"speed":1.0}"#;
        assert!(serde_json::from_str::<SpiralMap>(bad).is_err());
    }

    #[test]
    fn swiss_roll_values() {
        assert!(swiss_roll_embed(0.0, 0.0).is_err());
        assert!(swiss_roll_embed(1.0, 0.0).is_err());
        let [a, b, y] = swiss_roll_embed(1e-12, 2.0).unwrap();
        assert!(a.abs() < 1e-9 && (b + 0.224_399).abs() < 1e-6 && y == 2.0);
        let [a, b, _] = swiss_roll_embed(0.5, 0.0).unwrap();
        assert!((a + 0.448_799).abs() < 1e-6 && b.abs() < 1e-12);
    }

    #[test]
    fn swiss_roll_injective_on_grid() {
        let n = 10_000;
        let pts: Vec<[f64; 2]> = (1..=n).map(|i| swiss_roll_point(i as f64 / (n + 1) as f64)).collect();
        // Neighbours along the curve are the closest candidates; the spiral arms are
        // separated by roughly 2π/21 radially.
        let mut min_step = f64::INFINITY;
        for w in pts.windows(2) {
            min_step = min_step.min(((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt());
        }
        assert!(min_step > 0.0);
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        sorted.dedup();
        assert_eq!(sorted.len(), n);
    }
}
