use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::special::digamma_unchecked as psi;
use crate::numerics::{Metric, NeighborIndex};
use crate::sample::Sample;

use super::{EstimateFlag, EstimateResult};

pub const DEFAULT_K: usize = 10;
/// Share of zero radii above which the input is flagged as degenerate.
const ZERO_RADIUS_SHARE: f64 = 0.01;

struct Indexes {
    joint: NeighborIndex,
    x: NeighborIndex,
    y: NeighborIndex,
}

fn build_indexes(s: &Sample, k: usize) -> Result<Indexes> {
    if k == 0 || k >= s.n_points() {
        return Err(Error::Argument(format!(
            "k = {k} must satisfy 1 <= k < N = {}",
            s.n_points()
        )));
    }
    let (w, m) = (s.width(), s.dim_x());
    Ok(Indexes {
        joint: NeighborIndex::new(s.values().to_vec(), w, Metric::MaxNorm)?,
        x: NeighborIndex::from_columns(s.values(), w, 0..m, Metric::MaxNorm)?,
        y: NeighborIndex::from_columns(s.values(), w, m..w, Metric::MaxNorm)?,
    })
}

/// Ordered sum, so results do not depend on thread scheduling.
fn mean(terms: &[f64]) -> f64 {
    terms.iter().sum::<f64>() / terms.len() as f64
}

fn zero_radius_flag(zeros: usize, n: usize) -> Option<EstimateFlag> {
    (zeros as f64 > ZERO_RADIUS_SHARE * n as f64).then_some(EstimateFlag::DegenerateInput)
}

/// First Kraskov–Stögbauer–Grassberger estimator, max-norm joint metric and strict
/// marginal counts.
pub fn estimate_ksg1(s: &Sample, k: usize) -> Result<EstimateResult> {
    let idx = build_indexes(s, k)?;
    let n = s.n_points();
    let per_point: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let eps = idx.joint.knn_distance(i, k).expect("k checked");
            let nx = idx.x.range_count(i, eps, true).expect("row in range");
            let ny = idx.y.range_count(i, eps, true).expect("row in range");
            (psi(nx as f64 + 1.0) + psi(ny as f64 + 1.0), eps == 0.0)
        })
        .collect();
    let terms: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let zeros = per_point.iter().filter(|p| p.1).count();
    let value = psi(k as f64) + psi(n as f64) - mean(&terms);
    Ok(EstimateResult::new(format!("ksg-{k}"), value, zero_radius_flag(zeros, n)))
}

/// Second KSG variant: per-block radii from the `k` joint neighbours, inclusive counts,
/// and a `-1/k` correction.
pub fn estimate_ksg2(s: &Sample, k: usize) -> Result<EstimateResult> {
    let idx = build_indexes(s, k)?;
    let n = s.n_points();
    let per_point: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let neighbours = idx.joint.knn(i, k).expect("k checked");
            let (xi, yi) = (s.x_row(i), s.y_row(i));
            let (mut ex, mut ey) = (0.0f64, 0.0f64);
            for &(_, j) in &neighbours {
                ex = ex.max(Metric::MaxNorm.distance(xi, s.x_row(j)));
                ey = ey.max(Metric::MaxNorm.distance(yi, s.y_row(j)));
            }
            let nx = idx.x.range_count(i, ex, false).expect("row in range");
            let ny = idx.y.range_count(i, ey, false).expect("row in range");
            (psi(nx.max(1) as f64) + psi(ny.max(1) as f64), ex == 0.0 || ey == 0.0)
        })
        .collect();
    let terms: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let zeros = per_point.iter().filter(|p| p.1).count();
    let value = psi(k as f64) - 1.0 / k as f64 + psi(n as f64) - mean(&terms);
    Ok(EstimateResult::new(format!("ksg2-{k}"), value, zero_radius_flag(zeros, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GaussianJoint;
    use crate::numerics::RngStream;

    /// Direct transcription of the KSG-1 sums with exhaustive scans.
    fn ksg1_reference(s: &Sample, k: usize) -> f64 {
        let n = s.n_points();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        let mut sum = 0.0;
        for i in 0..n {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist(s.row(i), s.row(j))).collect();
            d.sort_by(f64::total_cmp);
            let eps = d[k - 1];
            let nx = (0..n).filter(|&j| j != i && dist(s.x_row(i), s.x_row(j)) < eps).count();
            let ny = (0..n).filter(|&j| j != i && dist(s.y_row(i), s.y_row(j)) < eps).count();
            sum += psi(nx as f64 + 1.0) + psi(ny as f64 + 1.0);
        }
        psi(k as f64) + psi(n as f64) - sum / n as f64
    }

    #[test]
    fn matches_exhaustive_reference() {
        let mut rng = RngStream::new(77, 0);
        for case in 0..50 {
            let n = 20 + rng.below(481);
            let m = 1 + rng.below(3);
            let d = 1 + rng.below(3);
            let k = 1 + rng.below(10.min(n - 1));
            let mut values = rng.draw_standard_normal(n * (m + d));
            if case % 5 == 0 {
                // coarse grid to exercise ties
                for v in &mut values {
                    *v = (*v * 4.0).round() / 4.0;
                }
            }
            let s = Sample::new(values, m, d).unwrap();
            let fast = estimate_ksg1(&s, k).unwrap().value;
            assert_eq!(fast, ksg1_reference(&s, k), "case {case}: N={n} m={m} n={d} k={k}");
        }
    }

    #[test]
    fn independent_uniform_near_zero() {
        let mut total = 0.0;
        for seed in 0..10 {
            let v = RngStream::new(seed, 3).draw_uniform01(4000);
            let s = Sample::new(v, 1, 1).unwrap();
            total += estimate_ksg1(&s, DEFAULT_K).unwrap().value;
        }
        assert!((total / 10.0).abs() < 0.05, "mean {}", total / 10.0);
    }

    #[test]
    fn bivariate_within_band() {
        let g = GaussianJoint::bivariate(0.75).unwrap();
        let s = g.sample(&mut RngStream::new(4, 4), 10_000).unwrap();
        let truth = g.mi_true();
        for r in [estimate_ksg1(&s, 10).unwrap(), estimate_ksg2(&s, 10).unwrap()] {
            assert!(r.value > 2.0 / 3.0 * truth && r.value < 1.5 * truth, "{r:?}");
            assert!(r.flags.is_empty());
        }
    }

    #[test]
    fn translation_invariant() {
        let g = GaussianJoint::bivariate(0.5).unwrap();
        let s = g.sample(&mut RngStream::new(5, 5), 1000).unwrap();
        let mut shifted = s.clone();
        shifted.map_rows(|x, _| x[0] += 0.5);
        assert_eq!(estimate_ksg1(&s, 5).unwrap().value, estimate_ksg1(&shifted, 5).unwrap().value);
    }

    #[test]
    fn duplicates_are_flagged() {
        let mut values = Vec::new();
        for i in 0..100 {
            let v = (i / 4) as f64;
            values.extend([v, v]);
        }
        let r = estimate_ksg1(&Sample::new(values, 1, 1).unwrap(), 2).unwrap();
        assert!(r.has(EstimateFlag::DegenerateInput));
        assert!(r.value.is_finite());
    }

    #[test]
    fn k_must_be_below_n() {
        let s = Sample::new(vec![0.0, 1.0, 2.0, 3.0], 1, 1).unwrap();
        assert!(estimate_ksg1(&s, 2).is_err());
        assert!(estimate_ksg2(&s, 0).is_err());
    }
}
