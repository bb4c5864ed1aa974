use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{Metric, NeighborIndex};
use crate::sample::Sample;

use super::{EstimateFlag, EstimateResult};

pub const DEFAULT_BANDWIDTH_NEIGHBORS: usize = 5;
pub const MIN_BANDWIDTH: f64 = 1e-12;

/// `ln Σ_{j != i} exp(-||a_i - a_j||² / (2h²))` for the given column range.
fn log_kernel_sum(s: &Sample, i: usize, cols: std::ops::Range<usize>, h: f64, buf: &mut Vec<f64>) -> f64 {
    let q = &s.row(i)[cols.clone()];
    let inv = 0.5 / (h * h);
    buf.clear();
    for j in 0..s.n_points() {
        if j == i {
            continue;
        }
        let p = &s.row(j)[cols.clone()];
        let d2: f64 = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
        buf.push(-d2 * inv);
    }
    let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + buf.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Entropy-sum estimator `Ĥ(X) + Ĥ(Y) - Ĥ(X, Y)` from leave-one-out Gaussian kernel
/// densities with a per-point bandwidth (joint Euclidean distance to the `j`-th
/// neighbour), shared by the joint and both marginals.
///
/// With a shared bandwidth the normalising constants of the three densities cancel,
/// leaving `ln(N - 1)` plus the mean of the log kernel sums.
pub fn estimate_kde(s: &Sample, neighbors: usize) -> Result<EstimateResult> {
    let n = s.n_points();
    if neighbors == 0 || n <= neighbors {
        return Err(Error::Argument(format!(
            "KDE needs N > bandwidth neighbours, got N = {n}, j = {neighbors}"
        )));
    }
    let (w, m) = (s.width(), s.dim_x());
    let index = NeighborIndex::new(s.values().to_vec(), w, Metric::Euclidean)?;
    let per_point: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            let raw = index.knn_distance(i, neighbors).expect("neighbours checked");
            let floored = raw < MIN_BANDWIDTH;
            let h = raw.max(MIN_BANDWIDTH);
            let lj = log_kernel_sum(s, i, 0..w, h, buf);
            let lx = log_kernel_sum(s, i, 0..m, h, buf);
            let ly = log_kernel_sum(s, i, m..w, h, buf);
            (lj - lx - ly, floored)
        })
        .collect();
    let sum: f64 = per_point.iter().map(|p| p.0).sum();
    let value = sum / n as f64 + (n as f64 - 1.0).ln();
    let flags = per_point.iter().any(|p| p.1).then_some(EstimateFlag::Clipped);
    Ok(EstimateResult::new(format!("kde-{neighbors}"), value, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{dense_covariance, GaussianJoint};
    use crate::numerics::RngStream;

    #[test]
    fn independent_near_zero() {
        let v = RngStream::new(3, 3).draw_standard_normal(2 * 5000);
        let r = estimate_kde(&Sample::new(v, 1, 1).unwrap(), DEFAULT_BANDWIDTH_NEIGHBORS).unwrap();
        assert!(r.value.abs() < 0.1, "{r:?}");
    }

    #[test]
    fn bivariate_within_band() {
        let g = GaussianJoint::bivariate(0.75).unwrap();
        let s = g.sample(&mut RngStream::new(6, 6), 10_000).unwrap();
        let v = estimate_kde(&s, DEFAULT_BANDWIDTH_NEIGHBORS).unwrap().value;
        let t = g.mi_true();
        assert!(v > 2.0 / 3.0 * t && v < 1.5 * t, "{v} vs {t}");
    }

    #[test]
    fn dense_5x5_misses_band() {
        let g = GaussianJoint::new(dense_covariance(5, 5, 0.5), 5, 5).unwrap();
        let s = g.sample(&mut RngStream::new(7, 7), 5000).unwrap();
        let v = estimate_kde(&s, DEFAULT_BANDWIDTH_NEIGHBORS).unwrap().value;
        let t = g.mi_true();
        assert!(v < 2.0 / 3.0 * t || v > 1.5 * t, "{v} vs {t}");
    }

    #[test]
    fn duplicated_points_floor_bandwidth() {
        let mut values = Vec::new();
        for i in 0..60 {
            let v = (i / 10) as f64;
            values.extend([v, v * 0.5]);
        }
        let r = estimate_kde(&Sample::new(values, 1, 1).unwrap(), 5).unwrap();
        assert!(r.has(EstimateFlag::Clipped));
    }
}
