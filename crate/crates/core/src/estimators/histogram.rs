use crate::error::{Error, Result};
use crate::sample::Sample;

use super::{EstimateFlag, EstimateResult};

pub const DEFAULT_BINS: usize = 10;

/// Plug-in entropy (nats) of the cell labels; labels are sorted so that counting and
/// summation order are fixed.
fn plug_in_entropy(mut labels: Vec<Vec<u32>>) -> f64 {
    let n = labels.len() as f64;
    labels.sort_unstable();
    let mut h = 0.0;
    let mut run = 0usize;
    for i in 0..labels.len() {
        run += 1;
        if i + 1 == labels.len() || labels[i + 1] != labels[i] {
            let p = run as f64 / n;
            h -= p * p.ln();
            run = 0;
        }
    }
    h
}

/// Plug-in MI on an equal-width grid spanning the empirical range of each column.
/// Bin volumes cancel in the MI, so only cell counts enter.
pub fn estimate_histogram(s: &Sample, bins: usize) -> Result<EstimateResult> {
    let n = s.n_points();
    if bins == 0 || n < bins {
        return Err(Error::Argument(format!("histogram needs 1 <= bins <= N, got {bins} bins for N = {n}")));
    }
    let w = s.width();
    let mut cols: Vec<(usize, f64, f64)> = Vec::with_capacity(w);
    let mut degenerate = false;
    for j in 0..w {
        let c = s.column(j);
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            cols.push((j, lo, hi));
        } else {
            degenerate = true;
        }
    }
    let cell = |v: f64, lo: f64, hi: f64| -> u32 { (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1) as u32 };
    let m = s.dim_x();
    let mut joint = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let row = s.row(i);
        let labels: Vec<u32> = cols.iter().map(|&(j, lo, hi)| cell(row[j], lo, hi)).collect();
        let split = cols.iter().filter(|c| c.0 < m).count();
        xs.push(labels[..split].to_vec());
        ys.push(labels[split..].to_vec());
        joint.push(labels);
    }
    let value = plug_in_entropy(xs) + plug_in_entropy(ys) - plug_in_entropy(joint);
    let flags = degenerate.then_some(EstimateFlag::DegenerateInput);
    Ok(EstimateResult::new(format!("histogram-{bins}"), value, flags))
}
