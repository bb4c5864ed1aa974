use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::normal_quantile;
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PreprocessStrategy {
    #[default]
    Standardize,
    UniformizeMargins,
    GaussianizeMargins,
    None,
}

impl PreprocessStrategy {
    pub fn name(self) -> &'static str {
        match self {
            PreprocessStrategy::Standardize => "standardize",
            PreprocessStrategy::UniformizeMargins => "uniformize-margins",
            PreprocessStrategy::GaussianizeMargins => "gaussianize-margins",
            PreprocessStrategy::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standardize" => Ok(Self::Standardize),
            "uniformize-margins" | "uniformize" => Ok(Self::UniformizeMargins),
            "gaussianize-margins" | "gaussianize" => Ok(Self::GaussianizeMargins),
            "none" => Ok(Self::None),
            other => Err(Error::Argument(format!("unknown preprocessing strategy '{other}'"))),
        }
    }
}

/// Result of preprocessing; `constant_columns` lists dimensions with zero spread,
/// which standardization leaves centred but unscaled.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub sample: Sample,
    pub constant_columns: Vec<usize>,
}

pub fn preprocess(sample: &Sample, strategy: PreprocessStrategy) -> Result<Preprocessed> {
    let n = sample.n_points();
    let w = sample.width();
    let mut constant_columns = Vec::new();
    let mut values = sample.values().to_vec();
    for j in 0..w {
        let col = sample.column(j);
        let out: Vec<f64> = match strategy {
            PreprocessStrategy::None => continue,
            PreprocessStrategy::Standardize => {
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    col.iter().map(|v| (v - mean) / sd).collect()
                } else {
                    constant_columns.push(j);
                    col.iter().map(|v| v - mean).collect()
                }
            }
            PreprocessStrategy::UniformizeMargins => uniform_scores(&col),
            PreprocessStrategy::GaussianizeMargins => uniform_scores(&col)
                .into_iter()
                .map(normal_quantile)
                .collect::<Result<_>>()?,
        };
        for (i, v) in out.into_iter().enumerate() {
            values[i * w + j] = v;
        }
    }
    Ok(Preprocessed {
        sample: Sample::new(values, sample.dim_x(), sample.dim_y())?,
        constant_columns,
    })
}

/// `rank / (N + 1)` with ranks starting at 1; tied values share their average rank.
pub fn uniform_scores(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && col[order[end]] == col[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank / (n as f64 + 1.0);
        }
        start = end;
    }
    out
}
