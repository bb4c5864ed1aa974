use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_cca, estimate_histogram, estimate_kde, estimate_ksg1, estimate_ksg2, EstimateFlag,
    EstimateResult, DEFAULT_BANDWIDTH_NEIGHBORS, DEFAULT_BINS, DEFAULT_K,
};
use crate::neural::{train_estimate, Architecture, Bound, TrainConfig};
use crate::sample::Sample;

/// An estimator with its hyperparameters. Neural seeds are replaced per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    Cca,
    Ksg1 { k: usize },
    Ksg2 { k: usize },
    Histogram { bins: usize },
    Kde { neighbors: usize },
    Neural(TrainConfig),
}

impl EstimatorSpec {
    pub fn id(&self) -> String {
        match self {
            EstimatorSpec::Cca => "cca".into(),
            EstimatorSpec::Ksg1 { k } => format!("ksg-{k}"),
            EstimatorSpec::Ksg2 { k } => format!("ksg2-{k}"),
            EstimatorSpec::Histogram { bins } => format!("histogram-{bins}"),
            EstimatorSpec::Kde { neighbors } => format!("kde-{neighbors}"),
            EstimatorSpec::Neural(c) => c.estimator_id(),
        }
    }

    /// Accepts ids as produced by [`EstimatorSpec::id`]; the numeric suffix may be
    /// omitted for defaults (`ksg`, `histogram`, `kde`, `nwj` meaning `nwj-M`).
    pub fn parse(id: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("unknown estimator '{id}'"));
        let (head, tail) = match id.split_once('-') {
            Some((h, t)) => (h, Some(t)),
            None => (id, None),
        };
        let number = |default: usize| -> Result<usize> {
            match tail {
                None => Ok(default),
                Some(t) => t.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(bad),
            }
        };
        Ok(match head {
            "cca" if tail.is_none() => EstimatorSpec::Cca,
            "ksg" | "ksg1" => EstimatorSpec::Ksg1 { k: number(DEFAULT_K)? },
            "ksg2" => EstimatorSpec::Ksg2 { k: number(DEFAULT_K)? },
            "histogram" => EstimatorSpec::Histogram { bins: number(DEFAULT_BINS)? },
            "kde" => EstimatorSpec::Kde {
                neighbors: number(DEFAULT_BANDWIDTH_NEIGHBORS)?,
            },
            other => {
                let bound = Bound::parse(other).ok_or_else(bad)?;
                let arch = match tail {
                    None => Architecture::M,
                    Some(t) => Architecture::parse(t).ok_or_else(bad)?,
                };
                EstimatorSpec::Neural(TrainConfig::new(bound, arch, 0))
            }
        })
    }

    pub fn is_neural(&self) -> bool {
        matches!(self, EstimatorSpec::Neural(_))
    }

    pub fn min_points(&self) -> usize {
        match self {
            EstimatorSpec::Neural(c) => c.min_points(),
            EstimatorSpec::Ksg1 { k } | EstimatorSpec::Ksg2 { k } => k + 1,
            EstimatorSpec::Kde { neighbors } => neighbors + 1,
            _ => 2,
        }
    }

    /// Runs the estimator. Errors and undersized samples become NaN records with a
    /// flag rather than propagating.
    pub fn run(&self, sample: &Sample, seed: u64) -> EstimateResult {
        if sample.n_points() < self.min_points() {
            return EstimateResult::new(self.id(), f64::NAN, [EstimateFlag::BelowMinimumSize]);
        }
        let out = match self {
            EstimatorSpec::Cca => estimate_cca(sample),
            EstimatorSpec::Ksg1 { k } => estimate_ksg1(sample, *k),
            EstimatorSpec::Ksg2 { k } => estimate_ksg2(sample, *k),
            EstimatorSpec::Histogram { bins } => estimate_histogram(sample, *bins),
            EstimatorSpec::Kde { neighbors } => estimate_kde(sample, *neighbors),
            EstimatorSpec::Neural(c) => {
                let c = TrainConfig { seed, ..c.clone() };
                train_estimate(sample, &c).map(|(r, _)| r)
            }
        };
        match out {
            Ok(mut r) => {
                r.estimator_id = self.id();
                r
            }
            Err(_) => EstimateResult::new(self.id(), f64::NAN, [EstimateFlag::Failed]),
        }
    }
}

/// The nine estimators of the default heatmap.
pub fn default_estimators() -> Vec<EstimatorSpec> {
    let mut v = vec![
        EstimatorSpec::Cca,
        EstimatorSpec::Histogram { bins: DEFAULT_BINS },
        EstimatorSpec::Kde {
            neighbors: DEFAULT_BANDWIDTH_NEIGHBORS,
        },
        EstimatorSpec::Ksg1 { k: DEFAULT_K },
        EstimatorSpec::Ksg2 { k: DEFAULT_K },
    ];
    v.extend(
        Bound::ALL
            .iter()
            .map(|&b| EstimatorSpec::Neural(TrainConfig::new(b, Architecture::M, 0))),
    );
    v
}

/// Cheap estimators only, for quick runs.
pub fn classical_estimators() -> Vec<EstimatorSpec> {
    default_estimators().into_iter().filter(|e| !e.is_neural()).collect()
}
