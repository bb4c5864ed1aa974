//! Non-neural mutual information estimators.

mod cca;
mod histogram;
mod kde;
mod ksg;

pub use cca::{estimate_cca, RHO_CLIP};
pub use histogram::{estimate_histogram, DEFAULT_BINS};
pub use kde::{estimate_kde, DEFAULT_BANDWIDTH_NEIGHBORS, MIN_BANDWIDTH};
pub use ksg::{estimate_ksg1, estimate_ksg2, DEFAULT_K};

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    DegenerateInput,
    Clipped,
    NonFiniteGuarded,
    NonConverged,
    Overfitting,
    /// Sample smaller than the estimator's minimum.
    BelowMinimumSize,
    /// The estimator returned an error; the value is NaN.
    Failed,
}

impl EstimateFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateFlag::DegenerateInput => "degenerate-input",
            EstimateFlag::Clipped => "clipped",
            EstimateFlag::NonFiniteGuarded => "non-finite-guarded",
            EstimateFlag::NonConverged => "non-converged",
            EstimateFlag::Overfitting => "overfitting",
            EstimateFlag::BelowMinimumSize => "below-minimum-size",
            EstimateFlag::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            EstimateFlag::DegenerateInput,
            EstimateFlag::Clipped,
            EstimateFlag::NonFiniteGuarded,
            EstimateFlag::NonConverged,
            EstimateFlag::Overfitting,
            EstimateFlag::BelowMinimumSize,
            EstimateFlag::Failed,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
    }
}

impl fmt::Display for EstimateFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An MI estimate in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub estimator_id: String,
    /// Sorted, without duplicates.
    pub flags: Vec<EstimateFlag>,
}

impl EstimateResult {
    /// Builds a result; a non-finite value becomes NaN with the guard flag set.
    pub fn new(estimator_id: impl Into<String>, value: f64, flags: impl IntoIterator<Item = EstimateFlag>) -> Self {
        let mut flags: Vec<EstimateFlag> = flags.into_iter().collect();
        let value = if value.is_finite() {
            value
        } else {
            flags.push(EstimateFlag::NonFiniteGuarded);
            f64::NAN
        };
        flags.sort();
        flags.dedup();
        EstimateResult {
            value,
            estimator_id: estimator_id.into(),
            flags,
        }
    }

    pub fn has(&self, flag: EstimateFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn add_flag(&mut self, flag: EstimateFlag) {
        if !self.has(flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }

    /// Flags joined by `;`, empty when there are none.
    pub fn flags_label(&self) -> String {
        self.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_is_guarded() {
        let r = EstimateResult::new("x", f64::INFINITY, []);
        assert!(r.value.is_nan());
        assert!(r.has(EstimateFlag::NonFiniteGuarded));
        let r = EstimateResult::new("x", 1.0, [EstimateFlag::Clipped, EstimateFlag::DegenerateInput, EstimateFlag::Clipped]);
        assert_eq!(r.flags_label(), "degenerate-input;clipped");
    }

    #[test]
    fn flag_names_round_trip() {
        for f in [EstimateFlag::DegenerateInput, EstimateFlag::Overfitting, EstimateFlag::NonConverged] {
            assert_eq!(EstimateFlag::parse(f.as_str()), Some(f));
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
        }
    }
}
