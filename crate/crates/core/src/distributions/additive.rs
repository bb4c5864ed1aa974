use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::sample::Sample;

/// `X ~ Uniform(0, 1)`, `Y = X + N` with `N ~ Uniform(-ε, ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveNoiseJoint {
    epsilon: f64,
    mi_true: f64,
}

impl AdditiveNoiseJoint {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(AdditiveNoiseJoint {
            epsilon,
            mi_true: additive_noise_mi(epsilon)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mi_true(&self) -> f64 {
        self.mi_true
    }

    pub fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
        sample_additive_noise(self.epsilon, rng, n_points)
    }
}

/// `ε - ln(2ε)` for `ε <= 1/2`, else `1 / (4ε)`.
pub fn additive_noise_mi(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("noise half-width must be > 0, got {epsilon}")));
    }
    Ok(if epsilon <= 0.5 {
        epsilon - (2.0 * epsilon).ln()
    } else {
        1.0 / (4.0 * epsilon)
    })
}

pub fn sample_additive_noise(epsilon: f64, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("noise half-width must be > 0, got {epsilon}")));
    }
    let mut values = Vec::with_capacity(2 * n_points);
    for _ in 0..n_points {
        let x = rng.uniform01();
        let noise = epsilon * (2.0 * rng.uniform01() - 1.0);
        values.push(x);
        values.push(x + noise);
    }
    Sample::new(values, 1, 1)
}
