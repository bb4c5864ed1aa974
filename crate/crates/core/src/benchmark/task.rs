use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{
    AdditiveNoiseJoint, BaseDistribution, CovarianceSpec, GaussianJoint, JointDistribution,
    StudentJoint,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::sample::Sample;
use crate::transforms::{make_task_transform, BlockMap, TransformedDistribution};

/// Parameters of the untransformed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum BaseSpec {
    Gaussian {
        dim_x: usize,
        dim_y: usize,
        covariance: CovarianceSpec,
    },
    Student {
        dim_x: usize,
        dim_y: usize,
        dof: u32,
        dispersion: CovarianceSpec,
    },
    AdditiveNoise {
        epsilon: f64,
    },
}

impl BaseSpec {
    pub fn build(&self) -> Result<BaseDistribution> {
        Ok(match self {
            BaseSpec::Gaussian {
                dim_x,
                dim_y,
                covariance,
            } => GaussianJoint::new(covariance.build(*dim_x, *dim_y)?, *dim_x, *dim_y)?.into(),
            BaseSpec::Student {
                dim_x,
                dim_y,
                dof,
                dispersion,
            } => StudentJoint::new(dispersion.build(*dim_x, *dim_y)?, *dof, *dim_x, *dim_y)?.into(),
            BaseSpec::AdditiveNoise { epsilon } => AdditiveNoiseJoint::new(*epsilon)?.into(),
        })
    }

    pub fn law(&self) -> &'static str {
        match self {
            BaseSpec::Gaussian { .. } => "gaussian",
            BaseSpec::Student { .. } => "student",
            BaseSpec::AdditiveNoise { .. } => "additive-noise",
        }
    }
}

/// One benchmark task: a base law, blockwise maps and the exact MI they carry.
///
/// `stream_key` names the random stream used for sampling. Tasks sharing a base
/// share the key, so a transformed task sees the pushed-forward base sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub family: String,
    pub stream_key: String,
    pub base: BaseSpec,
    /// Maps on X, innermost first.
    pub x_transform: Vec<BlockMap>,
    pub y_transform: Vec<BlockMap>,
    pub dim_x: usize,
    pub dim_y: usize,
    pub mi_true: f64,
    pub reconstructed: bool,
    pub description: String,
}

impl TaskSpec {
    pub fn new(
        task_id: impl Into<String>,
        family: impl Into<String>,
        stream_key: impl Into<String>,
        base: BaseSpec,
        x_transform: Vec<BlockMap>,
        y_transform: Vec<BlockMap>,
    ) -> Result<Self> {
        let dist = make_task_transform(base.build()?, x_transform.clone(), y_transform.clone())?;
        Ok(TaskSpec {
            task_id: task_id.into(),
            family: family.into(),
            stream_key: stream_key.into(),
            base,
            x_transform,
            y_transform,
            dim_x: dist.dim_x(),
            dim_y: dist.dim_y(),
            mi_true: dist.mi_true(),
            reconstructed: false,
            description: String::new(),
        })
    }

    pub fn reconstructed(mut self, yes: bool) -> Self {
        self.reconstructed = yes;
        self
    }

    pub fn describe(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn distribution(&self) -> Result<TransformedDistribution> {
        make_task_transform(
            self.base.build()?,
            self.x_transform.clone(),
            self.y_transform.clone(),
        )
    }

    /// Short hex digest of the sampling law (base parameters and maps).
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::json!({
            "base": self.base,
            "x_transform": self.x_transform,
            "y_transform": self.y_transform,
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_transformed(&self) -> bool {
        !self.x_transform.is_empty() || !self.y_transform.is_empty()
    }

    pub fn rng(&self, global_seed: u64, seed_index: u64) -> RngStream {
        RngStream::derive(global_seed, &self.stream_key, seed_index, "sample")
    }

    pub fn sample(&self, global_seed: u64, seed_index: u64, n_points: usize) -> Result<Sample> {
        self.distribution()?
            .sample(&mut self.rng(global_seed, seed_index), n_points)
    }
}

pub fn find_task<'a>(tasks: &'a [TaskSpec], task_id: &str) -> Result<&'a TaskSpec> {
    tasks
        .iter()
        .find(|t| t.task_id == task_id)
        .ok_or_else(|| Error::UnknownTask(task_id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::AxisMap;

    fn gaussian() -> BaseSpec {
        BaseSpec::Gaussian {
            dim_x: 1,
            dim_y: 1,
            covariance: CovarianceSpec::Bivariate { rho: 0.75 },
        }
    }

    #[test]
    fn hash_tracks_law_only() {
        let a = TaskSpec::new("a", "f", "a", gaussian(), vec![], vec![]).unwrap();
        let b = TaskSpec::new("b", "g", "b", gaussian(), vec![], vec![]).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = TaskSpec::new(
            "c",
            "f",
            "a",
            gaussian(),
            vec![BlockMap::Axis(AxisMap::asinh())],
            vec![],
        )
        .unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash().len(), 16);
    }

    #[test]
    fn shared_stream_key_pushes_forward_base_sample() {
        let base = TaskSpec::new("base", "f", "base", gaussian(), vec![], vec![]).unwrap();
        let t = TaskSpec::new(
            "t",
            "f",
            "base",
            gaussian(),
            vec![BlockMap::Axis(AxisMap::asinh())],
            vec![],
        )
        .unwrap();
        let a = base.sample(1, 0, 50).unwrap();
        let b = t.sample(1, 0, 50).unwrap();
        for i in 0..50 {
            assert_eq!(b.x_row(i)[0], a.x_row(i)[0].asinh());
            assert_eq!(b.y_row(i), a.y_row(i));
        }
    }

    #[test]
    fn json_round_trip() {
        let t = TaskSpec::new("a", "f", "a", gaussian(), vec![], vec![BlockMap::SwissRoll])
            .unwrap()
            .reconstructed(true);
        let back: TaskSpec = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.dim_y, 2);
    }
}
