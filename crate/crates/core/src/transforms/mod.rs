//! Injective maps applied blockwise to base laws. MI is unchanged by maps of the form
//! `f(X), g(Y)` with `f`, `g` continuous and injective, so the ground truth carries over.

mod axis;
mod spiral;

pub use axis::{gmm_cdf, wiggly_slope_bound, AxisMap, AxisMapKind, InjectivityCertificate, GMM_QUANTILE_TOL};
pub use spiral::{swiss_roll_embed, SpiralMap};

use serde::{Deserialize, Serialize};

use crate::distributions::{BaseDistribution, JointDistribution};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::sample::Sample;

/// A map acting on one whole block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockMap {
    Axis(AxisMap),
    Spiral(SpiralMap),
    /// One unit-interval coordinate onto the Swiss-roll curve in the plane.
    SwissRoll,
}

impl BlockMap {
    pub fn name(&self) -> &'static str {
        match self {
            BlockMap::Axis(a) => a.name(),
            BlockMap::Spiral(_) => "spiral",
            BlockMap::SwissRoll => "swiss-roll",
        }
    }

    /// Output dimension for a block of dimension `dim`.
    fn output_dim(&self, dim: usize) -> Result<usize> {
        match self {
            BlockMap::Axis(_) => Ok(dim),
            BlockMap::Spiral(s) if s.dim() == dim => Ok(dim),
            BlockMap::Spiral(s) => Err(Error::Construction(format!(
                "spiral of dimension {} applied to a block of dimension {dim}",
                s.dim()
            ))),
            BlockMap::SwissRoll if dim == 1 => Ok(2),
            BlockMap::SwissRoll => Err(Error::Construction(format!(
                "swiss roll needs a one-dimensional block, got {dim}"
            ))),
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        match self {
            BlockMap::Axis(a) => out.extend(input.iter().map(|&v| a.forward(v))),
            BlockMap::Spiral(s) => {
                let start = out.len();
                out.extend_from_slice(input);
                s.apply_in_place(&mut out[start..]);
            }
            BlockMap::SwissRoll => out.extend(spiral::swiss_roll_point(input[0])),
        }
    }
}

/// Maps applied in list order (the last entry is outermost).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockTransform {
    pub maps: Vec<BlockMap>,
}

impl BlockTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(maps: Vec<BlockMap>) -> Self {
        BlockTransform { maps }
    }

    pub fn is_identity(&self) -> bool {
        self.maps.is_empty()
    }

    fn output_dim(&self, dim: usize) -> Result<usize> {
        self.maps.iter().try_fold(dim, |d, m| m.output_dim(d))
    }

    /// Composition written outermost-first, e.g. `spiral@normal-cdf`.
    pub fn label(&self) -> String {
        self.maps.iter().rev().map(BlockMap::name).collect::<Vec<_>>().join("@")
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        let mut cur = input.to_vec();
        let mut next = Vec::with_capacity(cur.len() * 2);
        for m in &self.maps {
            next.clear();
            m.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        out.extend_from_slice(&cur);
    }
}

/// A base law pushed through `f` on X and `g` on Y.
#[derive(Debug, Clone)]
pub struct TransformedDistribution {
    base: BaseDistribution,
    x_transform: BlockTransform,
    y_transform: BlockTransform,
    dim_x: usize,
    dim_y: usize,
    mi_true: f64,
}

/// Checks that every map stays inside one block and chains with consistent shapes.
///
/// Passing a spiral sized for the joint vector is rejected: such a map would mix X
/// and Y coordinates, which does not preserve MI.
pub fn make_task_transform(
    base: BaseDistribution,
    x_maps: Vec<BlockMap>,
    y_maps: Vec<BlockMap>,
) -> Result<TransformedDistribution> {
    let (bx, by) = (base.dim_x(), base.dim_y());
    for m in x_maps.iter().chain(&y_maps) {
        if let BlockMap::Spiral(s) = m {
            if s.dim() == bx + by && s.dim() != bx && s.dim() != by {
                return Err(Error::Construction(
                    "a map acting on the joint vector couples X and Y".into(),
                ));
            }
        }
    }
    let x_transform = BlockTransform::new(x_maps);
    let y_transform = BlockTransform::new(y_maps);
    let dim_x = x_transform.output_dim(bx)?;
    let dim_y = y_transform.output_dim(by)?;
    let mi_true = base.mi_true();
    Ok(TransformedDistribution {
        base,
        x_transform,
        y_transform,
        dim_x,
        dim_y,
        mi_true,
    })
}

impl TransformedDistribution {
    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    pub fn x_transform(&self) -> &BlockTransform {
        &self.x_transform
    }

    pub fn y_transform(&self) -> &BlockTransform {
        &self.y_transform
    }

    /// Pushes an existing base sample through the maps.
    pub fn push_forward(&self, base_sample: &Sample) -> Result<Sample> {
        if self.x_transform.is_identity() && self.y_transform.is_identity() {
            return Ok(base_sample.clone());
        }
        let n = base_sample.n_points();
        let mut values = Vec::with_capacity(n * (self.dim_x + self.dim_y));
        for i in 0..n {
            self.x_transform.apply(base_sample.x_row(i), &mut values);
            self.y_transform.apply(base_sample.y_row(i), &mut values);
        }
        Sample::new(values, self.dim_x, self.dim_y)
    }
}

impl JointDistribution for TransformedDistribution {
    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_y(&self) -> usize {
        self.dim_y
    }

    fn mi_true(&self) -> f64 {
        self.mi_true
    }

    fn sample(&self, rng: &mut RngStream, n_points: usize) -> Result<Sample> {
        let base = self.base.sample(rng, n_points)?;
        self.push_forward(&base)
    }
}
