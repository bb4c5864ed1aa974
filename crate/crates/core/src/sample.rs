use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` joint observations stored row-major: each row is the X block followed by the Y block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    n_points: usize,
    dim_x: usize,
    dim_y: usize,
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>, dim_x: usize, dim_y: usize) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::Argument(format!(
                "both blocks need at least one column (got {dim_x}, {dim_y})"
            )));
        }
        let width = dim_x + dim_y;
        if values.len() % width != 0 {
            return Err(Error::Argument(format!(
                "{} values do not form rows of width {width}",
                values.len()
            )));
        }
        let n_points = values.len() / width;
        if n_points < 2 {
            return Err(Error::Argument(format!("need N >= 2 points, got {n_points}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite value at row {}, column {}",
                pos / width,
                pos % width
            )));
        }
        Ok(Sample {
            n_points,
            dim_x,
            dim_y,
            values,
        })
    }

    /// Assembles a sample from separate X and Y row-major blocks.
    pub fn from_blocks(x: &[f64], dim_x: usize, y: &[f64], dim_y: usize) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 || x.len() % dim_x != 0 || y.len() % dim_y != 0 {
            return Err(Error::Argument("block shapes are inconsistent".into()));
        }
        let n = x.len() / dim_x;
        if y.len() / dim_y != n {
            return Err(Error::Argument(format!(
                "X has {n} rows but Y has {}",
                y.len() / dim_y
            )));
        }
        let mut values = Vec::with_capacity(n * (dim_x + dim_y));
        for i in 0..n {
            values.extend_from_slice(&x[i * dim_x..(i + 1) * dim_x]);
            values.extend_from_slice(&y[i * dim_y..(i + 1) * dim_y]);
        }
        Self::new(values, dim_x, dim_y)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn width(&self) -> usize {
        self.dim_x + self.dim_y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.row(i)[..self.dim_x]
    }

    #[inline]
    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.row(i)[self.dim_x..]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.width()).copied().collect()
    }

    pub fn x_block(&self) -> Vec<f64> {
        (0..self.n_points).flat_map(|i| self.x_row(i).iter().copied()).collect()
    }

    pub fn y_block(&self) -> Vec<f64> {
        (0..self.n_points).flat_map(|i| self.y_row(i).iter().copied()).collect()
    }

    /// Sample made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.width());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self::new(values, self.dim_x, self.dim_y)
    }

    /// Applies `f` to every row in place; `f` receives the X block and the Y block.
    pub fn map_rows(&mut self, mut f: impl FnMut(&mut [f64], &mut [f64])) {
        let (w, dx) = (self.width(), self.dim_x);
        for row in self.values.chunks_exact_mut(w) {
            let (x, y) = row.split_at_mut(dx);
            f(x, y);
        }
    }
}
