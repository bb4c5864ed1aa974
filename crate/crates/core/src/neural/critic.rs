//! Fully connected critic with rectifier hidden layers and a scalar linear output.
//!
//! Parameters live in one flat vector: for each layer, the weight matrix (row-major,
//! `out x in`) followed by the bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    S,
    M,
    L,
    D,
}

impl Architecture {
    pub fn hidden(self) -> &'static [usize] {
        match self {
            Architecture::S => &[10, 5],
            Architecture::M => &[16, 8],
            Architecture::L => &[24, 12],
            Architecture::D => &[8, 8, 8],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::S => "S",
            Architecture::M => "M",
            Architecture::L => "L",
            Architecture::D => "D",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "S" | "s" => Some(Architecture::S),
            "M" | "m" => Some(Architecture::M),
            "L" | "l" => Some(Architecture::L),
            "D" | "d" => Some(Architecture::D),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Post-activation outputs of every layer for one batch; the last entry is the output.
pub(crate) type Activations = Vec<Vec<f64>>;

impl CriticParams {
    /// All-zero parameters for the given layer sizes (input first, output `1` last).
    pub fn zeros(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) || *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Argument(format!(
                "layer sizes must be positive and end in 1, got {layer_sizes:?}"
            )));
        }
        let total = layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(CriticParams {
            layer_sizes,
            params: vec![0.0; total],
        })
    }

    pub fn for_architecture(arch: Architecture, input: usize) -> Result<Self> {
        let mut sizes = vec![input];
        sizes.extend_from_slice(arch.hidden());
        sizes.push(1);
        Self::zeros(sizes)
    }

    /// Uniform on `±1/sqrt(fan_in)` for weights and biases.
    pub fn init_uniform(&mut self, rng: &mut RngStream) {
        for l in 0..self.n_layers() {
            let bound = 1.0 / (self.layer_sizes[l] as f64).sqrt();
            let (w, b) = self.offsets(l);
            let end = b + self.layer_sizes[l + 1];
            for p in &mut self.params[w..end] {
                *p = bound * (2.0 * rng.uniform01() - 1.0);
            }
        }
    }

    pub fn from_flat(layer_sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let mut c = Self::zeros(layer_sizes)?;
        if params.len() != c.params.len() {
            return Err(Error::Argument(format!(
                "expected {} parameters, got {}",
                c.params.len(),
                params.len()
            )));
        }
        c.params = params;
        Ok(c)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Offsets of the weight matrix and bias of layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut w = 0;
        for k in 0..l {
            w += self.layer_sizes[k + 1] * (self.layer_sizes[k] + 1);
        }
        (w, w + self.layer_sizes[l + 1] * self.layer_sizes[l])
    }

    /// Critic value per row of `inputs` (row-major, width = input dimension).
    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if inputs.len() % d != 0 {
            return Err(Error::Argument(format!(
                "input length {} is not a multiple of the critic width {d}",
                inputs.len()
            )));
        }
        let pre0 = self.first_layer(inputs);
        Ok(self.tail(pre0).pop().unwrap())
    }

    /// First-layer pre-activations `W_0 z + b_0` per row.
    pub(crate) fn first_layer(&self, inputs: &[f64]) -> Vec<f64> {
        let (d, h) = (self.layer_sizes[0], self.layer_sizes[1]);
        let (w, b) = self.offsets(0);
        let (w, b) = (&self.params[w..b], &self.params[b..b + h]);
        let rows = inputs.len() / d;
        let mut out = Vec::with_capacity(rows * h);
        for z in inputs.chunks_exact(d) {
            for o in 0..h {
                let wr = &w[o * d..(o + 1) * d];
                out.push(b[o] + wr.iter().zip(z).map(|(a, c)| a * c).sum::<f64>());
            }
        }
        out
    }

    /// First-layer contributions `W_0x x` (bias excluded) of the X part or the Y part
    /// of the input, for row-major block rows.
    pub(crate) fn first_layer_block(&self, block: &[f64], cols: std::ops::Range<usize>) -> Vec<f64> {
        let (d, h) = (self.layer_sizes[0], self.layer_sizes[1]);
        let width = cols.len();
        let (w, _) = self.offsets(0);
        let w = &self.params[w..w + h * d];
        let mut out = Vec::with_capacity(block.len() / width * h);
        for z in block.chunks_exact(width) {
            for o in 0..h {
                let wr = &w[o * d + cols.start..o * d + cols.end];
                out.push(wr.iter().zip(z).map(|(a, c)| a * c).sum::<f64>());
            }
        }
        out
    }

    pub(crate) fn first_bias(&self) -> &[f64] {
        let (_, b) = self.offsets(0);
        &self.params[b..b + self.layer_sizes[1]]
    }

    /// Runs layers `1..` from the first-layer pre-activations and keeps every layer's
    /// post-activation output.
    pub(crate) fn tail(&self, pre0: Vec<f64>) -> Activations {
        let nl = self.n_layers();
        let mut acts = Vec::with_capacity(nl);
        let mut cur = pre0;
        if nl > 1 {
            relu(&mut cur);
        }
        acts.push(cur);
        for l in 1..nl {
            let (din, dout) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (w, b) = self.offsets(l);
            let (w, b) = (&self.params[w..b], &self.params[b..b + dout]);
            let input = acts.last().unwrap();
            let mut next = Vec::with_capacity(input.len() / din * dout);
            for a in input.chunks_exact(din) {
                for o in 0..dout {
                    let wr = &w[o * din..(o + 1) * din];
                    next.push(b[o] + wr.iter().zip(a).map(|(p, q)| p * q).sum::<f64>());
                }
            }
            if l < nl - 1 {
                relu(&mut next);
            }
            acts.push(next);
        }
        acts
    }

    /// Back-propagates `g_out` (d objective / d output per row) through layers `1..`,
    /// accumulating into `grad`, and returns d objective / d first-layer pre-activation.
    pub(crate) fn tail_backward(&self, acts: &Activations, g_out: Vec<f64>, grad: &mut [f64]) -> Vec<f64> {
        let nl = self.n_layers();
        let mut delta = g_out;
        for l in (1..nl).rev() {
            let (din, dout) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (wo, bo) = self.offsets(l);
            let w = &self.params[wo..bo];
            let input = &acts[l - 1];
            let mut prev = vec![0.0; input.len()];
            for ((a, dl), pd) in input
                .chunks_exact(din)
                .zip(delta.chunks_exact(dout))
                .zip(prev.chunks_exact_mut(din))
            {
                for o in 0..dout {
                    let g = dl[o];
                    if g == 0.0 {
                        continue;
                    }
                    grad[bo + o] += g;
                    let gw = &mut grad[wo + o * din..wo + (o + 1) * din];
                    for (gwi, ai) in gw.iter_mut().zip(a) {
                        *gwi += g * ai;
                    }
                    let wr = &w[o * din..(o + 1) * din];
                    for (p, wi) in pd.iter_mut().zip(wr) {
                        *p += g * wi;
                    }
                }
                // input of layer l >= 1 is a rectified hidden output
                for (p, ai) in pd.iter_mut().zip(a) {
                    if *ai <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    /// Accumulates first-layer gradients for plain rows `inputs`.
    pub(crate) fn first_layer_backward(&self, inputs: &[f64], delta0: &[f64], grad: &mut [f64]) {
        let (d, h) = (self.layer_sizes[0], self.layer_sizes[1]);
        let (wo, bo) = self.offsets(0);
        for (z, dl) in inputs.chunks_exact(d).zip(delta0.chunks_exact(h)) {
            for o in 0..h {
                let g = dl[o];
                if g == 0.0 {
                    continue;
                }
                grad[bo + o] += g;
                for (gw, zi) in grad[wo + o * d..wo + (o + 1) * d].iter_mut().zip(z) {
                    *gw += g * zi;
                }
            }
        }
    }

    /// Accumulates first-layer gradients for a block contribution: `block_delta` holds,
    /// per block row, the sum of first-layer deltas over the rows that used it.
    pub(crate) fn first_layer_block_backward(
        &self,
        block: &[f64],
        cols: std::ops::Range<usize>,
        block_delta: &[f64],
        grad: &mut [f64],
    ) {
        let (d, h) = (self.layer_sizes[0], self.layer_sizes[1]);
        let width = cols.len();
        let (wo, _) = self.offsets(0);
        for (z, dl) in block.chunks_exact(width).zip(block_delta.chunks_exact(h)) {
            for o in 0..h {
                let g = dl[o];
                let start = wo + o * d + cols.start;
                for (gw, zi) in grad[start..start + width].iter_mut().zip(z) {
                    *gw += g * zi;
                }
            }
        }
    }

    pub(crate) fn first_bias_offset(&self) -> usize {
        self.offsets(0).1
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}
