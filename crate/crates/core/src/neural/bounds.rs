//! Variational lower bounds on MI and their exact gradients through the critic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::critic::CriticParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Dv,
    Mine,
    Nwj,
    InfoNce,
}

impl Bound {
    pub const ALL: [Bound; 4] = [Bound::Dv, Bound::Mine, Bound::Nwj, Bound::InfoNce];

    pub fn name(self) -> &'static str {
        match self {
            Bound::Dv => "dv",
            Bound::Mine => "mine",
            Bound::Nwj => "nwj",
            Bound::InfoNce => "infonce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s.to_ascii_lowercase())
    }
}

/// `ln mean exp(v)` with the maximum factored out.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + (v.iter().map(|x| (x - max).exp()).sum::<f64>() / v.len() as f64).ln()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Bound value from critic scores. For DV, MINE and NWJ, `product` holds scores on
/// product-of-marginals pairs. For InfoNCE, `product` is the full row-major `B x B`
/// matrix `f(x_i, y_j)` and `joint` its diagonal.
pub fn bound_value(bound: Bound, joint: &[f64], product: &[f64]) -> Result<f64> {
    if joint.is_empty() || product.is_empty() {
        return Err(Error::Argument("score vectors must be nonempty".into()));
    }
    Ok(match bound {
        Bound::Dv | Bound::Mine => mean(joint) - log_mean_exp(product),
        Bound::Nwj => mean(joint) - product.iter().map(|p| (p - 1.0).exp()).sum::<f64>() / product.len() as f64,
        Bound::InfoNce => {
            let b = joint.len();
            if product.len() != b * b {
                return Err(Error::Argument(format!(
                    "InfoNCE needs a {b} x {b} score matrix, got {} entries",
                    product.len()
                )));
            }
            let mut total = 0.0;
            for (i, row) in product.chunks_exact(b).enumerate() {
                total += row[i] - log_mean_exp(row);
            }
            total / b as f64
        }
    })
}

/// A minibatch: `B` rows of X and Y and the Y row paired with each X row for the
/// product-of-marginals scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dim_x: usize,
    pub dim_y: usize,
    pub pairing: Vec<usize>,
}

impl Batch {
    /// Pairs row `i` with row `i + 1` (cyclically): no row meets its own partner.
    pub fn shifted(x: Vec<f64>, y: Vec<f64>, dim_x: usize, dim_y: usize) -> Self {
        let b = x.len() / dim_x;
        Batch {
            x,
            y,
            dim_x,
            dim_y,
            pairing: (0..b).map(|i| (i + 1) % b).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dim_x
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Joint rows followed by product rows, each `(x, y)` concatenated.
    fn stacked_inputs(&self) -> Vec<f64> {
        let (m, n, b) = (self.dim_x, self.dim_y, self.len());
        let mut out = Vec::with_capacity(2 * b * (m + n));
        for i in 0..b {
            out.extend_from_slice(&self.x[i * m..(i + 1) * m]);
            out.extend_from_slice(&self.y[i * n..(i + 1) * n]);
        }
        for i in 0..b {
            let j = self.pairing[i];
            out.extend_from_slice(&self.x[i * m..(i + 1) * m]);
            out.extend_from_slice(&self.y[j * n..(j + 1) * n]);
        }
        out
    }

    fn check(&self, critic: &CriticParams) -> Result<()> {
        if self.dim_x + self.dim_y != critic.input_dim() {
            return Err(Error::Argument(format!(
                "batch width {} does not match critic input {}",
                self.dim_x + self.dim_y,
                critic.input_dim()
            )));
        }
        let b = self.len();
        if b == 0 || self.y.len() != b * self.dim_y || self.pairing.len() != b || self.pairing.iter().any(|&j| j >= b) {
            return Err(Error::Argument("malformed batch".into()));
        }
        Ok(())
    }
}

/// Scores `f(x_i, y_j)` for all pairs of a batch, row-major, via the split first layer.
pub(crate) fn pair_matrix(critic: &CriticParams, batch: &Batch) -> (super::critic::Activations, usize) {
    let (m, n, b) = (batch.dim_x, batch.dim_y, batch.len());
    let ax = critic.first_layer_block(&batch.x, 0..m);
    let ay = critic.first_layer_block(&batch.y, m..m + n);
    let bias = critic.first_bias();
    let h = bias.len();
    let mut pre0 = Vec::with_capacity(b * b * h);
    for i in 0..b {
        let xi = &ax[i * h..(i + 1) * h];
        for j in 0..b {
            let yj = &ay[j * h..(j + 1) * h];
            for o in 0..h {
                pre0.push(xi[o] + yj[o] + bias[o]);
            }
        }
    }
    (critic.tail(pre0), h)
}

/// Evaluates the bound on a batch.
pub fn batch_bound(critic: &CriticParams, bound: Bound, batch: &Batch) -> Result<f64> {
    batch.check(critic)?;
    let b = batch.len();
    if bound == Bound::InfoNce {
        let (acts, _) = pair_matrix(critic, batch);
        let s = acts.last().unwrap();
        let diag: Vec<f64> = (0..b).map(|i| s[i * b + i]).collect();
        return bound_value(bound, &diag, s);
    }
    let scores = critic.forward(&batch.stacked_inputs())?;
    bound_value(bound, &scores[..b], &scores[b..])
}

/// Bound value and its exact gradient with respect to the flat critic parameters.
///
/// For MINE, `log_denominator` replaces `ln mean exp(f)` on the product pairs in the
/// gradient (the moving-average correction); with `None` it is the batch value, and the
/// gradient equals the DV gradient.
pub fn gradient(
    critic: &CriticParams,
    bound: Bound,
    batch: &Batch,
    log_denominator: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    batch.check(critic)?;
    let b = batch.len();
    let bf = b as f64;
    let mut grad = vec![0.0; critic.n_params()];
    if bound == Bound::InfoNce {
        let (m, n) = (batch.dim_x, batch.dim_y);
        let (acts, h) = pair_matrix(critic, batch);
        let s = acts.last().unwrap();
        let mut g_out = vec![0.0; b * b];
        let mut value = 0.0;
        for i in 0..b {
            let row = &s[i * b..(i + 1) * b];
            let lme = log_mean_exp(row);
            value += row[i] - lme;
            let lse = lme + bf.ln();
            for j in 0..b {
                g_out[i * b + j] = -(row[j] - lse).exp() / bf;
            }
            g_out[i * b + i] += 1.0 / bf;
        }
        let delta0 = critic.tail_backward(&acts, g_out, &mut grad);
        let mut dx = vec![0.0; b * h];
        let mut dy = vec![0.0; b * h];
        let bias_off = critic.first_bias_offset();
        for i in 0..b {
            for j in 0..b {
                let d = &delta0[(i * b + j) * h..(i * b + j + 1) * h];
                for o in 0..h {
                    dx[i * h + o] += d[o];
                    dy[j * h + o] += d[o];
                }
            }
        }
        for i in 0..b {
            for o in 0..h {
                grad[bias_off + o] += dx[i * h + o];
            }
        }
        critic.first_layer_block_backward(&batch.x, 0..m, &dx, &mut grad);
        critic.first_layer_block_backward(&batch.y, m..m + n, &dy, &mut grad);
        return Ok((value / bf, grad));
    }

    let inputs = batch.stacked_inputs();
    let pre0 = critic.first_layer(&inputs);
    let acts = critic.tail(pre0);
    let scores = acts.last().unwrap();
    let (joint, product) = scores.split_at(b);
    let value = bound_value(bound, joint, product)?;
    let mut g_out = vec![1.0 / bf; 2 * b];
    match bound {
        Bound::Dv | Bound::Mine => {
            let denom = match (bound, log_denominator) {
                (Bound::Mine, Some(l)) => l,
                _ => log_mean_exp(product),
            };
            for (g, p) in g_out[b..].iter_mut().zip(product) {
                *g = -(p - denom).exp() / bf;
            }
        }
        Bound::Nwj => {
            for (g, p) in g_out[b..].iter_mut().zip(product) {
                *g = -(p - 1.0).exp() / bf;
            }
        }
        Bound::InfoNce => unreachable!(),
    }
    let delta0 = critic.tail_backward(&acts, g_out, &mut grad);
    critic.first_layer_backward(&inputs, &delta0, &mut grad);
    Ok((value, grad))
}
