//! Minibatch training of a critic and the held-out bound estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimateFlag, EstimateResult};
use crate::numerics::RngStream;
use crate::sample::Sample;

use super::bounds::{batch_bound, gradient, log_mean_exp, Batch, Bound};
use super::critic::{Architecture, CriticParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub bound: Bound,
    pub architecture: Architecture,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_steps: usize,
    pub eval_every: usize,
    /// Evaluations without a new best test bound before stopping.
    pub patience: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub ema_decay: f64,
    pub cosine_decay: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            bound: Bound::InfoNce,
            architecture: Architecture::M,
            batch_size: 256,
            learning_rate: 0.1,
            max_steps: 10_000,
            eval_every: 250,
            patience: 4,
            split_fraction: 0.5,
            seed: 0,
            ema_decay: 0.99,
            cosine_decay: false,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn new(bound: Bound, architecture: Architecture, seed: u64) -> Self {
        TrainConfig {
            bound,
            architecture,
            seed,
            ..Default::default()
        }
    }

    pub fn estimator_id(&self) -> String {
        format!("{}-{}", self.bound.name(), self.architecture.name())
    }

    /// Smallest sample the protocol accepts: each split must hold a full batch.
    pub fn min_points(&self) -> usize {
        let frac = self.split_fraction.min(1.0 - self.split_fraction);
        (self.batch_size as f64 / frac).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || self.eval_every == 0 || self.max_steps == 0 {
            return Err(Error::Argument("batch size >= 2, eval_every >= 1 and max_steps >= 1 required".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Argument(format!("split fraction must lie in (0, 1), got {}", self.split_fraction)));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::Argument(format!("ema decay must lie in (0, 1), got {}", self.ema_decay)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub train: f64,
    pub test: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EvalRecord>,
    pub flags: Vec<EstimateFlag>,
    /// Step at which training ended.
    pub stopped_at: usize,
    /// Constant separating the critic from the PMI, estimated on the test split.
    pub pmi_offset: f64,
}

impl TrainingHistory {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Heuristic flags: still rising at the end (final-quarter test slope above 5% of its
/// level per 1000 steps, with the best test value inside that quarter) and overfitting (train best exceeds test best by more than
/// `max(0.2 · best test, 0.1)` nats).
pub fn diagnose(history: &TrainingHistory) -> Vec<EstimateFlag> {
    let recs: Vec<&EvalRecord> = history
        .records
        .iter()
        .filter(|r| r.train.is_finite() && r.test.is_finite())
        .collect();
    let mut flags = Vec::new();
    if recs.len() < 2 {
        return flags;
    }
    let tail_len = recs.len().div_ceil(4).max(4).min(recs.len());
    let tail = &recs[recs.len() - tail_len..];
    let (ms, mv) = tail.iter().fold((0.0, 0.0), |(s, v), r| (s + r.step as f64, v + r.test));
    let (ms, mv) = (ms / tail_len as f64, mv / tail_len as f64);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in tail {
        sxy += (r.step as f64 - ms) * (r.test - mv);
        sxx += (r.step as f64 - ms).powi(2);
    }
    let slope_per_1000 = 1000.0 * sxy / sxx;
    // a run whose best test bound predates the final quarter has already turned over
    let best_in_tail = tail.iter().map(|r| r.test).fold(f64::NEG_INFINITY, f64::max)
        >= recs.iter().map(|r| r.test).fold(f64::NEG_INFINITY, f64::max);
    if best_in_tail && slope_per_1000 > 0.0 && slope_per_1000 > 0.05 * mv.abs() {
        flags.push(EstimateFlag::NonConverged);
    }
    let best_train = recs.iter().map(|r| r.train).fold(f64::NEG_INFINITY, f64::max);
    let best_test = recs.iter().map(|r| r.test).fold(f64::NEG_INFINITY, f64::max);
    if best_train - best_test > (0.2 * best_test).max(0.1) {
        flags.push(EstimateFlag::Overfitting);
    }
    flags
}

struct Split {
    x: Vec<f64>,
    y: Vec<f64>,
    rows: usize,
}

impl Split {
    fn new(s: &Sample, rows: &[usize]) -> Self {
        let mut x = Vec::with_capacity(rows.len() * s.dim_x());
        let mut y = Vec::with_capacity(rows.len() * s.dim_y());
        for &r in rows {
            x.extend_from_slice(s.x_row(r));
            y.extend_from_slice(s.y_row(r));
        }
        Split { x, y, rows: rows.len() }
    }

    fn batch(&self, rows: &[usize], m: usize, n: usize) -> Batch {
        let mut x = Vec::with_capacity(rows.len() * m);
        let mut y = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            x.extend_from_slice(&self.x[r * m..(r + 1) * m]);
            y.extend_from_slice(&self.y[r * n..(r + 1) * n]);
        }
        Batch::shifted(x, y, m, n)
    }
}

/// Bound on a whole split. DV, MINE and NWJ pair every row with the next one;
/// InfoNCE averages batch-sized blocks (a trailing block is kept if it has 2+ rows).
fn split_bound(critic: &CriticParams, bound: Bound, split: &Split, batch_size: usize, m: usize, n: usize) -> f64 {
    let all: Vec<usize> = (0..split.rows).collect();
    if bound != Bound::InfoNce {
        return batch_bound(critic, bound, &split.batch(&all, m, n)).unwrap_or(f64::NAN);
    }
    let mut total = 0.0;
    let mut used = 0;
    for chunk in all.chunks(batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let v = batch_bound(critic, bound, &split.batch(chunk, m, n)).unwrap_or(f64::NAN);
        total += v * chunk.len() as f64;
        used += chunk.len();
    }
    total / used as f64
}

/// Estimated offset between the critic and the PMI on a split.
fn pmi_offset(critic: &CriticParams, bound: Bound, split: &Split, batch_size: usize, m: usize, n: usize) -> f64 {
    match bound {
        Bound::Nwj => 1.0,
        Bound::Dv | Bound::Mine => {
            let all: Vec<usize> = (0..split.rows).collect();
            let b = split.batch(&all, m, n);
            let inputs: Vec<f64> = (0..b.len())
                .flat_map(|i| {
                    let j = b.pairing[i];
                    b.x[i * m..(i + 1) * m].iter().chain(&b.y[j * n..(j + 1) * n]).copied().collect::<Vec<_>>()
                })
                .collect();
            critic.forward(&inputs).map(|s| log_mean_exp(&s)).unwrap_or(f64::NAN)
        }
        Bound::InfoNce => {
            // mean over x of ln mean_j exp f(x, y_j) within one batch-sized block
            let rows: Vec<usize> = (0..split.rows.min(batch_size)).collect();
            let b = split.batch(&rows, m, n);
            let (acts, _) = super::bounds::pair_matrix(critic, &b);
            let s = acts.last().unwrap();
            let k = b.len();
            s.chunks_exact(k).map(log_mean_exp).sum::<f64>() / k as f64
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One ascent step on `params` along `grad`.
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, c: &TrainConfig) {
        self.t += 1;
        let b1t = 1.0 - c.adam_beta1.powi(self.t);
        let b2t = 1.0 - c.adam_beta2.powi(self.t);
        for k in 0..params.len() {
            let g = grad[k];
            self.m[k] = c.adam_beta1 * self.m[k] + (1.0 - c.adam_beta1) * g;
            self.v[k] = c.adam_beta2 * self.v[k] + (1.0 - c.adam_beta2) * g * g;
            params[k] += lr * (self.m[k] / b1t) / ((self.v[k] / b2t).sqrt() + c.adam_eps);
        }
    }
}

/// Trained critic together with its estimate and history.
#[derive(Debug, Clone)]
pub struct TrainedCritic {
    pub result: EstimateResult,
    pub history: TrainingHistory,
    /// Parameters at the evaluation with the best test bound.
    pub critic: CriticParams,
}

/// Trains a critic on one half of the sample and returns the best bound seen on the
/// other half.
pub fn train_estimate(s: &Sample, c: &TrainConfig) -> Result<(EstimateResult, TrainingHistory)> {
    train_critic(s, c).map(|t| (t.result, t.history))
}

pub fn train_critic(s: &Sample, c: &TrainConfig) -> Result<TrainedCritic> {
    c.validate()?;
    let n_points = s.n_points();
    if n_points < c.min_points() {
        return Err(Error::Argument(format!(
            "neural estimators need N >= {} for batch size {}, got {n_points}; use a classical estimator",
            c.min_points(),
            c.batch_size
        )));
    }
    let (m, n) = (s.dim_x(), s.dim_y());
    let mut rng = RngStream::derive(c.seed, "neural", 0, c.bound.name());
    let order = rng.permutation(n_points);
    let n_train = ((n_points as f64) * c.split_fraction).round() as usize;
    let train = Split::new(s, &order[..n_train]);
    let test = Split::new(s, &order[n_train..]);

    let mut critic = CriticParams::for_architecture(c.architecture, m + n)?;
    critic.init_uniform(&mut rng);
    let mut adam = Adam::new(critic.n_params());
    let mut log_ema: Option<f64> = None;
    let mut epoch: Vec<usize> = Vec::new();
    let mut cursor = 0;

    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, usize, CriticParams)> = None;
    let mut guarded = false;
    let mut step = 0;
    while step < c.max_steps {
        if cursor + c.batch_size > epoch.len() {
            epoch = rng.permutation(train.rows);
            cursor = 0;
        }
        let batch = train.batch(&epoch[cursor..cursor + c.batch_size], m, n);
        cursor += c.batch_size;

        let denom = if c.bound == Bound::Mine {
            let all: Vec<f64> = critic.forward(&product_inputs(&batch))?;
            let current = log_mean_exp(&all);
            let updated = match log_ema {
                None => current,
                Some(prev) => log_add_exp(c.ema_decay.ln() + prev, (1.0 - c.ema_decay).ln() + current),
            };
            log_ema = Some(updated);
            Some(updated)
        } else {
            None
        };
        let (_, grad) = gradient(&critic, c.bound, &batch, denom)?;
        if grad.iter().any(|g| !g.is_finite()) {
            guarded = true;
            break;
        }
        let lr = if c.cosine_decay {
            0.5 * c.learning_rate * (1.0 + (std::f64::consts::PI * step as f64 / c.max_steps as f64).cos())
        } else {
            c.learning_rate
        };
        adam.step(critic.params_mut(), &grad, lr, c);
        step += 1;
        if !critic.is_finite() {
            guarded = true;
            break;
        }

        if step % c.eval_every == 0 || step == c.max_steps {
            let tr = split_bound(&critic, c.bound, &train, c.batch_size, m, n);
            let te = split_bound(&critic, c.bound, &test, c.batch_size, m, n);
            history.records.push(EvalRecord { step, train: tr, test: te });
            if !te.is_finite() {
                guarded = true;
            } else if best.as_ref().is_none_or(|b| te > b.0) {
                best = Some((te, history.records.len() - 1, critic.clone()));
            }
            if let Some((_, idx, _)) = &best {
                if history.records.len() - 1 - idx >= c.patience {
                    break;
                }
            }
        }
    }
    history.stopped_at = step;

    let mut flags = diagnose(&history);
    if guarded {
        flags.push(EstimateFlag::NonFiniteGuarded);
    }
    let (value, best_critic) = match best {
        Some((v, _, p)) => (v, p),
        None => (f64::NAN, critic),
    };
    history.pmi_offset = pmi_offset(&best_critic, c.bound, &test, c.batch_size, m, n);
    let result = EstimateResult::new(c.estimator_id(), value, flags);
    history.flags = result.flags.clone();
    Ok(TrainedCritic {
        result,
        history,
        critic: best_critic,
    })
}

fn product_inputs(b: &Batch) -> Vec<f64> {
    let (m, n) = (b.dim_x, b.dim_y);
    (0..b.len())
        .flat_map(|i| {
            let j = b.pairing[i];
            b.x[i * m..(i + 1) * m].iter().chain(&b.y[j * n..(j + 1) * n]).copied().collect::<Vec<_>>()
        })
        .collect()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Critic values on grid points `(x, y)` minus the bound's offset: 1 for NWJ, the
/// supplied `offset` otherwise (use `TrainingHistory::pmi_offset`).
pub fn critic_pmi_grid(critic: &CriticParams, grid: &[f64], bound: Bound, offset: f64) -> Result<Vec<f64>> {
    let shift = if bound == Bound::Nwj { 1.0 } else { offset };
    Ok(critic.forward(grid)?.into_iter().map(|v| v - shift).collect())
}
