use std::collections::BTreeMap;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateFlag;
use crate::numerics::rng::DEFAULT_SEED;
use crate::numerics::RngStream;

use super::estimator::EstimatorSpec;
use super::preprocess::{preprocess, PreprocessStrategy};
use super::task::TaskSpec;

pub const SAMPLE_SIZE_GRID: [usize; 6] = [100, 500, 1000, 3000, 5000, 10_000];
pub const ACCURACY_BAND: (f64, f64) = (2.0 / 3.0, 1.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seeds: usize,
    pub n_points: Vec<usize>,
    pub preprocess: PreprocessStrategy,
    pub global_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// When false, wallclock is recorded as 0 so outputs are byte-reproducible.
    pub record_wallclock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: 10,
            n_points: vec![10_000],
            preprocess: PreprocessStrategy::Standardize,
            global_seed: DEFAULT_SEED,
            jobs: None,
            record_wallclock: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task_id: String,
    pub estimator_id: String,
    pub seed: u64,
    pub n_points: usize,
    pub estimate: f64,
    pub mi_true: f64,
    pub rel_bias: f64,
    pub wallclock_s: f64,
    pub flags: Vec<EstimateFlag>,
}

impl RunRecord {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn flags_label(&self) -> String {
        self.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";")
    }
}

pub fn relative_bias(estimate: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        f64::NAN
    } else {
        (estimate - truth) / truth
    }
}

/// Seed handed to a stochastic estimator for one run.
pub fn estimator_seed(global_seed: u64, task_id: &str, seed_index: u64, estimator_id: &str, n_points: usize) -> u64 {
    RngStream::derive(global_seed, task_id, seed_index, &format!("estimator/{estimator_id}/{n_points}")).next_u64()
}

/// Runs every (task, seed, N) cell and every estimator on its sample.
///
/// Each cell owns its random streams, so the record set does not depend on the
/// number of workers or the scheduling order. Failures become flagged records.
pub fn run_benchmark(tasks: &[TaskSpec], estimators: &[EstimatorSpec], config: &RunConfig) -> Result<Vec<RunRecord>> {
    if config.seeds == 0 || config.n_points.is_empty() {
        return Err(Error::Argument("need at least one seed and one sample size".into()));
    }
    let mut cells = Vec::new();
    for (ti, _) in tasks.iter().enumerate() {
        for &n in &config.n_points {
            for seed in 0..config.seeds as u64 {
                cells.push((ti, n, seed));
            }
        }
    }
    let work = || -> Vec<Vec<RunRecord>> {
        cells
            .par_iter()
            .map(|&(ti, n, seed)| run_cell(&tasks[ti], estimators, n, seed, config))
            .collect()
    };
    let nested = match config.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {j} workers: {e}")))?
            .install(work),
        None => work(),
    };
    let mut records: Vec<RunRecord> = nested.into_iter().flatten().collect();
    sort_canonical(&mut records, tasks, estimators);
    Ok(records)
}

/// Task order, then estimator order, then N, then seed.
pub fn sort_canonical(records: &mut [RunRecord], tasks: &[TaskSpec], estimators: &[EstimatorSpec]) {
    let task_pos: BTreeMap<&str, usize> = tasks.iter().enumerate().map(|(i, t)| (t.task_id.as_str(), i)).collect();
    let est_ids: Vec<String> = estimators.iter().map(EstimatorSpec::id).collect();
    let est_pos = |id: &str| est_ids.iter().position(|e| e == id).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        let ka = (task_pos.get(a.task_id.as_str()), est_pos(&a.estimator_id), a.n_points, a.seed);
        let kb = (task_pos.get(b.task_id.as_str()), est_pos(&b.estimator_id), b.n_points, b.seed);
        ka.cmp(&kb)
    });
}

fn run_cell(task: &TaskSpec, estimators: &[EstimatorSpec], n: usize, seed: u64, config: &RunConfig) -> Vec<RunRecord> {
    let failed = |e: &EstimatorSpec| RunRecord {
        task_id: task.task_id.clone(),
        estimator_id: e.id(),
        seed,
        n_points: n,
        estimate: f64::NAN,
        mi_true: task.mi_true,
        rel_bias: f64::NAN,
        wallclock_s: 0.0,
        flags: vec![EstimateFlag::Failed],
    };
    let prepared = task
        .sample(config.global_seed, seed, n)
        .and_then(|s| preprocess(&s, config.preprocess));
    let prepared = match prepared {
        Ok(p) => p,
        Err(_) => return estimators.iter().map(failed).collect(),
    };
    estimators
        .iter()
        .map(|e| {
            let id = e.id();
            let start = Instant::now();
            let mut r = e.run(
                &prepared.sample,
                estimator_seed(config.global_seed, &task.task_id, seed, &id, n),
            );
            let elapsed = start.elapsed().as_secs_f64();
            if !prepared.constant_columns.is_empty() {
                r.add_flag(EstimateFlag::DegenerateInput);
            }
            RunRecord {
                task_id: task.task_id.clone(),
                estimator_id: id,
                seed,
                n_points: n,
                estimate: r.value,
                mi_true: task.mi_true,
                rel_bias: relative_bias(r.value, task.mi_true),
                wallclock_s: if config.record_wallclock { elapsed } else { 0.0 },
                flags: r.flags,
            }
        })
        .collect()
}

/// Per-(task, estimator, N) statistics over unflagged runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub task_id: String,
    pub estimator_id: String,
    pub n_points: usize,
    pub mi_true: f64,
    /// NaN when every run was flagged.
    pub mean: f64,
    pub std: f64,
    pub rel_bias: f64,
    pub n_used: usize,
    pub n_flagged: usize,
}

/// Groups records in first-appearance order; flagged runs are counted but excluded.
pub fn aggregate(records: &[RunRecord]) -> Vec<Summary> {
    let mut order: Vec<(String, String, usize)> = Vec::new();
    let mut groups: BTreeMap<(String, String, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.task_id.clone(), r.estimator_id.clone(), r.n_points);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let used: Vec<f64> = rs.iter().filter(|r| !r.flagged()).map(|r| r.estimate).collect();
            let k = used.len();
            let mean = if k == 0 { f64::NAN } else { used.iter().sum::<f64>() / k as f64 };
            let std = if k < 2 {
                if k == 1 { 0.0 } else { f64::NAN }
            } else {
                (used.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            };
            let mi_true = rs[0].mi_true;
            Summary {
                task_id: key.0,
                estimator_id: key.1,
                n_points: key.2,
                mi_true,
                mean,
                std,
                rel_bias: relative_bias(mean, mi_true),
                n_used: k,
                n_flagged: rs.len() - k,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinSampleEntry {
    pub task_id: String,
    pub estimator_id: String,
    /// `None` means the estimates never settle inside the band.
    pub threshold: Option<usize>,
}

impl MinSampleEntry {
    pub fn label(&self) -> String {
        self.threshold.map_or_else(|| "never".to_string(), |n| n.to_string())
    }
}

/// Smallest grid size from which every larger grid size has its mean estimate
/// inside `[band.0, band.1] * truth`. Means are over unflagged runs; a cell with
/// none counts as outside the band.
pub fn min_sample_size(records: &[RunRecord], grid: &[usize], band: (f64, f64)) -> Result<Vec<MinSampleEntry>> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let summaries = aggregate(records);
    let mut pairs: Vec<(String, String)> = Vec::new();
    for s in &summaries {
        let p = (s.task_id.clone(), s.estimator_id.clone());
        if !pairs.contains(&p) {
            pairs.push(p);
        }
    }
    pairs
        .into_iter()
        .map(|(task_id, estimator_id)| {
            let mut in_band = Vec::with_capacity(grid.len());
            for &n in &grid {
                let s = summaries
                    .iter()
                    .find(|s| s.task_id == task_id && s.estimator_id == estimator_id && s.n_points == n)
                    .ok_or_else(|| {
                        Error::Argument(format!("no records for {task_id} / {estimator_id} at N = {n}"))
                    })?;
                let (lo, hi) = (band.0 * s.mi_true, band.1 * s.mi_true);
                in_band.push(s.mean.is_finite() && s.mean >= lo.min(hi) && s.mean <= lo.max(hi));
            }
            let mut threshold = None;
            for i in (0..grid.len()).rev() {
                if !in_band[i] {
                    break;
                }
                threshold = Some(grid[i]);
            }
            Ok(MinSampleEntry {
                task_id,
                estimator_id,
                threshold,
            })
        })
        .collect()
}
