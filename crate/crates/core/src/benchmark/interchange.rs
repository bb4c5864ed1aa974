//! Language-neutral files: `task.json` plus one CSV per sampled replicate, and the
//! `results.csv` record table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateFlag;
use crate::sample::Sample;
use crate::transforms::BlockMap;

use super::run::RunRecord;
use super::sweep::SweepRecord;
use super::task::{BaseSpec, TaskSpec};

pub const FORMAT_VERSION: u32 = 1;
pub const RESULTS_HEADER: [&str; 9] = [
    "task_id",
    "estimator_id",
    "seed",
    "n_points",
    "estimate",
    "mi_true",
    "rel_bias",
    "wallclock_s",
    "flags",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformChain {
    /// Always `"innermost-first"`: maps are applied in list order.
    pub order: String,
    pub x: Vec<BlockMap>,
    pub y: Vec<BlockMap>,
}

/// Contents of `task.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFile {
    pub format_version: u32,
    pub task_id: String,
    pub content_hash: String,
    pub family: String,
    pub stream_key: String,
    pub params: BaseSpec,
    pub dim_x: usize,
    pub dim_y: usize,
    /// Nats.
    pub mi_true: f64,
    pub transform_chain: TransformChain,
    pub reconstructed: bool,
    pub description: String,
    pub n_points: usize,
    pub seeds: usize,
    pub global_seed: u64,
}

impl TaskFile {
    pub fn new(task: &TaskSpec, n_points: usize, seeds: usize, global_seed: u64) -> Self {
        TaskFile {
            format_version: FORMAT_VERSION,
            task_id: task.task_id.clone(),
            content_hash: task.content_hash(),
            family: task.family.clone(),
            stream_key: task.stream_key.clone(),
            params: task.base.clone(),
            dim_x: task.dim_x,
            dim_y: task.dim_y,
            mi_true: task.mi_true,
            transform_chain: TransformChain {
                order: "innermost-first".into(),
                x: task.x_transform.clone(),
                y: task.y_transform.clone(),
            },
            reconstructed: task.reconstructed,
            description: task.description.clone(),
            n_points,
            seeds,
            global_seed,
        }
    }

    /// Rebuilds the task and checks it against the recorded MI and hash.
    pub fn to_task(&self) -> Result<TaskSpec> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Argument(format!(
                "unsupported task file version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let mut t = TaskSpec::new(
            self.task_id.clone(),
            self.family.clone(),
            self.stream_key.clone(),
            self.params.clone(),
            self.transform_chain.x.clone(),
            self.transform_chain.y.clone(),
        )?
        .reconstructed(self.reconstructed)
        .describe(self.description.clone());
        if t.mi_true.to_bits() != self.mi_true.to_bits() {
            return Err(Error::Argument(format!(
                "task file for {} records MI {} but its parameters give {}",
                self.task_id, self.mi_true, t.mi_true
            )));
        }
        if t.content_hash() != self.content_hash {
            return Err(Error::Argument(format!("content hash mismatch for {}", self.task_id)));
        }
        t.mi_true = self.mi_true;
        Ok(t)
    }
}

pub fn sample_header(dim_x: usize, dim_y: usize) -> Vec<String> {
    (1..=dim_x)
        .map(|i| format!("X{i}"))
        .chain((1..=dim_y).map(|i| format!("Y{i}")))
        .collect()
}

/// 17 significant digits, enough to restore every double exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_sample_csv(path: &Path, sample: &Sample) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(sample_header(sample.dim_x(), sample.dim_y()))
        .map_err(|e| csv_error(path, e))?;
    for i in 0..sample.n_points() {
        w.write_record(sample.row(i).iter().map(|&v| format_value(v)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a sample CSV. Block sizes come from the `X*`/`Y*` header; when `dims` is
/// given it must agree with the header.
pub fn read_sample_csv(path: &Path, dims: Option<(usize, usize)>) -> Result<Sample> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let dim_x = header.iter().take_while(|h| h.starts_with('X')).count();
    let dim_y = header.len() - dim_x;
    let expected = sample_header(dim_x, dim_y);
    if header.iter().ne(expected.iter().map(String::as_str)) || dim_x == 0 || dim_y == 0 {
        return Err(parse_error(path, 1, format!("header must read X1..Xm,Y1..Yn, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    if let Some((dx, dy)) = dims {
        if (dx, dy) != (dim_x, dim_y) {
            return Err(Error::Argument(format!(
                "requested {dx}x{dy} blocks but the file has {dim_x} X and {dim_y} Y columns"
            )));
        }
    }
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("non-finite value '{field}'")));
            }
            values.push(v);
        }
    }
    Sample::new(values, dim_x, dim_y).map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn task_dir(root: &Path, task_id: &str) -> PathBuf {
    root.join(task_id)
}

/// Writes `task.json` and `samples/seed-<i>.csv` for every task.
pub fn export_tasks(dir: &Path, tasks: &[TaskSpec], seeds: usize, n_points: usize, global_seed: u64) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for task in tasks {
        let tdir = task_dir(dir, &task.task_id);
        fs::create_dir_all(tdir.join("samples"))?;
        let json = serde_json::to_string_pretty(&TaskFile::new(task, n_points, seeds, global_seed))?;
        let json_path = tdir.join("task.json");
        fs::write(&json_path, json + "\n")?;
        written.push(json_path);
        for seed in 0..seeds {
            let sample = task.sample(global_seed, seed as u64, n_points)?;
            let path = tdir.join("samples").join(format!("seed-{seed}.csv"));
            write_sample_csv(&path, &sample)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn read_task_file(path: &Path) -> Result<TaskFile> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line(), e.to_string()))
}

/// Reads `<task>/samples/seed-<i>.csv` together with its `<task>/task.json`.
pub fn import_sample(path: &Path) -> Result<(Sample, TaskSpec)> {
    let task_json = path
        .parent()
        .and_then(Path::parent)
        .map(|d| d.join("task.json"))
        .ok_or_else(|| Error::Argument(format!("{} is not inside <task>/samples/", path.display())))?;
    let file = read_task_file(&task_json)?;
    let task = file.to_task()?;
    let sample = read_sample_csv(path, Some((task.dim_x, task.dim_y)))?;
    Ok((sample, task))
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn record_fields(r: &RunRecord) -> Vec<String> {
    vec![
        r.task_id.clone(),
        r.estimator_id.clone(),
        r.seed.to_string(),
        r.n_points.to_string(),
        r.estimate.to_string(),
        r.mi_true.to_string(),
        r.rel_bias.to_string(),
        r.wallclock_s.to_string(),
        r.flags_label(),
    ]
}

fn write_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Argument(format!("{other:?}")),
    }
}

pub fn write_results<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(RESULTS_HEADER).map_err(write_err)?;
    for r in records {
        w.write_record(record_fields(r)).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_records<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header = vec!["sweep_id", "coordinate", "value"];
    header.extend(RESULTS_HEADER);
    w.write_record(header).map_err(write_err)?;
    for s in records {
        let mut fields = vec![s.sweep_id.clone(), s.coordinate.clone(), s.value.to_string()];
        fields.extend(record_fields(&s.record));
        w.write_record(fields).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results table; extra leading columns (as in sweep output) are ignored.
pub fn read_results(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(path, 1, format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = RESULTS_HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| parse_error(path, line, format!("bad {} '{}'", RESULTS_HEADER[i], field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|_| parse_error(path, line, format!("bad {} '{}'", RESULTS_HEADER[i], field(i))))
        };
        let flags = field(8)
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| EstimateFlag::parse(s).ok_or_else(|| parse_error(path, line, format!("unknown flag '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(RunRecord {
            task_id: field(0).to_string(),
            estimator_id: field(1).to_string(),
            seed: int(2)?,
            n_points: int(3)? as usize,
            estimate: num(4)?,
            mi_true: num(5)?,
            rel_bias: num(6)?,
            wallclock_s: num(7)?,
            flags,
        });
    }
    Ok(out)
}
