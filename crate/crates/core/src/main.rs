use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mibench::benchmark::{
    aggregate, export_tasks, find_task, preprocess, read_results, read_sample_csv, registry_default, run_benchmark,
    sweep, write_report, write_results, write_sweep_records, EstimatorSpec, PreprocessStrategy, RunConfig,
    SweepSpec, TaskSpec,
};
use mibench::estimators::DEFAULT_K;
use mibench::numerics::rng::DEFAULT_SEED;
use mibench::Error;

const OUT_ENV: &str = "MIBENCH_OUT";

#[derive(Parser)]
#[command(name = "mibench", version, about = "Mutual information benchmark tasks and estimators")]
struct Cli {
    /// Display unit for printed MI values; files always hold nats.
    #[arg(long, value_enum, global = true, default_value = "nats")]
    unit: Unit,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Nats,
    Bits,
}

impl Unit {
    fn show(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List registry tasks.
    Tasks {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Write task.json and sample CSVs for tasks.
    Export {
        /// Task id; repeat for several, or `all`.
        #[arg(long = "task", required = true)]
        tasks: Vec<String>,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long = "n", default_value_t = 10_000)]
        n_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Estimate MI from a sample CSV.
    Estimate(EstimateArgs),
    /// Run estimators over registry tasks and write results.csv.
    Benchmark(BenchmarkArgs),
    /// Summarize a results.csv into tables and a heatmap.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a challenge sweep.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    estimator: String,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dim_x: Option<usize>,
    #[arg(long)]
    dim_y: Option<usize>,
    /// Neighbour count for KSG.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Bandwidth neighbour for KDE.
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, default_value = "standardize")]
    preprocess: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// JSON file with the same keys as the flags; it wins over conflicting flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "task")]
    tasks: Vec<String>,
    #[arg(long)]
    family: Option<String>,
    /// Estimator id; repeatable. `classical` and `all` select groups.
    #[arg(long = "estimator")]
    estimators: Vec<String>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Sample size; repeatable.
    #[arg(long = "n")]
    n_points: Vec<usize>,
    #[arg(long)]
    preprocess: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wallclock as 0 so the output is byte-reproducible.
    #[arg(long)]
    no_wallclock: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    sweep_id: String,
    /// JSON sweep specification overriding the default grid.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "estimator")]
    estimators: Vec<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long = "n", default_value_t = 10_000)]
    n_points: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_wallclock: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolved benchmark configuration, echoed into `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct BenchmarkConfig {
    tasks: Vec<String>,
    family: Option<String>,
    estimators: Vec<String>,
    seeds: Option<usize>,
    n_points: Vec<usize>,
    preprocess: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    no_wallclock: bool,
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let unit = cli.unit;
    match cli.command {
        Command::Tasks { family, format } => cmd_tasks(family.as_deref(), format, unit),
        Command::Export {
            tasks,
            seeds,
            n_points,
            out,
            seed,
        } => cmd_export(&tasks, seeds, n_points, out, seed),
        Command::Estimate(a) => cmd_estimate(a, unit),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Report { results, out } => cmd_report(&results, out),
        Command::Sweep(a) => cmd_sweep(a, unit),
    }
}

fn out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mibench-out"))
}

fn select_tasks(ids: &[String], family: Option<&str>) -> Result<Vec<TaskSpec>, Failure> {
    let registry = registry_default()?;
    let mut chosen: Vec<TaskSpec> = if ids.is_empty() || ids.iter().any(|i| i == "all") {
        registry.clone()
    } else {
        ids.iter()
            .map(|id| find_task(&registry, id).cloned())
            .collect::<Result<_, _>>()?
    };
    if let Some(f) = family {
        chosen.retain(|t| t.family == f || t.base.law() == f);
    }
    if chosen.is_empty() {
        return Err(usage("no tasks selected"));
    }
    Ok(chosen)
}

fn select_estimators(ids: &[String]) -> Result<Vec<EstimatorSpec>, Failure> {
    if ids.is_empty() {
        return Ok(mibench::benchmark::classical_estimators());
    }
    let mut out = Vec::new();
    for id in ids {
        match id.as_str() {
            "all" => out.extend(mibench::benchmark::default_estimators()),
            "classical" => out.extend(mibench::benchmark::classical_estimators()),
            other => out.push(EstimatorSpec::parse(other)?),
        }
    }
    Ok(out)
}

fn cmd_tasks(family: Option<&str>, format: Format, unit: Unit) -> Result<(), Failure> {
    let tasks = select_tasks(&[], None)?;
    let tasks: Vec<_> = tasks
        .into_iter()
        .filter(|t| family.is_none_or(|f| t.family == f || t.base.law() == f))
        .collect();
    let mut stdout = io::stdout().lock();
    match format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&tasks).map_err(Error::from)?)?,
        Format::Table => {
            writeln!(stdout, "{:<40} {:>5} {:>5} {:>12}", "task_id", "dim_x", "dim_y", format!("mi_{}", unit.name()))?;
            for t in &tasks {
                writeln!(stdout, "{:<40} {:>5} {:>5} {:>12.6}", t.task_id, t.dim_x, t.dim_y, unit.show(t.mi_true))?;
            }
        }
    }
    Ok(())
}

fn cmd_export(ids: &[String], seeds: usize, n_points: usize, out: Option<PathBuf>, seed: u64) -> Result<(), Failure> {
    let tasks = select_tasks(ids, None)?;
    let dir = out_dir(out);
    let echo = serde_json::json!({
        "command": "export",
        "tasks": tasks.iter().map(|t| &t.task_id).collect::<Vec<_>>(),
        "seeds": seeds,
        "n_points": n_points,
        "seed": seed,
        "out": dir,
    });
    eprintln!("{echo}");
    let files = export_tasks(&dir, &tasks, seeds, n_points, seed)?;
    eprintln!("wrote {} files under {}", files.len(), dir.display());
    Ok(())
}

fn cmd_estimate(a: EstimateArgs, unit: Unit) -> Result<(), Failure> {
    let dims = match (a.dim_x, a.dim_y) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => return Err(usage("give both --dim-x and --dim-y, or neither")),
    };
    let mut spec = EstimatorSpec::parse(&a.estimator)?;
    match &mut spec {
        EstimatorSpec::Ksg1 { k } | EstimatorSpec::Ksg2 { k } => *k = a.k.unwrap_or(*k),
        EstimatorSpec::Histogram { bins } => *bins = a.bins.unwrap_or(*bins),
        EstimatorSpec::Kde { neighbors } => *neighbors = a.neighbors.unwrap_or(*neighbors),
        _ => {}
    }
    let strategy = PreprocessStrategy::parse(&a.preprocess)?;
    let sample = read_sample_csv(&a.input, dims)?;
    let prepared = preprocess(&sample, strategy)?;
    let mut result = spec.run(&prepared.sample, a.seed);
    if !prepared.constant_columns.is_empty() {
        result.add_flag(mibench::estimators::EstimateFlag::DegenerateInput);
    }
    let record = serde_json::json!({
        "estimator_id": result.estimator_id,
        "value_nats": result.value,
        "flags": result.flags,
        "config": {
            "estimator": spec,
            "input": a.input,
            "dim_x": sample.dim_x(),
            "dim_y": sample.dim_y(),
            "n_points": sample.n_points(),
            "preprocess": strategy,
            "seed": a.seed,
        },
    });
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{} {}", unit.show(result.value), unit.name())?;
    writeln!(stdout, "{record}")?;
    Ok(())
}

fn resolve_benchmark(a: &BenchmarkArgs) -> Result<BenchmarkConfig, Failure> {
    let flags = BenchmarkConfig {
        tasks: a.tasks.clone(),
        family: a.family.clone(),
        estimators: a.estimators.clone(),
        seeds: a.seeds,
        n_points: a.n_points.clone(),
        preprocess: a.preprocess.clone(),
        seed: a.seed,
        jobs: a.jobs,
        no_wallclock: a.no_wallclock,
        out: a.out.clone(),
    };
    let Some(path) = &a.config else {
        return Ok(flags);
    };
    let text = fs::read_to_string(path)?;
    let file: BenchmarkConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    let mut merged = file.clone();
    macro_rules! merge {
        ($field:ident, $empty:expr) => {
            if flags.$field != $empty {
                if file.$field != $empty && file.$field != flags.$field {
                    eprintln!(
                        "warning: --{} conflicts with the config file; using the config file value",
                        stringify!($field).replace('_', "-")
                    );
                } else {
                    merged.$field = flags.$field.clone();
                }
            }
        };
    }
    merge!(tasks, Vec::<String>::new());
    merge!(family, None);
    merge!(estimators, Vec::<String>::new());
    merge!(seeds, None);
    merge!(n_points, Vec::<usize>::new());
    merge!(preprocess, None);
    merge!(seed, None);
    merge!(jobs, None);
    merge!(out, None);
    merged.no_wallclock = file.no_wallclock || flags.no_wallclock;
    Ok(merged)
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<(), Failure> {
    let mut cfg = resolve_benchmark(&a)?;
    let tasks = select_tasks(&cfg.tasks, cfg.family.as_deref())?;
    let estimators = select_estimators(&cfg.estimators)?;
    let defaults = RunConfig::default();
    let run = RunConfig {
        seeds: cfg.seeds.unwrap_or(defaults.seeds),
        n_points: if cfg.n_points.is_empty() { defaults.n_points.clone() } else { cfg.n_points.clone() },
        preprocess: match &cfg.preprocess {
            Some(p) => PreprocessStrategy::parse(p)?,
            None => defaults.preprocess,
        },
        global_seed: cfg.seed.unwrap_or(defaults.global_seed),
        jobs: cfg.jobs,
        record_wallclock: !cfg.no_wallclock,
    };
    let dir = out_dir(cfg.out.clone());
    // Echo every resolved value so the file alone reproduces the run.
    cfg.tasks = tasks.iter().map(|t| t.task_id.clone()).collect();
    cfg.family = None;
    cfg.estimators = estimators.iter().map(EstimatorSpec::id).collect();
    cfg.seeds = Some(run.seeds);
    cfg.n_points = run.n_points.clone();
    cfg.preprocess = Some(run.preprocess.name().into());
    cfg.seed = Some(run.global_seed);
    cfg.out = Some(dir.clone());
    let echo = serde_json::to_string_pretty(&cfg).map_err(Error::from)?;
    eprintln!("{echo}");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.json"), echo + "\n")?;
    let records = run_benchmark(&tasks, &estimators, &run)?;
    let path = dir.join("results.csv");
    write_results(fs::File::create(&path)?, &records)?;
    let flagged = records.iter().filter(|r| r.flagged()).count();
    eprintln!("wrote {} records ({flagged} flagged) to {}", records.len(), path.display());
    Ok(())
}

fn cmd_report(results: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let records = read_results(results)?;
    if records.is_empty() {
        return Err(usage(format!("{} holds no records", results.display())));
    }
    let dir = out_dir(out);
    eprintln!("{}", serde_json::json!({"command": "report", "results": results, "out": dir}));
    let files = write_report(&records, &dir)?;
    eprintln!("wrote {} and {}", files.summary_csv.display(), files.heatmap_svg.display());
    if let Some(p) = files.min_sample_csv {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, unit: Unit) -> Result<(), Failure> {
    let spec = match &a.spec {
        Some(p) => {
            let s: SweepSpec = serde_json::from_str(&fs::read_to_string(p)?)
                .map_err(|e| usage(format!("sweep spec {}: {e}", p.display())))?;
            if s.id() != a.sweep_id {
                return Err(usage(format!("spec file describes '{}', not '{}'", s.id(), a.sweep_id)));
            }
            s
        }
        None => SweepSpec::default_for(&a.sweep_id)?,
    };
    let estimators = if a.estimators.is_empty() {
        vec![EstimatorSpec::Cca, EstimatorSpec::Ksg1 { k: DEFAULT_K }]
    } else {
        select_estimators(&a.estimators)?
    };
    let config = RunConfig {
        seeds: a.seeds.unwrap_or(spec.default_seeds()),
        n_points: vec![a.n_points],
        global_seed: a.seed,
        jobs: a.jobs,
        record_wallclock: !a.no_wallclock,
        ..RunConfig::default()
    };
    let dir = out_dir(a.out);
    let echo = serde_json::json!({
        "command": "sweep",
        "spec": spec,
        "estimators": estimators.iter().map(EstimatorSpec::id).collect::<Vec<_>>(),
        "seeds": config.seeds,
        "n_points": a.n_points,
        "seed": a.seed,
        "out": dir,
    });
    eprintln!("{echo}");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("sweep-config.json"), format!("{echo}\n"))?;
    let records = sweep(&spec, &estimators, &config)?;
    let path = dir.join(format!("sweep-{}.csv", spec.id()));
    write_sweep_records(fs::File::create(&path)?, &records)?;

    let plain: Vec<_> = records.iter().map(|r| r.record.clone()).collect();
    let summaries = aggregate(&plain);
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{:<28} {:<14} {:>10} {:>10} {:>10}", "coordinate", "estimator", "true", "mean", "std")?;
    let mut seen = Vec::new();
    for r in &records {
        let key = (r.coordinate.clone(), r.record.estimator_id.clone());
        if seen.contains(&key) {
            continue;
        }
        let s = summaries
            .iter()
            .find(|s| s.task_id == r.record.task_id && s.estimator_id == r.record.estimator_id)
            .expect("summary exists for every record");
        writeln!(
            stdout,
            "{:<28} {:<14} {:>10.4} {:>10.4} {:>10.4}",
            r.coordinate,
            s.estimator_id,
            unit.show(s.mi_true),
            unit.show(s.mean),
            unit.show(s.std)
        )?;
        seen.push(key);
    }
    eprintln!("wrote {} records to {}", records.len(), path.display());
    Ok(())
}
