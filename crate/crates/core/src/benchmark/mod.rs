//! Task registry, run orchestration, sweeps, interchange files and reports.

mod estimator;
mod interchange;
mod preprocess;
mod registry;
mod report;
mod run;
mod sweep;
mod task;

pub use estimator::{classical_estimators, default_estimators, EstimatorSpec};
pub use preprocess::{preprocess, uniform_scores, PreprocessStrategy, Preprocessed};
pub use registry::{
    bimodal_x, bimodal_y, registry_default, task_spirals, verify_registry, verify_registry_monte_carlo, wiggly_x,
    wiggly_y,
};
pub use run::{
    aggregate, estimator_seed, min_sample_size, relative_bias, run_benchmark, sort_canonical, MinSampleEntry,
    RunConfig, RunRecord, Summary, ACCURACY_BAND, SAMPLE_SIZE_GRID,
};
pub use task::{find_task, BaseSpec, TaskSpec};
pub use sweep::{sweep, sweep_points, SweepPoint, SweepRecord, SweepSpec, SPARSITY_MI_TOLERANCE};
pub use interchange::{
    export_tasks, format_value, import_sample, read_results, read_sample_csv, read_task_file, sample_header,
    task_dir, write_results, write_sample_csv, write_sweep_records, TaskFile, TransformChain, FORMAT_VERSION,
    RESULTS_HEADER,
};
pub use report::{bias_color, heatmap_svg, write_min_sample_csv, write_report, write_summary_csv, ReportFiles};
