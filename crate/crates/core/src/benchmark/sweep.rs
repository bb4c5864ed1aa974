//! One-parameter task families for the challenge studies.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    dense_alpha_for_mi, gaussian_mi, lambda_for_mi, paired_rho_for_mi, CovarianceSpec,
    LatentCovarianceParams,
};
use crate::error::{Error, Result};
use crate::estimators::EstimateFlag;
use crate::transforms::{AxisMap, BlockMap, SpiralMap};

use super::estimator::EstimatorSpec;
use super::registry::task_spirals;
use super::run::{run_benchmark, RunConfig, RunRecord};
use super::task::{BaseSpec, TaskSpec};

/// Tolerance on the MI carried by every sparsity grid point.
pub const SPARSITY_MI_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sweep_id", rename_all = "kebab-case")]
pub enum SweepSpec {
    /// Stage one lowers the shared latent weight `α` from its dense maximum to 0 at
    /// `K = dim`; stage two keeps `α = 0` and lowers `K`. `λ` is solved at every
    /// point so the MI stays at `target`.
    Sparsity {
        dim: usize,
        target: f64,
        alpha_fractions: Vec<f64>,
        ks: Vec<usize>,
    },
    /// `x -> |x|^k sgn x` on every coordinate of a 2-pair Gaussian.
    TailsPower { dim: usize, rho: f64, powers: Vec<f64> },
    /// Student laws with a 2-pair dispersion over a range of degrees of freedom.
    TailsStudentDof { dim: usize, rho: f64, dofs: Vec<u32> },
    /// `X` in the plane, `Y` scalar, `Cor(X1, Y) = rho`; a planar spiral on `X`.
    SpiralSpeed { rho: f64, speeds: Vec<f64> },
    /// 3x3 2-pair Gaussians tuned to each target MI, plain, half-cube and spiral.
    HighMi { targets: Vec<f64> },
}

impl SweepSpec {
    pub fn id(&self) -> &'static str {
        match self {
            SweepSpec::Sparsity { .. } => "sparsity",
            SweepSpec::TailsPower { .. } => "tails-power",
            SweepSpec::TailsStudentDof { .. } => "tails-student-dof",
            SweepSpec::SpiralSpeed { .. } => "spiral-speed",
            SweepSpec::HighMi { .. } => "high-mi",
        }
    }

    pub fn default_for(id: &str) -> Result<Self> {
        Ok(match id {
            "sparsity" => SweepSpec::Sparsity {
                dim: 10,
                target: 1.0,
                alpha_fractions: vec![1.0, 0.75, 0.5, 0.25, 0.0],
                ks: vec![8, 6, 4, 2],
            },
            "tails-power" => SweepSpec::TailsPower {
                dim: 3,
                rho: 0.8,
                powers: vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            },
            "tails-student-dof" => SweepSpec::TailsStudentDof {
                dim: 3,
                rho: 0.8,
                dofs: vec![1, 2, 3, 5, 8, 12, 20, 30],
            },
            "spiral-speed" => SweepSpec::SpiralSpeed {
                rho: 0.8,
                speeds: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            },
            "high-mi" => SweepSpec::HighMi {
                targets: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
            },
            other => return Err(Error::Argument(format!("unknown sweep '{other}'"))),
        })
    }

    pub const IDS: [&'static str; 5] = ["sparsity", "tails-power", "tails-student-dof", "spiral-speed", "high-mi"];

    /// Replicates used when none are requested explicitly.
    pub fn default_seeds(&self) -> usize {
        match self {
            SweepSpec::HighMi { .. } => 5,
            _ => 10,
        }
    }
}

/// One grid point; `task` is `None` when the point could not be built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub coordinate: String,
    pub value: f64,
    pub task: Option<TaskSpec>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep_id: String,
    pub coordinate: String,
    pub value: f64,
    pub record: RunRecord,
}

fn point(coordinate: String, value: f64, task: Result<TaskSpec>) -> SweepPoint {
    match task {
        Ok(t) => SweepPoint {
            coordinate,
            value,
            task: Some(t),
            error: None,
        },
        Err(e) => SweepPoint {
            coordinate,
            value,
            task: None,
            error: Some(e.to_string()),
        },
    }
}

fn paired(dim: usize, rho: f64) -> BaseSpec {
    BaseSpec::Gaussian {
        dim_x: dim,
        dim_y: dim,
        covariance: CovarianceSpec::Paired { pairs: 2, rho },
    }
}

fn sparsity_task(stream: &str, id: String, dim: usize, k: usize, alpha: f64, target: f64) -> Result<TaskSpec> {
    let lambda = lambda_for_mi(dim, dim, k, alpha, target)?;
    let params = LatentCovarianceParams::interpolating(dim, dim, k, alpha, lambda, 1.0);
    let covariance = CovarianceSpec::Latent(params);
    let mi = gaussian_mi(&covariance.build(dim, dim)?, dim, dim)?;
    if (mi - target).abs() > SPARSITY_MI_TOLERANCE {
        return Err(Error::Numerical {
            iterations: 0,
            message: format!("grid point carries {mi} nats instead of {target}"),
        });
    }
    TaskSpec::new(
        id,
        "sweep-sparsity",
        stream,
        BaseSpec::Gaussian {
            dim_x: dim,
            dim_y: dim,
            covariance,
        },
        vec![],
        vec![],
    )
}

/// Expands a sweep into its grid of tasks.
pub fn sweep_points(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    let stream = format!("sweep-{}", spec.id());
    let mut out = Vec::new();
    match spec {
        SweepSpec::Sparsity {
            dim,
            target,
            alpha_fractions,
            ks,
        } => {
            let alpha_max = dense_alpha_for_mi(*dim, *dim, *target)?;
            for &f in alpha_fractions {
                let alpha = alpha_max * f;
                let coord = format!("alpha={alpha:.6};K={dim}");
                let id = format!("sparsity-alpha{f}-K{dim}");
                out.push(point(coord, alpha, sparsity_task(&stream, id, *dim, *dim, alpha, *target)));
            }
            for &k in ks {
                let coord = format!("alpha=0;K={k}");
                let id = format!("sparsity-alpha0-K{k}");
                let task = if k == 0 || k > *dim {
                    Err(Error::Argument(format!("K must lie in 1..={dim}, got {k}")))
                } else {
                    sparsity_task(&stream, id, *dim, k, 0.0, *target)
                };
                out.push(point(coord, k as f64, task));
            }
        }
        SweepSpec::TailsPower { dim, rho, powers } => {
            for &k in powers {
                let task = AxisMap::power(k).and_then(|p| {
                    let m = BlockMap::Axis(p);
                    TaskSpec::new(
                        format!("tails-power-k{k}"),
                        "sweep-tails",
                        &stream,
                        paired(*dim, *rho),
                        vec![m.clone()],
                        vec![m],
                    )
                });
                out.push(point(format!("k={k}"), k, task));
            }
        }
        SweepSpec::TailsStudentDof { dim, rho, dofs } => {
            for &nu in dofs {
                let task = TaskSpec::new(
                    format!("tails-student-nu{nu}"),
                    "sweep-tails",
                    &stream,
                    BaseSpec::Student {
                        dim_x: *dim,
                        dim_y: *dim,
                        dof: nu,
                        dispersion: CovarianceSpec::Paired { pairs: 2, rho: *rho },
                    },
                    vec![],
                    vec![],
                );
                out.push(point(format!("nu={nu}"), nu as f64, task));
            }
        }
        SweepSpec::SpiralSpeed { rho, speeds } => {
            for &v in speeds {
                let task = TaskSpec::new(
                    format!("spiral-speed-v{v}"),
                    "sweep-spiral",
                    &stream,
                    BaseSpec::Gaussian {
                        dim_x: 2,
                        dim_y: 1,
                        covariance: CovarianceSpec::Paired { pairs: 1, rho: *rho },
                    },
                    vec![BlockMap::Spiral(SpiralMap::planar(v))],
                    vec![],
                );
                out.push(point(format!("v={v}"), v, task));
            }
        }
        SweepSpec::HighMi { targets } => {
            let (sx, sy) = task_spirals(3, 3)?;
            let cube = BlockMap::Axis(AxisMap::half_cube());
            for (family, x, y) in [
                ("normal", vec![], vec![]),
                ("half-cube", vec![cube.clone()], vec![cube]),
                ("spiral", vec![BlockMap::Spiral(sx)], vec![BlockMap::Spiral(sy)]),
            ] {
                for &target in targets {
                    let task = paired_rho_for_mi(3, 3, 2, target).and_then(|rho| {
                        TaskSpec::new(
                            format!("high-mi-{family}-{target}"),
                            "sweep-high-mi",
                            &stream,
                            paired(3, rho),
                            x.clone(),
                            y.clone(),
                        )
                    });
                    out.push(point(format!("family={family};mi={target}"), target, task));
                }
            }
        }
    }
    Ok(out)
}

/// Runs the estimators over every buildable grid point. Unbuildable points yield
/// one failed record per estimator.
pub fn sweep(spec: &SweepSpec, estimators: &[EstimatorSpec], config: &RunConfig) -> Result<Vec<SweepRecord>> {
    let points = sweep_points(spec)?;
    let mut out = Vec::new();
    for p in &points {
        match &p.task {
            Some(task) => {
                for record in run_benchmark(std::slice::from_ref(task), estimators, config)? {
                    out.push(SweepRecord {
                        sweep_id: spec.id().into(),
                        coordinate: p.coordinate.clone(),
                        value: p.value,
                        record,
                    });
                }
            }
            None => {
                for e in estimators {
                    for &n in &config.n_points {
                        for seed in 0..config.seeds as u64 {
                            out.push(SweepRecord {
                                sweep_id: spec.id().into(),
                                coordinate: p.coordinate.clone(),
                                value: p.value,
                                record: RunRecord {
                                    task_id: format!("{}-{}", spec.id(), p.coordinate),
                                    estimator_id: e.id(),
                                    seed,
                                    n_points: n,
                                    estimate: f64::NAN,
                                    mi_true: f64::NAN,
                                    rel_bias: f64::NAN,
                                    wallclock_s: 0.0,
                                    flags: vec![EstimateFlag::Failed],
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::paired_covariance;

    fn config() -> RunConfig {
        RunConfig {
            seeds: 2,
            n_points: vec![400],
            record_wallclock: false,
            ..Default::default()
        }
    }

    #[test]
    fn sparsity_grid_conserves_mi() {
        let points = sweep_points(&SweepSpec::default_for("sparsity").unwrap()).unwrap();
        assert_eq!(points.len(), 9);
        for p in &points {
            let t = p.task.as_ref().unwrap_or_else(|| panic!("{}: {:?}", p.coordinate, p.error));
            let BaseSpec::Gaussian { covariance, .. } = &t.base else { panic!() };
            let mi = gaussian_mi(&covariance.build(10, 10).unwrap(), 10, 10).unwrap();
            assert!((mi - 1.0).abs() <= 1e-9, "{} {mi}", p.coordinate);
        }
    }

    #[test]
    fn sparsity_endpoint_is_two_pair() {
        let spec = SweepSpec::Sparsity {
            dim: 10,
            target: 1.0,
            alpha_fractions: vec![],
            ks: vec![2],
        };
        let p = &sweep_points(&spec).unwrap()[0];
        let t = p.task.as_ref().unwrap();
        let BaseSpec::Gaussian { covariance, .. } = &t.base else { panic!() };
        let cov = covariance.build(10, 10).unwrap();
        let var = cov[(0, 0)];
        let rho = cov[(0, 10)] / var;
        let two_pair = paired_covariance(10, 10, 2, rho).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert!((cov[(i, j)] / var - two_pair[(i, j)]).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn unsolvable_point_is_flagged_not_fatal() {
        let spec = SweepSpec::Sparsity {
            dim: 3,
            target: 1.0,
            alpha_fractions: vec![1.0],
            ks: vec![7],
        };
        let recs = sweep(&spec, &[EstimatorSpec::Cca], &config()).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs[2].record.flags.contains(&EstimateFlag::Failed));
        assert!(!recs[0].record.flagged());
    }

    fn base_records(base: BaseSpec, x: Vec<BlockMap>, stream: &str) -> Vec<RunRecord> {
        let t = TaskSpec::new("base", "f", stream, base, x, vec![]).unwrap();
        run_benchmark(&[t], &[EstimatorSpec::Cca, EstimatorSpec::Ksg1 { k: 5 }], &config()).unwrap()
    }

    #[test]
    fn identity_endpoints_reproduce_base() {
        let est = [EstimatorSpec::Cca, EstimatorSpec::Ksg1 { k: 5 }];
        let power = sweep(
            &SweepSpec::TailsPower {
                dim: 3,
                rho: 0.8,
                powers: vec![1.0],
            },
            &est,
            &config(),
        )
        .unwrap();
        let base = base_records(paired(3, 0.8), vec![], "sweep-tails-power");
        for (a, b) in power.iter().zip(&base) {
            assert_eq!(a.record.estimate.to_bits(), b.estimate.to_bits());
        }
        let spiral = sweep(
            &SweepSpec::SpiralSpeed {
                rho: 0.8,
                speeds: vec![0.0],
            },
            &est,
            &config(),
        )
        .unwrap();
        let base = base_records(
            BaseSpec::Gaussian {
                dim_x: 2,
                dim_y: 1,
                covariance: CovarianceSpec::Paired { pairs: 1, rho: 0.8 },
            },
            vec![],
            "sweep-spiral-speed",
        );
        for (a, b) in spiral.iter().zip(&base) {
            assert_eq!(a.record.estimate.to_bits(), b.estimate.to_bits());
        }
    }

    #[test]
    fn every_default_sweep_builds() {
        for id in SweepSpec::IDS {
            let spec = SweepSpec::default_for(id).unwrap();
            assert_eq!(spec.id(), id);
            for p in sweep_points(&spec).unwrap() {
                assert!(p.task.is_some(), "{id} {}: {:?}", p.coordinate, p.error);
            }
        }
        let high = sweep_points(&SweepSpec::default_for("high-mi").unwrap()).unwrap();
        assert_eq!(high.len(), 18);
        for p in &high {
            assert!((p.task.as_ref().unwrap().mi_true - p.value).abs() < 1e-9);
        }
    }
}
