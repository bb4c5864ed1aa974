//! The default forty-task roster and its self-checks.

use crate::distributions::{
    gaussian_mi, gaussian_mi_cca, student_correction, BaseDistribution, CovarianceSpec,
    JointDistribution,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::transforms::{AxisMap, BlockMap, SpiralMap};

use super::task::{BaseSpec, TaskSpec};

const BIVARIATE_RHO: f64 = 0.75;
const DENSE_RHO: f64 = 0.5;
const PAIRED_RHO: f64 = 0.8;
const SWISS_ROLL_MI: f64 = 0.8;

fn axis(a: AxisMap) -> BlockMap {
    BlockMap::Axis(a)
}

fn bivariate() -> BaseSpec {
    BaseSpec::Gaussian {
        dim_x: 1,
        dim_y: 1,
        covariance: CovarianceSpec::Bivariate { rho: BIVARIATE_RHO },
    }
}

fn student_identity(dof: u32, m: usize, n: usize) -> BaseSpec {
    BaseSpec::Student {
        dim_x: m,
        dim_y: n,
        dof,
        dispersion: CovarianceSpec::Identity,
    }
}

fn multinormal(m: usize, covariance: CovarianceSpec) -> BaseSpec {
    BaseSpec::Gaussian {
        dim_x: m,
        dim_y: m,
        covariance,
    }
}

fn student_id(dof: u32, m: usize, n: usize) -> String {
    format!("student-identity-nu{dof}-{m}x{n}")
}

/// Spirals used on multivariate tasks: `v_X = 1/m`, `v_Y = 1/n`, each rotating one
/// coordinate plane.
pub fn task_spirals(m: usize, n: usize) -> Result<(SpiralMap, SpiralMap)> {
    let x = SpiralMap::plane(m, 0, 1, 1.0 / m as f64)?;
    let y = SpiralMap::plane(n, 1, 2.min(n - 1), 1.0 / n as f64)?;
    Ok((x, y))
}

pub fn wiggly_x() -> Result<AxisMap> {
    AxisMap::wiggly(vec![0.4, 0.2, 0.03], vec![1.0, 1.7, 3.3], vec![0.0, 1.0, -2.5])
}

pub fn wiggly_y() -> Result<AxisMap> {
    AxisMap::wiggly(vec![-0.4, 0.17, 0.02], vec![0.4, 1.3, 4.3], vec![0.0, 3.5, -2.5])
}

pub fn bimodal_x() -> Result<AxisMap> {
    AxisMap::gmm_quantile(vec![0.3, 0.7], vec![0.0, 5.0], vec![1.0, 1.0])
}

pub fn bimodal_y() -> Result<AxisMap> {
    AxisMap::gmm_quantile(vec![0.5, 0.5], vec![-1.0, 3.0], vec![1.0, 1.0])
}

fn one_by_one() -> Result<Vec<TaskSpec>> {
    let base_id = "1v1-normal-0.75";
    let cdf = axis(AxisMap::normal_cdf());
    let derived = |id: &str, x: Vec<BlockMap>, y: Vec<BlockMap>| {
        TaskSpec::new(id, "one-dimensional", base_id, bivariate(), x, y)
    };
    let swiss_rho = (1.0 - (-2.0 * SWISS_ROLL_MI).exp()).sqrt();
    let nu1 = student_id(1, 1, 1);
    Ok(vec![
        TaskSpec::new(base_id, "one-dimensional", base_id, bivariate(), vec![], vec![])?
            .describe("bivariate normal"),
        derived("1v1-uniform-margins-0.75", vec![cdf.clone()], vec![cdf.clone()])?
            .reconstructed(true)
            .describe("normal CDF on both margins"),
        derived(
            "1v1-half-cube-0.75",
            vec![axis(AxisMap::half_cube())],
            vec![axis(AxisMap::half_cube())],
        )?
        .reconstructed(true)
        .describe("half-cube on both margins"),
        TaskSpec::new(
            "1v1-asinh-student-nu1",
            "one-dimensional",
            nu1,
            student_identity(1, 1, 1),
            vec![axis(AxisMap::asinh())],
            vec![axis(AxisMap::asinh())],
        )?
        .describe("asinh on a bivariate Student law with one degree of freedom"),
        derived(
            "1v1-wiggly-0.75",
            vec![axis(wiggly_x()?)],
            vec![axis(wiggly_y()?)],
        )?
        .reconstructed(true)
        .describe("wiggly maps on both margins"),
        derived(
            "1v1-bimodal-0.75",
            vec![cdf.clone(), axis(bimodal_x()?)],
            vec![cdf.clone(), axis(bimodal_y()?)],
        )?
        .reconstructed(true)
        .describe("mixture quantiles over uniform margins"),
        TaskSpec::new(
            "1v1-additive-0.1",
            "one-dimensional",
            "1v1-additive-0.1",
            BaseSpec::AdditiveNoise { epsilon: 0.1 },
            vec![],
            vec![],
        )?
        .describe("Y = X + uniform noise"),
        TaskSpec::new(
            "1v1-additive-0.75",
            "one-dimensional",
            "1v1-additive-0.75",
            BaseSpec::AdditiveNoise { epsilon: 0.75 },
            vec![],
            vec![],
        )?
        .describe("Y = X + uniform noise"),
        TaskSpec::new(
            "2v1-swiss-roll",
            "swiss-roll",
            "2v1-swiss-roll",
            BaseSpec::Gaussian {
                dim_x: 1,
                dim_y: 1,
                covariance: CovarianceSpec::Bivariate { rho: swiss_rho },
            },
            vec![cdf.clone(), BlockMap::SwissRoll],
            vec![cdf],
        )?
        .reconstructed(true)
        .describe("Gaussian copula with 0.8 nats, X embedded on the Swiss roll"),
    ])
}

fn multinormal_tasks() -> Result<Vec<TaskSpec>> {
    let mut out = Vec::new();
    for m in [2, 3, 5, 25] {
        let id = format!("mn-dense-{m}x{m}");
        out.push(
            TaskSpec::new(
                &id,
                "multinormal",
                &id,
                multinormal(m, CovarianceSpec::Dense { rho: DENSE_RHO }),
                vec![],
                vec![],
            )?
            .describe("all correlations 0.5"),
        );
    }
    for m in [2, 3, 5, 25] {
        let id = format!("mn-2pair-{m}x{m}");
        out.push(
            TaskSpec::new(
                &id,
                "multinormal",
                &id,
                multinormal(m, CovarianceSpec::Paired { pairs: 2, rho: PAIRED_RHO }),
                vec![],
                vec![],
            )?
            .describe("two correlated coordinate pairs"),
        );
    }
    Ok(out)
}

fn student_tasks() -> Result<Vec<TaskSpec>> {
    let roster = [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (2, 5), (3, 5)];
    roster
        .iter()
        .map(|&(dof, m)| {
            let id = student_id(dof, m, m);
            let stated = matches!((dof, m), (1, 1) | (2, 2));
            Ok(TaskSpec::new(&id, "student", &id, student_identity(dof, m, m), vec![], vec![])?
                .reconstructed(!stated)
                .describe("identity dispersion"))
        })
        .collect()
}

fn transformed_tasks() -> Result<Vec<TaskSpec>> {
    let mut out = Vec::new();
    let paired = |m: usize| multinormal(m, CovarianceSpec::Paired { pairs: 2, rho: PAIRED_RHO });
    let cdf = axis(AxisMap::normal_cdf());
    let cube = axis(AxisMap::half_cube());
    for m in [3, 5, 25] {
        let base_id = format!("mn-2pair-{m}x{m}");
        let (sx, sy) = task_spirals(m, m)?;
        let (sx, sy) = (BlockMap::Spiral(sx), BlockMap::Spiral(sy));
        for (prefix, x, y) in [
            ("normal-cdf", vec![cdf.clone()], vec![cdf.clone()]),
            ("half-cube", vec![cube.clone()], vec![cube.clone()]),
            ("spiral", vec![sx.clone()], vec![sy.clone()]),
        ] {
            out.push(
                TaskSpec::new(format!("{prefix}@{base_id}"), "transformed", &base_id, paired(m), x, y)?
                    .reconstructed(true),
            );
        }
    }
    for (dof, m) in [(1, 2), (2, 3), (2, 5)] {
        let base_id = student_id(dof, m, m);
        out.push(
            TaskSpec::new(
                format!("asinh@{base_id}"),
                "transformed",
                &base_id,
                student_identity(dof, m, m),
                vec![axis(AxisMap::asinh())],
                vec![axis(AxisMap::asinh())],
            )?
            .reconstructed(true),
        );
    }
    for m in [3, 5] {
        let base_id = format!("mn-2pair-{m}x{m}");
        let (sx, sy) = task_spirals(m, m)?;
        let (sx, sy) = (BlockMap::Spiral(sx), BlockMap::Spiral(sy));
        out.push(
            TaskSpec::new(
                format!("spiral@normal-cdf@{base_id}"),
                "transformed",
                &base_id,
                paired(m),
                vec![cdf.clone(), sx.clone()],
                vec![cdf.clone(), sy.clone()],
            )?
            .reconstructed(true),
        );
        out.push(
            TaskSpec::new(
                format!("normal-cdf@spiral@{base_id}"),
                "transformed",
                &base_id,
                paired(m),
                vec![sx, cdf.clone()],
                vec![sy, cdf.clone()],
            )?
            .reconstructed(true),
        );
    }
    Ok(out)
}

/// Builds the forty default tasks and runs the cheap self-checks.
pub fn registry_default() -> Result<Vec<TaskSpec>> {
    let mut tasks = one_by_one()?;
    tasks.extend(multinormal_tasks()?);
    tasks.extend(student_tasks()?);
    tasks.extend(transformed_tasks()?);
    verify_registry(&tasks)?;
    Ok(tasks)
}

fn check_failed(task: &TaskSpec, message: String) -> Error {
    Error::Registry {
        task_id: task.task_id.clone(),
        message,
    }
}

/// Exact consistency checks: unique ids, stored MI matching a rebuild bit for bit,
/// transformed tasks carrying their base MI, and two independent Gaussian MI routes
/// agreeing.
pub fn verify_registry(tasks: &[TaskSpec]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for t in tasks {
        if !seen.insert(t.task_id.as_str()) {
            return Err(check_failed(t, "duplicate task id".into()));
        }
        let dist = t.distribution()?;
        if dist.mi_true().to_bits() != t.mi_true.to_bits() {
            return Err(check_failed(t, "stored MI differs from rebuilt MI".into()));
        }
        let base_mi = t.base.build()?.mi_true();
        if base_mi.to_bits() != t.mi_true.to_bits() {
            return Err(check_failed(t, "maps changed the ground truth".into()));
        }
        if let Some(base) = tasks.iter().find(|b| b.task_id == t.stream_key) {
            if base.base != t.base {
                return Err(check_failed(t, "stream key names a task with a different base".into()));
            }
        }
        match &t.base {
            BaseSpec::Gaussian {
                dim_x,
                dim_y,
                covariance,
            } => {
                let cov = covariance.build(*dim_x, *dim_y)?;
                let det = gaussian_mi(&cov, *dim_x, *dim_y)?;
                let cca = gaussian_mi_cca(&cov, *dim_x, *dim_y)?;
                if (det - cca).abs() > 1e-10 * det.max(1.0) {
                    return Err(check_failed(
                        t,
                        format!("determinant route {det} disagrees with canonical route {cca}"),
                    ));
                }
            }
            BaseSpec::Student {
                dim_x,
                dim_y,
                dof,
                dispersion: CovarianceSpec::Identity,
            } => {
                let c = student_correction(*dof as f64, *dim_x, *dim_y)?;
                if (c - t.mi_true).abs() > 1e-12 {
                    return Err(check_failed(t, "identity Student MI is not c(nu, m, n)".into()));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Monte-Carlo PMI check on every task whose base has a tractable density:
/// the sample mean of the base PMI must lie within `sigmas` standard errors of
/// the stored MI.
pub fn verify_registry_monte_carlo(
    tasks: &[TaskSpec],
    n_samples: usize,
    sigmas: f64,
    seed: u64,
) -> Result<Vec<(String, f64, f64)>> {
    let mut report = Vec::new();
    for t in tasks {
        let base: BaseDistribution = t.base.build()?;
        let mut rng = RngStream::derive(seed, &t.stream_key, 0, "registry-check");
        let sample = base.sample(&mut rng, n_samples)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut tractable = true;
        for i in 0..n_samples {
            match base.pmi(sample.x_row(i), sample.y_row(i)) {
                Some(v) => {
                    sum += v;
                    sum_sq += v * v;
                }
                None => {
                    tractable = false;
                    break;
                }
            }
        }
        if !tractable {
            continue;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let se = ((sum_sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
        if (mean - t.mi_true).abs() > sigmas * se {
            return Err(check_failed(
                t,
                format!("Monte-Carlo PMI mean {mean} is outside {sigmas} SE ({se}) of {}", t.mi_true),
            ));
        }
        report.push((t.task_id.clone(), mean, se));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_tasks() {
        let tasks = registry_default().unwrap();
        assert_eq!(tasks.len(), 40);
        let mi = |id: &str| tasks.iter().find(|t| t.task_id == id).unwrap().mi_true;
        assert!((mi("1v1-normal-0.75") - 0.413_339).abs() < 1e-6);
        assert!((mi("mn-2pair-25x25") - 1.021_651).abs() < 1e-6);
        assert!((mi("mn-2pair-25x25") + 0.36f64.ln()).abs() < 1e-12);
        assert_eq!(
            mi("student-identity-nu2-2x2"),
            student_correction(2.0, 2, 2).unwrap()
        );
        assert!((mi("2v1-swiss-roll") - 0.8).abs() < 1e-12);
        assert!((mi("1v1-additive-0.1") - (0.1 - 0.2f64.ln())).abs() < 1e-12);
        assert!((mi("1v1-additive-0.75") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn transformed_tasks_share_base_truth() {
        let tasks = registry_default().unwrap();
        for t in tasks.iter().filter(|t| t.is_transformed() && t.stream_key != t.task_id) {
            let base = tasks.iter().find(|b| b.task_id == t.stream_key).unwrap();
            assert_eq!(t.mi_true.to_bits(), base.mi_true.to_bits(), "{}", t.task_id);
        }
    }

    #[test]
    fn dimensions() {
        let tasks = registry_default().unwrap();
        let swiss = tasks.iter().find(|t| t.task_id == "2v1-swiss-roll").unwrap();
        assert_eq!((swiss.dim_x, swiss.dim_y), (2, 1));
        let spiral = tasks
            .iter()
            .find(|t| t.task_id == "spiral@normal-cdf@mn-2pair-5x5")
            .unwrap();
        assert_eq!((spiral.dim_x, spiral.dim_y), (5, 5));
    }

    #[test]
    fn corrupted_truth_is_caught() {
        let mut tasks = registry_default().unwrap();
        tasks[3].mi_true += 1e-15;
        let err = verify_registry(&tasks).unwrap_err();
        assert!(err.to_string().contains(&tasks[3].task_id));
    }
}
