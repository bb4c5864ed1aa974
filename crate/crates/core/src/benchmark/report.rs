use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::run::{aggregate, min_sample_size, MinSampleEntry, RunRecord, Summary, ACCURACY_BAND, SAMPLE_SIZE_GRID};

pub fn write_summary_csv<W: Write>(out: W, summaries: &[Summary]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let err = |e: csv::Error| Error::Argument(e.to_string());
    w.write_record([
        "task_id",
        "estimator_id",
        "n_points",
        "mi_true",
        "mean",
        "std",
        "rel_bias",
        "n_used",
        "n_flagged",
    ])
    .map_err(err)?;
    for s in summaries {
        w.write_record([
            s.task_id.clone(),
            s.estimator_id.clone(),
            s.n_points.to_string(),
            s.mi_true.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.rel_bias.to_string(),
            s.n_used.to_string(),
            s.n_flagged.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_min_sample_csv<W: Write>(mut out: W, entries: &[MinSampleEntry]) -> Result<()> {
    writeln!(out, "task_id,estimator_id,min_sample_size")?;
    for e in entries {
        writeln!(out, "{},{},{}", e.task_id, e.estimator_id, e.label())?;
    }
    Ok(())
}

/// White at zero, red for underestimates, blue for overestimates; saturates at
/// a relative bias of magnitude one.
pub fn bias_color(rel_bias: f64) -> String {
    let t = rel_bias.abs().min(1.0);
    let fade = (255.0 * (1.0 - 0.85 * t)).round() as u8;
    if rel_bias < 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Heatmap of mean estimates at the largest N of each cell. Rows are tasks,
/// columns estimators; a cell whose runs were all flagged is left blank.
pub fn heatmap_svg(summaries: &[Summary]) -> String {
    let tasks = first_seen(summaries.iter().map(|s| s.task_id.as_str()));
    let ests = first_seen(summaries.iter().map(|s| s.estimator_id.as_str()));
    let (cell_w, cell_h, left, top) = (78.0, 22.0, 260.0, 90.0);
    let width = left + cell_w * (ests.len() + 1) as f64 + 10.0;
    let height = top + cell_h * tasks.len() as f64 + 10.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let header = std::iter::once("true MI").chain(ests.iter().copied());
    for (j, name) in header.enumerate() {
        let x = left + cell_w * (j as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="start" transform="rotate(-40 {x} {})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(name)
        );
    }
    for (i, task) in tasks.iter().enumerate() {
        let y = top + cell_h * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell_h * 0.7,
            escape(task)
        );
        let row: Vec<&Summary> = summaries.iter().filter(|s| s.task_id == *task).collect();
        if let Some(s) = row.first() {
            let _ = writeln!(
                svg,
                r##"<rect x="{left}" y="{y}" width="{cell_w}" height="{cell_h}" fill="#eeeeee" stroke="#cccccc"/><text x="{}" y="{}" text-anchor="middle">{:.2}</text>"##,
                left + cell_w / 2.0,
                y + cell_h * 0.7,
                s.mi_true
            );
        }
        for (j, est) in ests.iter().enumerate() {
            let x = left + cell_w * (j + 1) as f64;
            let cell = row
                .iter()
                .filter(|s| s.estimator_id == *est)
                .max_by_key(|s| s.n_points);
            match cell {
                Some(s) if s.mean.is_finite() => {
                    let fill = if s.rel_bias.is_finite() { bias_color(s.rel_bias) } else { "#ffffff".into() };
                    let _ = writeln!(
                        svg,
                        r##"<rect class="cell" x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="#cccccc"/><text x="{}" y="{}" text-anchor="middle">{:.2}</text>"##,
                        x + cell_w / 2.0,
                        y + cell_h * 0.7,
                        s.mean
                    );
                }
                _ => {
                    let _ = writeln!(
                        svg,
                        r##"<rect class="blank" x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="white" stroke="#cccccc"/>"##
                    );
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub summary_csv: PathBuf,
    pub heatmap_svg: PathBuf,
    pub min_sample_csv: Option<PathBuf>,
}

/// Writes `summary.csv`, `report.svg` and, when every (task, estimator) pair has
/// records on the full sample-size grid, `min_sample_size.csv`.
pub fn write_report(records: &[RunRecord], out_dir: &Path) -> Result<ReportFiles> {
    if records.is_empty() {
        return Err(Error::Argument("no records to report".into()));
    }
    fs::create_dir_all(out_dir)?;
    let summaries = aggregate(records);
    let summary_csv = out_dir.join("summary.csv");
    write_summary_csv(fs::File::create(&summary_csv)?, &summaries)?;
    let heatmap = out_dir.join("report.svg");
    fs::write(&heatmap, heatmap_svg(&summaries))?;
    let min_sample_csv = match min_sample_size(records, &SAMPLE_SIZE_GRID, ACCURACY_BAND) {
        Ok(entries) => {
            let p = out_dir.join("min_sample_size.csv");
            write_min_sample_csv(fs::File::create(&p)?, &entries)?;
            Some(p)
        }
        Err(_) => None,
    };
    Ok(ReportFiles {
        summary_csv,
        heatmap_svg: heatmap,
        min_sample_csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::run::relative_bias;
    use crate::estimators::EstimateFlag;

    fn rec(task: &str, est: &str, n: usize, estimate: f64, flags: Vec<EstimateFlag>) -> RunRecord {
        RunRecord {
            task_id: task.into(),
            estimator_id: est.into(),
            seed: 0,
            n_points: n,
            estimate,
            mi_true: 1.0,
            rel_bias: relative_bias(estimate, 1.0),
            wallclock_s: 0.0,
            flags,
        }
    }

    #[test]
    fn bias_and_colors() {
        let s = aggregate(&[rec("t", "e", 10, 1.0, vec![])]);
        assert_eq!(s[0].rel_bias, 0.0);
        assert_eq!(bias_color(0.0), "#ffffff");
        let s = aggregate(&[rec("t", "e", 10, 0.5, vec![])]);
        assert_eq!(s[0].rel_bias, -0.5);
        assert!(bias_color(-0.5).starts_with("#ff"));
    }

    #[test]
    fn flagged_cell_is_blank() {
        let records = vec![
            rec("t", "cca", 10, 0.9, vec![]),
            rec("t", "nwj-M", 10, 3.0, vec![EstimateFlag::Overfitting]),
        ];
        let svg = heatmap_svg(&aggregate(&records));
        assert_eq!(svg.matches("class=\"blank\"").count(), 1);
        assert_eq!(svg.matches("class=\"cell\"").count(), 1);
        assert!(svg.contains(">0.90<"));
        assert!(!svg.contains(">3.00<"));
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = Vec::new();
        for &n in &SAMPLE_SIZE_GRID {
            records.push(rec("t", "cca", n, 1.0, vec![]));
        }
        let files = write_report(&records, dir.path()).unwrap();
        let table = fs::read_to_string(files.min_sample_csv.unwrap()).unwrap();
        assert_eq!(table, "task_id,estimator_id,min_sample_size\nt,cca,100\n");
        let partial = write_report(&records[..2], &dir.path().join("b")).unwrap();
        assert!(partial.min_sample_csv.is_none());
        assert!(write_report(&[], dir.path()).is_err());
    }
}
