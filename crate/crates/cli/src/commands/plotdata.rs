use std::cmp::Ordering;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spikerx::training::read_eval_csv;

use super::ablate::AblationRow;
use super::train::{MetricsRow, METRICS_NAME};
use super::{ensure_parent, write_csv};
use crate::error::{CliError, Result};

/// One point of a long-format plotting table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub figure: String,
    pub x: f64,
    pub y: f64,
    pub series: String,
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

fn collect(dir: &Path, out: &mut Vec<PlotRow>) -> Result<()> {
    let run = run_name(dir);
    let metrics = dir.join(METRICS_NAME);
    if metrics.is_file() {
        for m in read_rows::<MetricsRow>(&metrics)? {
            out.push(PlotRow {
                figure: "loss".into(),
                x: m.step as f64,
                y: m.loss,
                series: run.clone(),
            });
        }
    }
    for (file, figure) in [("ber.csv", "ber"), ("baseline.csv", "ber")] {
        let path = dir.join(file);
        if !path.is_file() {
            continue;
        }
        for r in read_eval_csv(File::open(&path)?)? {
            out.push(PlotRow {
                figure: figure.into(),
                x: r.snr_db,
                y: r.ber,
                series: format!("{run}/{}", r.receiver),
            });
            if let Some(a) = r.activation_pct {
                out.push(PlotRow {
                    figure: "activation".into(),
                    x: r.snr_db,
                    y: a,
                    series: format!("{run}/{}", r.receiver),
                });
            }
        }
    }
    let ablation = dir.join("ablation.csv");
    if ablation.is_file() {
        for r in read_rows::<AblationRow>(&ablation)? {
            out.push(PlotRow {
                figure: format!("ablation_{}", r.axis),
                x: r.snr_db,
                y: r.ber,
                series: format!("{run}/{}", r.variant),
            });
        }
    }
    Ok(())
}

fn order(a: &PlotRow, b: &PlotRow) -> Ordering {
    a.figure
        .cmp(&b.figure)
        .then_with(|| a.series.cmp(&b.series))
        .then_with(|| a.x.total_cmp(&b.x))
        .then_with(|| a.y.total_cmp(&b.y))
}

/// Merges the metrics of `runs` into one table sorted by figure, series and
/// x, so the result does not depend on the order of `runs`.
pub fn plotdata(runs: &[PathBuf], out: &Path) -> Result<Vec<PlotRow>> {
    if runs.is_empty() {
        return Err(CliError::config("plotdata needs at least one run directory"));
    }
    let mut rows = Vec::new();
    for dir in runs {
        if !dir.is_dir() {
            return Err(CliError::config(format!("run directory {} does not exist", dir.display())));
        }
        collect(dir, &mut rows)?;
    }
    if rows.is_empty() {
        return Err(CliError::config("no metrics found in the given run directories"));
    }
    rows.sort_by(order);
    ensure_parent(out)?;
    write_csv(out, &rows)?;
    Ok(rows)
}
