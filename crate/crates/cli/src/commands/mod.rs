mod ablate;
mod dataset;
mod eval;
mod plotdata;
mod profile;
mod train;

pub use ablate::{ablate, AblateArgs, AblationRow, Axis};
pub use dataset::{gen_dataset, GenDatasetArgs};
pub use eval::{baseline, eval, parse_snr, EvalArgs, ScenarioArgs};
pub use plotdata::{plotdata, PlotRow};
pub use profile::{profile, ProfileArgs, ProfileReport};
pub use train::{train, MetricsRow, TrainRun, CHECKPOINT_NAME, METRICS_NAME};

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}
