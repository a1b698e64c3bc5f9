use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spikerx::receiver::{save_model, Model};
use spikerx::training::{self, DataSource, StepReport};
use spikerx_phy::{read_dataset, substream, DatasetSample};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const METRICS_NAME: &str = "metrics.csv";
pub const CHECKPOINT_NAME: &str = "model.ckpt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
    pub wallclock: f64,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub dir: PathBuf,
    pub checkpoint: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub final_loss: f64,
}

/// Trains `cfg.model` into `cfg.output_dir`, online from the sampler or from
/// a dataset file.
pub fn train(cfg: &RunConfig, dataset: Option<&Path>) -> Result<TrainRun> {
    let seed = cfg.seed();
    let dir = cfg.output_dir.clone();
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir)?;
    cfg.write(&dir.join("config.json"))?;

    let fixed: Option<Vec<DatasetSample>> = match dataset {
        Some(p) => Some(load_dataset(p, cfg)?),
        None => None,
    };
    let data = match &fixed {
        Some(s) => DataSource::Fixed(s),
        None => DataSource::Online {
            link: &cfg.link,
            sampler: &cfg.sampler,
        },
    };

    let (model, mut store) = Model::new(&cfg.model, &mut substream(seed, "init"))?;
    let mut metrics = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(METRICS_NAME))?));
    let mut checkpoints = Vec::new();
    let steps = cfg.train.steps;
    let log_every = cfg.train.log_every.max(1);
    let ckpt_every = cfg.train.checkpoint_every;
    let reports = training::train(&model, &mut store, data, &cfg.train, seed, |r: &StepReport, store| {
        if r.step.is_multiple_of(log_every) || r.step == steps {
            metrics
                .serialize(MetricsRow {
                    step: r.step,
                    loss: r.loss,
                    lr: r.lr,
                    wallclock: r.wallclock_s,
                })
                .map_err(spikerx::SpikeRxError::from)?;
        }
        if ckpt_every > 0 && r.step.is_multiple_of(ckpt_every) {
            let path = ckpt_dir.join(format!("step_{}.ckpt", r.step));
            save_model(&path, model.config(), store)?;
            checkpoints.push(path);
        }
        Ok(())
    })?;
    metrics.flush()?;

    let checkpoint = dir.join(CHECKPOINT_NAME);
    save_model(&checkpoint, model.config(), &store)?;
    Ok(TrainRun {
        dir,
        checkpoint,
        checkpoints,
        final_loss: reports.last().map(|r| r.loss).unwrap_or(f64::NAN),
    })
}

fn load_dataset(path: &Path, cfg: &RunConfig) -> Result<Vec<DatasetSample>> {
    let file = File::open(path).map_err(|e| CliError::config(format!("cannot open dataset {}: {e}", path.display())))?;
    let (header, samples) = read_dataset(std::io::BufReader::new(file))?;
    let link = &cfg.link;
    let want = (link.symbols, link.subcarriers, link.rx_antennas, link.bits_per_symbol);
    let got = (
        header.symbols as usize,
        header.subcarriers as usize,
        header.antennas as usize,
        header.bits_per_symbol as usize,
    );
    if want != got {
        return Err(CliError::config(format!(
            "dataset {} has (M, N, N_R, B_t) = {got:?}, config expects {want:?}",
            path.display()
        )));
    }
    Ok(samples)
}
