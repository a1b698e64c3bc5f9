use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spikerx::energy::{
    energy, profile_network, record_forward, summarize, EnergySummary, EnergyTable, LayerEnergy, SpikeCounting,
};
use spikerx::receiver::{load_model, Batch, NetworkKind, Recorder};
use spikerx::training::Pool;
use spikerx_phy::substream;

use super::write_csv;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ProfileArgs {
    /// Slots in the profiled batch.
    pub batch: usize,
    /// Arithmetic width for the energy table; the quantizer width or 32 when unset.
    pub bits: Option<u32>,
    pub counting: SpikeCounting,
    pub out_dir: Option<PathBuf>,
}

impl Default for ProfileArgs {
    fn default() -> Self {
        ProfileArgs {
            batch: 8,
            bits: None,
            counting: SpikeCounting::Events,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileReport {
    pub summary: EnergySummary,
    /// Trainable scalars actually held by the checkpoint.
    pub stored_params: usize,
    pub snn: Vec<LayerEnergy>,
    pub ann: Vec<LayerEnergy>,
}

/// One inference forward on a sampled batch, then per-layer spike rates and
/// energy of the network and its ReLU twin.
///
/// Writes `profile.csv`, `profile_ann.csv` and `summary.json`.
pub fn profile(cfg: &RunConfig, checkpoint: &Path, args: &ProfileArgs) -> Result<ProfileReport> {
    if args.batch == 0 {
        return Err(CliError::config("profile batch must be at least 1"));
    }
    let (model, mut store) = load_model(checkpoint)?;
    let mcfg = model.config().clone();
    let bits = args.bits.unwrap_or_else(|| mcfg.quantization.as_ref().map_or(32, |q| q.bits));
    let table = EnergyTable::for_bits(bits)?;
    let seed = cfg.seed();
    let samples = (0..args.batch)
        .map(|i| {
            let mut rng = substream(seed, &format!("profile/{i}"));
            cfg.sampler.sample(&cfg.link, Pool::Train, &mut rng)?.sample(&cfg.link, &mut rng)
        })
        .collect::<spikerx::Result<Vec<_>>>()?;
    let batch = Batch::<f32>::from_samples(&samples, mcfg.bits_per_symbol, mcfg.loss_mask)?;
    let (m, n) = (cfg.link.symbols, cfg.link.subcarriers);

    let rec = record_forward(&model, &mut store, &batch.input, Recorder::new())?;
    let snn_profile = profile_network(&mcfg, m, n, Some(&rec), args.counting)?;
    let ann_cfg = if mcfg.network == NetworkKind::Snn { mcfg.neuralrx() } else { mcfg.clone() };
    let ann_profile = profile_network(&ann_cfg, m, n, None, args.counting)?;
    let snn = energy(&snn_profile, &table)?;
    let ann = energy(&ann_profile, &table)?;
    let summary = summarize(&mcfg, &snn_profile, &snn, &ann, bits)?;

    let dir = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir)?;
    write_csv(&dir.join("profile.csv"), &snn)?;
    write_csv(&dir.join("profile_ann.csv"), &ann)?;
    let report = ProfileReport {
        summary,
        stored_params: store.num_trainable_elements(),
        snn,
        ann,
    };
    let mut text = serde_json::to_string_pretty(&serde_json::json!({
        "summary": &report.summary,
        "stored_params": report.stored_params,
    }))?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    Ok(report)
}
