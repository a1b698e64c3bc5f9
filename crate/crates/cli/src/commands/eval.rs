use std::path::{Path, PathBuf};

use spikerx::receiver::load_model;
use spikerx::training::{
    evaluate, write_eval_csv, EvalOptions, EvalRecord, EvalScenario, Mobility, Pool, ScenarioSampler,
};
use spikerx_phy::{CovarianceModel, Profile, Receiver};

use super::ensure_parent;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Parses `lo:hi:step` (inclusive) or a comma-separated list.
pub fn parse_snr(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::config(format!("bad SNR value `{s}` in `{spec}`")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(CliError::config(format!("SNR range `{spec}` needs lo <= hi and step > 0")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| lo + i as f64 * step).collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(CliError::config(format!("SNR list `{spec}` must be lo:hi:step or a comma list"))),
    }
}

const AVERAGING_POINTS: usize = 5;

/// Channel overrides on top of the configured sampler.
#[derive(Debug, Clone, Default)]
pub struct ScenarioArgs {
    pub pool: Option<Pool>,
    pub profile: Option<Profile>,
    pub doppler_hz: Option<f64>,
    pub delay_spread_ns: Option<f64>,
    pub dmrs: Option<usize>,
    /// LMMSE interpolation with statistics averaged over the sampled ranges
    /// instead of the realized channel.
    pub averaged_lmmse: bool,
}

impl ScenarioArgs {
    pub fn scenario(&self, cfg: &RunConfig) -> Result<EvalScenario> {
        Ok(EvalScenario::Sampled {
            sampler: self.sampler(cfg)?,
            pool: self.pool.unwrap_or(Pool::Train),
        })
    }

    /// Covariance for the LMMSE baseline; `None` means matched.
    pub fn covariance(&self, cfg: &RunConfig) -> Result<Option<CovarianceModel>> {
        if !self.averaged_lmmse {
            return Ok(None);
        }
        let s = self.sampler(cfg)?;
        let doppler = match s.mobility {
            Mobility::Doppler => s.doppler_hz,
            Mobility::Speed => (
                cfg.link.doppler_for_speed(s.speed_mps.0),
                cfg.link.doppler_for_speed(s.speed_mps.1),
            ),
        };
        let delay = (s.delay_spread_ns.0 * 1e-9, s.delay_spread_ns.1 * 1e-9);
        Ok(Some(CovarianceModel::averaged(delay, doppler, AVERAGING_POINTS)))
    }

    fn sampler(&self, cfg: &RunConfig) -> Result<ScenarioSampler> {
        let pool = self.pool.unwrap_or(Pool::Train);
        let mut sampler = cfg.sampler.clone();
        if let Some(p) = self.profile {
            match pool {
                Pool::Train => sampler.train_profiles = vec![p],
                Pool::Test => sampler.test_profiles = vec![p],
            }
        }
        if let Some(d) = self.doppler_hz {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(CliError::config(format!("doppler must be finite and non-negative, got {d}")));
            }
            sampler.mobility = Mobility::Doppler;
            sampler.doppler_hz = (d, d);
        }
        if let Some(t) = self.delay_spread_ns {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(CliError::config(format!("delay spread must be finite and non-negative, got {t}")));
            }
            sampler.delay_spread_ns = (t, t);
        }
        if let Some(k) = self.dmrs {
            spikerx::training::dmrs_layout(k, cfg.link.symbols)?;
            sampler.dmrs_counts = vec![k];
        }
        Ok(sampler)
    }
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub batch: usize,
    pub scenario: ScenarioArgs,
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    fn options(&self, cfg: &RunConfig, baselines: Vec<Receiver>) -> Result<EvalOptions> {
        if self.snr_db.is_empty() {
            return Err(CliError::config("no SNR points"));
        }
        Ok(EvalOptions {
            snr_db: self.snr_db.clone(),
            trials: self.trials,
            batch: self.batch,
            seed: cfg.seed(),
            baselines,
            covariance: self.scenario.covariance(cfg)?,
        })
    }
}

/// BER sweep of a checkpoint, optionally with the classical receivers on the
/// same slots. Writes `ber.csv`.
pub fn eval(cfg: &RunConfig, checkpoint: &Path, args: &EvalArgs, with_baselines: bool) -> Result<Vec<EvalRecord>> {
    let (model, mut store) = load_model(checkpoint)?;
    let m = model.config();
    if (m.rx_antennas, m.bits_per_symbol) != (cfg.link.rx_antennas, cfg.link.bits_per_symbol) {
        return Err(CliError::config(format!(
            "checkpoint expects N_R={} and B_t={}, link has {} and {}",
            m.rx_antennas, m.bits_per_symbol, cfg.link.rx_antennas, cfg.link.bits_per_symbol
        )));
    }
    let baselines = if with_baselines { Receiver::ALL.to_vec() } else { Vec::new() };
    let opts = args.options(cfg, baselines)?;
    let name = m.network.name();
    let records = evaluate(Some((&model, &mut store, name)), &cfg.link, &args.scenario.scenario(cfg)?, &opts)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.join("ber.csv"));
    write_records(&out, &records)?;
    Ok(records)
}

/// The classical receivers alone. Writes `baseline.csv`.
pub fn baseline(cfg: &RunConfig, receivers: &[Receiver], args: &EvalArgs) -> Result<Vec<EvalRecord>> {
    if receivers.is_empty() {
        return Err(CliError::config("no receivers selected"));
    }
    let opts = args.options(cfg, receivers.to_vec())?;
    let records = evaluate(None, &cfg.link, &args.scenario.scenario(cfg)?, &opts)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.join("baseline.csv"));
    write_records(&out, &records)?;
    Ok(records)
}

fn write_records(out: &Path, records: &[EvalRecord]) -> Result<()> {
    ensure_parent(out)?;
    write_eval_csv(std::io::BufWriter::new(std::fs::File::create(out)?), records)?;
    Ok(())
}
