use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use spikerx_autodiff::{ParamStore, Tape};
use spikerx_phy::{
    count_bit_errors, receive, substream, trial_rng, ChannelSpec, CovarianceModel, LinkConfig, Receiver, Trial,
};

use super::loss::bce_loss;
use super::sampler::{into_sample, Pool, Scenario, ScenarioSampler};
use crate::energy::activation_probability;
use crate::error::{Result, SpikeRxError};
use crate::receiver::{aggregate_var, payload_llrs, Batch, ForwardOptions, Model, NetworkKind, Recorder};

/// Channel conditions of an evaluation sweep; the SNR always comes from the
/// sweep itself.
#[derive(Debug, Clone)]
pub enum EvalScenario {
    /// Every trial draws profile, delay spread, Doppler and DMRS count.
    Sampled { sampler: ScenarioSampler, pool: Pool },
    Fixed { spec: ChannelSpec, dmrs_symbols: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// Slots per model forward.
    pub batch: usize,
    pub seed: u64,
    pub baselines: Vec<Receiver>,
    /// Wiener covariance for the LMMSE baseline; matched when `None`.
    pub covariance: Option<CovarianceModel>,
}

/// One row of a BER sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub snr_db: f64,
    pub receiver: String,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Mean BCE of the soft outputs (networks only).
    pub bce: Option<f64>,
    /// Mean activation probability in percent over spiking layers.
    pub activation_pct: Option<f64>,
    pub seed: u64,
}

/// Slot `trial` of SNR point `snr_index`; identical for every receiver.
pub fn eval_trial(
    link: &LinkConfig,
    scenario: &EvalScenario,
    snr_db: f64,
    seed: u64,
    snr_index: usize,
    trial: usize,
) -> Result<Trial> {
    let mut rng = trial_rng(seed, snr_index, trial);
    let sc = match scenario {
        EvalScenario::Sampled { sampler, pool } => Scenario {
            snr_db,
            ..sampler.sample(link, *pool, &mut rng)?
        },
        EvalScenario::Fixed { spec, dmrs_symbols } => Scenario::fixed(*spec, snr_db, dmrs_symbols.clone()),
    };
    sc.simulate(link, &mut rng)
}

#[derive(Default)]
struct Tally {
    bits: u64,
    errors: u64,
    bce_sum: f64,
    bce_weight: f64,
    act_sum: f64,
    act_weight: f64,
}

/// Mean activation probability over all recorded spiking layers.
fn mean_activation(rec: &Recorder, timesteps: usize) -> Option<f64> {
    let pcts: Vec<f64> = rec
        .layers
        .iter()
        .map(|l| activation_probability(l.events.iter().sum(), l.batch, timesteps, l.neurons))
        .collect();
    (!pcts.is_empty()).then(|| pcts.iter().sum::<f64>() / pcts.len() as f64)
}

fn model_batch(
    model: &Model,
    store: &mut ParamStore<f32>,
    trials: &[Trial],
    seed: u64,
    tally: &mut Tally,
) -> Result<()> {
    let cfg = model.config();
    let samples: Vec<_> = trials.iter().cloned().map(into_sample).collect();
    let batch = Batch::<f32>::from_samples(&samples, cfg.bits_per_symbol, cfg.loss_mask)?;
    let mut tape = Tape::new();
    let mut rec = Recorder::new();
    let mut sso = substream(seed, "eval/sso");
    let logits = model.forward(&mut tape, store, &batch.input, ForwardOptions::INFER, &mut sso, Some(&mut rec))?;
    let p = aggregate_var(&mut tape, &logits)?;
    let p = tape.value(p);
    for (b, trial) in trials.iter().enumerate() {
        let llrs = payload_llrs(p, b, &samples[b].data_mask);
        let bits = trial.tti.payload(cfg.bits_per_symbol);
        tally.bits += bits.len() as u64;
        tally.errors += count_bit_errors(&llrs, &bits);
    }
    let n = batch.data.iter().filter(|&&d| d).count() as f64;
    tally.bce_sum += bce_loss(p.data(), &batch.labels, &batch.data)? * n;
    tally.bce_weight += n;
    if cfg.network == NetworkKind::Snn {
        if let Some(a) = mean_activation(&rec, cfg.timesteps) {
            tally.act_sum += a * trials.len() as f64;
            tally.act_weight += trials.len() as f64;
        }
    }
    Ok(())
}

/// BER sweep of an optional network and the requested classical receivers on
/// the same slots.
pub fn evaluate(
    mut model: Option<(&Model, &mut ParamStore<f32>, &str)>,
    link: &LinkConfig,
    scenario: &EvalScenario,
    opts: &EvalOptions,
) -> Result<Vec<EvalRecord>> {
    if opts.trials == 0 || opts.batch == 0 {
        return Err(SpikeRxError::config("evaluation needs at least one trial and batch size >= 1"));
    }
    let mut out = Vec::new();
    for (i, &snr) in opts.snr_db.iter().enumerate() {
        let mut net = Tally::default();
        let mut base: Vec<Tally> = opts.baselines.iter().map(|_| Tally::default()).collect();
        let mut start = 0;
        while start < opts.trials {
            let end = (start + opts.batch).min(opts.trials);
            let trials = (start..end)
                .map(|j| eval_trial(link, scenario, snr, opts.seed, i, j))
                .collect::<Result<Vec<_>>>()?;
            if let Some((m, store, _)) = model.as_mut() {
                model_batch(m, store, &trials, opts.seed, &mut net)?;
            }
            for (rcv, tally) in opts.baselines.iter().zip(base.iter_mut()) {
                for trial in &trials {
                    let llrs = receive(*rcv, trial, opts.covariance.as_ref())?;
                    let bits = trial.tti.payload(link.bits_per_symbol);
                    tally.bits += bits.len() as u64;
                    tally.errors += count_bit_errors(&llrs, &bits);
                }
            }
            start = end;
        }
        let row = |name: &str, t: &Tally| EvalRecord {
            snr_db: snr,
            receiver: name.to_string(),
            bits: t.bits,
            errors: t.errors,
            ber: t.errors as f64 / t.bits as f64,
            bce: (t.bce_weight > 0.0).then(|| t.bce_sum / t.bce_weight),
            activation_pct: (t.act_weight > 0.0).then(|| t.act_sum / t.act_weight),
            seed: opts.seed,
        };
        if let Some((_, _, name)) = &model {
            out.push(row(name, &net));
        }
        for (rcv, t) in opts.baselines.iter().zip(&base) {
            out.push(row(rcv.name(), t));
        }
    }
    Ok(out)
}

pub fn write_eval_csv<W: Write>(w: W, records: &[EvalRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_eval_csv<R: Read>(r: R) -> Result<Vec<EvalRecord>> {
    let mut csv = csv::Reader::from_reader(r);
    Ok(csv.deserialize().collect::<std::result::Result<_, _>>()?)
}
