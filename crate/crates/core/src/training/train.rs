use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spikerx_autodiff::{AdamW, ParamStore, Tape};
use spikerx_phy::{substream, DatasetSample, LinkConfig};

use super::loss::bce_var;
use super::sampler::{Pool, ScenarioSampler};
use crate::error::{Result, SpikeRxError};
use crate::receiver::{aggregate_var, Batch, ForwardOptions, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// TTIs per step.
    pub batch_size: usize,
    pub steps: u64,
    /// Steps between metrics rows.
    pub log_every: u64,
    /// Steps between checkpoints; the final step is always saved.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            batch_size: 8,
            steps: 2000,
            log_every: 10,
            checkpoint_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SpikeRxError::config(m));
        if self.steps == 0 {
            return bad("train.steps must be at least 1");
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad("train.lr must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("train.beta1 and train.beta2 must lie in [0, 1)");
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("train.eps must be positive and train.weight_decay non-negative");
        }
        if self.batch_size == 0 || self.log_every == 0 || self.checkpoint_every == 0 {
            return bad("train.batch_size, train.log_every and train.checkpoint_every must be positive");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamW {
        AdamW {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }
}

/// Where training slots come from.
#[derive(Debug, Clone, Copy)]
pub enum DataSource<'a> {
    /// Fresh slots for every step; sample `i` of step `s` has its own seed.
    Online {
        link: &'a LinkConfig,
        sampler: &'a ScenarioSampler,
    },
    /// A fixed corpus visited cyclically.
    Fixed(&'a [DatasetSample]),
}

impl DataSource<'_> {
    /// Slots of step `step` (1-based).
    pub fn batch(&self, master: u64, step: u64, size: usize) -> Result<Vec<DatasetSample>> {
        match self {
            DataSource::Online { link, sampler } => (0..size)
                .map(|i| {
                    let mut rng = substream(master, &format!("data/{step}/{i}"));
                    let sc = sampler.sample(link, Pool::Train, &mut rng)?;
                    sc.sample(link, &mut rng)
                })
                .collect(),
            DataSource::Fixed(corpus) => {
                if corpus.is_empty() {
                    return Err(SpikeRxError::config("training corpus is empty"));
                }
                let start = (step - 1) as usize * size;
                Ok((0..size).map(|i| corpus[(start + i) % corpus.len()].clone()).collect())
            }
        }
    }
}

/// Progress after one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
    pub wallclock_s: f64,
}

/// One forward, backward and AdamW update; returns the pre-update loss.
pub fn train_step(
    model: &Model,
    store: &mut ParamStore<f32>,
    batch: &Batch<f32>,
    opt: &AdamW,
    step: u64,
    sso: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut tape = Tape::new();
    let logits = model.forward(&mut tape, store, &batch.input, ForwardOptions::TRAIN, sso, None)?;
    let p = aggregate_var(&mut tape, &logits)?;
    let loss = bce_var(&mut tape, p, &batch.labels, &batch.mask)?;
    let value = tape.value(loss).data()[0] as f64;
    if !value.is_finite() {
        return Err(SpikeRxError::NonFiniteLoss { step });
    }
    tape.backward(loss)?;
    tape.write_param_grads(store);
    opt.step(store, step).map_err(|e| match e {
        spikerx_autodiff::AutodiffError::NonFiniteGradient(_) => SpikeRxError::NonFiniteLoss { step },
        e => e.into(),
    })?;
    Ok(value)
}

/// Runs `tcfg.steps` updates and calls `on_step` after each.
///
/// Randomness comes from the `data` and `sso` substreams of `seed`.
pub fn train<F>(
    model: &Model,
    store: &mut ParamStore<f32>,
    data: DataSource<'_>,
    tcfg: &TrainConfig,
    seed: u64,
    mut on_step: F,
) -> Result<Vec<StepReport>>
where
    F: FnMut(&StepReport, &ParamStore<f32>) -> Result<()>,
{
    tcfg.validate()?;
    let opt = tcfg.optimizer();
    let mut sso = substream(seed, "sso");
    let start = Instant::now();
    let cfg = model.config();
    let mut reports = Vec::with_capacity(tcfg.steps as usize);
    for step in 1..=tcfg.steps {
        let samples = data.batch(seed, step, tcfg.batch_size)?;
        let batch = Batch::from_samples(&samples, cfg.bits_per_symbol, cfg.loss_mask)?;
        let loss = train_step(model, store, &batch, &opt, step, &mut sso)?;
        let report = StepReport {
            step,
            loss,
            lr: tcfg.lr,
            wallclock_s: start.elapsed().as_secs_f64(),
        };
        on_step(&report, store)?;
        reports.push(report);
    }
    Ok(reports)
}
