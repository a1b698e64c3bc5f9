use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, noise_variance, tdl_channel, ChannelRealization, ChannelSpec};
use crate::config::LinkConfig;
use crate::equalize::{lmmse_equalize, Equalized};
use crate::error::{PhyError, Result};
use crate::estimate::{
    interpolate_linear, interpolate_lmmse, ls_estimate, ChannelEstimate, CovarianceModel,
};
use crate::grid::Grid;
use crate::qam::{demap_llr, Constellation};
use crate::seed::trial_rng;
use crate::tti::{random_tti, Tti};

/// Classical receiver chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    /// Genie channel and noise variance.
    Pcsi,
    /// LS on DMRS with linear time interpolation.
    Ls,
    /// LS on DMRS with Wiener interpolation.
    Lmmse,
}

impl Receiver {
    pub const ALL: [Receiver; 3] = [Receiver::Pcsi, Receiver::Ls, Receiver::Lmmse];

    pub fn name(self) -> &'static str {
        match self {
            Receiver::Pcsi => "pcsi",
            Receiver::Ls => "ls",
            Receiver::Lmmse => "lmmse",
        }
    }
}

impl FromStr for Receiver {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pcsi" => Ok(Receiver::Pcsi),
            "ls" => Ok(Receiver::Ls),
            "lmmse" => Ok(Receiver::Lmmse),
            _ => Err(format!("unknown receiver `{s}` (pcsi, ls, lmmse)")),
        }
    }
}

/// Everything one Monte-Carlo slot produces.
#[derive(Debug, Clone)]
pub struct Trial {
    pub link: LinkConfig,
    pub spec: ChannelSpec,
    pub tti: Tti,
    pub channel: ChannelRealization,
    pub rx: Grid,
    pub n0: f64,
}

/// Draws payload, DMRS, fading and noise, in that order, from `rng`.
pub fn simulate_trial<R: Rng + ?Sized>(
    link: &LinkConfig,
    spec: &ChannelSpec,
    ebn0_db: f64,
    rng: &mut R,
) -> Result<Trial> {
    let tti = random_tti(link, rng)?;
    let channel = tdl_channel(link, spec, rng)?;
    let n0 = noise_variance(ebn0_db, link.bits_per_symbol);
    let rx = apply_channel(&tti.tx, &channel, n0, rng)?;
    Ok(Trial {
        link: link.clone(),
        spec: *spec,
        tti,
        channel,
        rx,
        n0,
    })
}

/// Per-bit LLRs of the data payload, in transmission order.
pub fn receive(receiver: Receiver, trial: &Trial, cov: Option<&CovarianceModel>) -> Result<Vec<f64>> {
    let link = &trial.link;
    let est = match receiver {
        Receiver::Pcsi => ChannelEstimate {
            h: trial.channel.h.clone(),
            err_var: vec![0.0; trial.channel.h.data().len()],
        },
        Receiver::Ls | Receiver::Lmmse => {
            let pe = ls_estimate(&trial.rx, &trial.tti.pilot, &link.dmrs_symbols, trial.n0)?;
            if receiver == Receiver::Ls {
                interpolate_linear(&pe, link.symbols)
            } else {
                let matched = CovarianceModel::matched(&trial.spec);
                interpolate_lmmse(&pe, cov.unwrap_or(&matched), link)?
            }
        }
    };
    let eq = lmmse_equalize(&trial.rx, &est, trial.n0, &link.data_symbols())?;
    llrs(&eq, link.bits_per_symbol)
}

fn llrs(eq: &Equalized, bits: usize) -> Result<Vec<f64>> {
    let c = Constellation::new(bits)?;
    let mut out = vec![0.0; eq.len() * bits];
    for (i, chunk) in out.chunks_exact_mut(bits).enumerate() {
        let (x, nu2) = eq.unbiased(i);
        demap_llr(x, nu2, &c, chunk);
    }
    Ok(out)
}

/// Hard decisions `llr > 0` compared against `bits`.
pub fn count_bit_errors(llrs: &[f64], bits: &[u8]) -> u64 {
    llrs.iter()
        .zip(bits)
        .filter(|(&l, &b)| (l > 0.0) != (b == 1))
        .count() as u64
}

/// One row of a BER sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub receiver: String,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub seed: u64,
}

impl BerRecord {
    pub fn new(snr_db: f64, receiver: impl Into<String>, bits: u64, errors: u64, seed: u64) -> Self {
        BerRecord {
            snr_db,
            receiver: receiver.into(),
            bits,
            errors,
            ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
            seed,
        }
    }
}

/// Uncoded BER of classical receivers over `trials` slots per Eb/N0 point.
///
/// Trial `t` at SNR index `i` uses [`trial_rng`]`(seed, i, t)`, so every
/// receiver sees the same realizations and results do not depend on
/// evaluation order.
pub fn run_baseline(
    link: &LinkConfig,
    spec: &ChannelSpec,
    receivers: &[Receiver],
    ebn0_db: &[f64],
    trials: usize,
    seed: u64,
    cov: Option<&CovarianceModel>,
) -> Result<Vec<BerRecord>> {
    if trials == 0 {
        return Err(PhyError::NoTrials);
    }
    link.validate()?;
    let mut out = Vec::new();
    for (si, &snr) in ebn0_db.iter().enumerate() {
        let mut errors = vec![0u64; receivers.len()];
        let mut bits = 0u64;
        for t in 0..trials {
            let mut rng = trial_rng(seed, si, t);
            let trial = simulate_trial(link, spec, snr, &mut rng)?;
            let payload = trial.tti.payload(link.bits_per_symbol);
            bits += payload.len() as u64;
            for (k, &rcv) in receivers.iter().enumerate() {
                errors[k] += count_bit_errors(&receive(rcv, &trial, cov)?, &payload);
            }
        }
        for (k, &rcv) in receivers.iter().enumerate() {
            out.push(BerRecord::new(snr, rcv.name(), bits, errors[k], seed));
        }
    }
    Ok(out)
}

pub fn write_ber_csv<W: Write>(w: W, records: &[BerRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_ber_csv<R: Read>(r: R) -> Result<Vec<BerRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}
