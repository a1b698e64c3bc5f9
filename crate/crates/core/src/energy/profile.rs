use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spikerx_autodiff::{ParamStore, Real, Tape, Tensor};

use super::flops::{flops_conv2d, flops_norm, snn_flops};
use super::table::EnergyTable;
use crate::error::{Result, SpikeRxError};
use crate::receiver::{BlockKind, ForwardOptions, MembraneProbe, Model, ModelConfig, NetworkKind, Recorder};

/// Sigmoid cost per output element.
pub const SIGMOID_FLOPS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Mac,
    Ac,
    /// Neuron layers carry spike statistics but no accounted operations.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Norm,
    Sigmoid,
    Spiking,
}

/// How SEW-ADD outputs of value 2 are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpikeCounting {
    /// One event per nonzero element.
    #[default]
    Events,
    /// The element value itself.
    Proportional,
}

/// One accounted layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub layer: String,
    pub kind: LayerKind,
    /// Dense operation count of one evaluation.
    pub flops_dense: f64,
    /// Dense evaluations per inference (time steps for real-valued layers).
    pub repeats: usize,
    /// Spikes per time step summed over the batch (spiking layers).
    pub spikes_per_step: Vec<f64>,
    /// Neurons summed over the batch (spiking layers).
    pub neuron_count: u64,
    pub op_kind: OpKind,
    /// Index of the spiking layer whose rate gates this layer.
    pub gate: Option<usize>,
}

/// `R_s = Σ_t N_s^t / N_n`.
pub fn spiking_rate(p: &LayerProfile) -> Result<f64> {
    if p.neuron_count == 0 {
        return Err(SpikeRxError::ZeroNeurons(p.layer.clone()));
    }
    Ok(p.spikes_per_step.iter().sum::<f64>() / p.neuron_count as f64)
}

/// `A = 100 a / (B T N)` in percent.
pub fn activation_probability(active: u64, batch: usize, timesteps: usize, neurons: usize) -> f64 {
    let total = (batch * timesteps * neurons) as f64;
    if total == 0.0 {
        0.0
    } else {
        100.0 * active as f64 / total
    }
}

/// Row of the energy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEnergy {
    pub layer: String,
    pub kind: LayerKind,
    pub dense_flops: f64,
    /// Rate of the gating layer for event-driven rows, own rate for spiking rows.
    pub r_s: Option<f64>,
    pub flops_effective: f64,
    pub op_kind: OpKind,
    pub energy_pj: f64,
}

/// Energy of every layer under `table`.
pub fn energy(profiles: &[LayerProfile], table: &EnergyTable) -> Result<Vec<LayerEnergy>> {
    profiles
        .iter()
        .map(|p| {
            let dense = p.flops_dense * p.repeats as f64;
            let (r_s, effective, e) = match p.op_kind {
                OpKind::Mac => (None, dense, table.e_mac),
                OpKind::Ac => {
                    let gate = p
                        .gate
                        .and_then(|g| profiles.get(g))
                        .ok_or_else(|| SpikeRxError::UnknownLayer(format!("gate of {}", p.layer)))?;
                    let r = spiking_rate(gate)?;
                    (Some(r), snn_flops(dense, r), table.e_ac)
                }
                OpKind::None => (spiking_rate(p).ok(), 0.0, 0.0),
            };
            Ok(LayerEnergy {
                layer: p.layer.clone(),
                kind: p.kind,
                dense_flops: dense,
                r_s,
                flops_effective: effective,
                op_kind: p.op_kind,
                energy_pj: effective * e,
            })
        })
        .collect()
}

struct Builder {
    rows: Vec<LayerProfile>,
}

impl Builder {
    fn push(&mut self, layer: String, kind: LayerKind, flops: u64, repeats: usize, op: OpKind, gate: Option<usize>) -> usize {
        self.rows.push(LayerProfile {
            layer,
            kind,
            flops_dense: flops as f64,
            repeats,
            spikes_per_step: Vec::new(),
            neuron_count: 0,
            op_kind: op,
            gate,
        });
        self.rows.len() - 1
    }

    fn spiking(&mut self, layer: String, rec: &Recorder, counting: SpikeCounting) -> Result<usize> {
        let r = rec
            .layer(&layer)
            .ok_or_else(|| SpikeRxError::UnknownLayer(layer.clone()))?;
        let spikes = match counting {
            SpikeCounting::Events => r.events.iter().map(|&e| e as f64).collect(),
            SpikeCounting::Proportional => r.values.clone(),
        };
        let i = self.push(layer, LayerKind::Spiking, 0, 0, OpKind::None, None);
        self.rows[i].spikes_per_step = spikes;
        self.rows[i].neuron_count = (r.neurons * r.batch) as u64;
        Ok(i)
    }

    /// An op on the output of `src`: event-driven if `src` is a spiking row.
    fn fed_by(&mut self, layer: String, kind: LayerKind, flops: u64, src: Option<usize>, repeats: usize) -> usize {
        match src {
            Some(g) => self.push(layer, kind, flops, 1, OpKind::Ac, Some(g)),
            None => self.push(layer, kind, flops, repeats, OpKind::Mac, None),
        }
    }
}

/// Layer list of `cfg` on an `M x N` grid.
///
/// Spiking networks need the recorder of a forward pass; the encoder
/// convolution is evaluated once because its input repeats over time.
pub fn profile_network(
    cfg: &ModelConfig,
    symbols: usize,
    subcarriers: usize,
    rec: Option<&Recorder>,
    counting: SpikeCounting,
) -> Result<Vec<LayerProfile>> {
    let (c, k, m, n) = (cfg.channels, cfg.kernel, symbols, subcarriers);
    let snn = cfg.network == NetworkKind::Snn;
    let t = if snn { cfg.timesteps } else { 1 };
    let rec = match (snn, rec) {
        (true, Some(r)) => Some(r),
        (true, None) => return Err(SpikeRxError::config("profiling a spiking network needs a recorded forward pass")),
        (false, _) => None,
    };
    let conv = flops_conv2d(k, 1, c, m, n, c);
    let norm = flops_norm(c, m, n);
    let mut b = Builder { rows: Vec::new() };
    b.push("encoder.conv".into(), LayerKind::Conv, flops_conv2d(k, 1, cfg.input_channels(), m, n, c), 1, OpKind::Mac, None);
    let mut src = match rec {
        Some(r) => Some(b.spiking("encoder.lif".into(), r, counting)?),
        None => None,
    };
    for blk in 0..cfg.blocks {
        let p = format!("block{blk}");
        match cfg.block_kind {
            BlockKind::Sew => {
                let r = rec.expect("sew blocks are spiking");
                let mut h = src;
                for i in 1..=2 {
                    b.fed_by(format!("{p}.conv{i}"), LayerKind::Conv, conv, h, t);
                    b.fed_by(format!("{p}.norm{i}"), LayerKind::Norm, norm, h, t);
                    h = Some(b.spiking(format!("{p}.lif{i}"), r, counting)?);
                }
                src = Some(b.spiking(format!("{p}.out"), r, counting)?);
            }
            BlockKind::Traditional => {
                let mut h = src;
                for i in 1..=2 {
                    b.fed_by(format!("{p}.norm{i}"), LayerKind::Norm, norm, h, t);
                    h = match rec {
                        Some(r) => Some(b.spiking(format!("{p}.lif{i}"), r, counting)?),
                        None => None,
                    };
                    b.fed_by(format!("{p}.conv{i}"), LayerKind::Conv, conv, h, t);
                    h = None;
                }
                src = None;
            }
        }
    }
    b.fed_by("readout.conv".into(), LayerKind::Conv, flops_conv2d(1, 1, c, m, n, cfg.bits_per_symbol), src, t);
    b.push(
        "readout.sigmoid".into(),
        LayerKind::Sigmoid,
        SIGMOID_FLOPS * (cfg.bits_per_symbol * m * n) as u64,
        t,
        OpKind::Mac,
        None,
    );
    Ok(b.rows)
}

/// Totals of a profiled network and its ReLU twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub params: usize,
    pub bits: u32,
    pub snn_flops: f64,
    pub snn_energy_pj: f64,
    pub ann_flops: f64,
    pub ann_energy_pj: f64,
    pub ann_over_snn: f64,
    pub mean_r_s: f64,
    pub activation_pct: Vec<(String, f64)>,
}

pub fn summarize(
    cfg: &ModelConfig,
    snn: &[LayerProfile],
    snn_rows: &[LayerEnergy],
    ann_rows: &[LayerEnergy],
    bits: u32,
) -> Result<EnergySummary> {
    let total = |rows: &[LayerEnergy]| {
        (
            rows.iter().map(|r| r.flops_effective).sum::<f64>(),
            rows.iter().map(|r| r.energy_pj).sum::<f64>(),
        )
    };
    let (sf, se) = total(snn_rows);
    let (af, ae) = total(ann_rows);
    let spiking: Vec<&LayerProfile> = snn.iter().filter(|p| p.kind == LayerKind::Spiking).collect();
    let rates = spiking.iter().map(|p| spiking_rate(p)).collect::<Result<Vec<_>>>()?;
    let mean_r_s = if rates.is_empty() { 0.0 } else { rates.iter().sum::<f64>() / rates.len() as f64 };
    let t = cfg.timesteps.max(1) as f64;
    let activation_pct = spiking
        .iter()
        .zip(&rates)
        .map(|(p, r)| (p.layer.clone(), 100.0 * r / t))
        .collect();
    Ok(EnergySummary {
        params: cfg.param_count(),
        bits,
        snn_flops: sf,
        snn_energy_pj: se,
        ann_flops: af,
        ann_energy_pj: ae,
        ann_over_snn: ae / se,
        mean_r_s,
        activation_pct,
    })
}

pub fn write_energy_csv<W: Write>(w: W, rows: &[LayerEnergy]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Runs one inference forward and records spike statistics.
pub fn record_forward<E: Real>(
    model: &Model,
    store: &mut ParamStore<E>,
    input: &Tensor<E>,
    mut recorder: Recorder,
) -> Result<Recorder> {
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    model.forward(&mut tape, store, input, ForwardOptions::INFER, &mut rng, Some(&mut recorder))?;
    Ok(recorder)
}

/// Membrane potential of `neurons` in `layer` after every time step.
pub fn probe_membrane<E: Real>(
    model: &Model,
    store: &mut ParamStore<E>,
    input: &Tensor<E>,
    layer: &str,
    neurons: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let rec = Recorder {
        probe: Some(MembraneProbe {
            layer: layer.to_string(),
            neurons: neurons.to_vec(),
            traces: Vec::new(),
        }),
        ..Recorder::default()
    };
    let rec = record_forward(model, store, input, rec)?;
    Ok(rec.probe.map(|p| p.traces).unwrap_or_default())
}
