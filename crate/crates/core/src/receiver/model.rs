use rand::{Rng, RngCore};
use spikerx_autodiff::{BatchNormStats, NormMode, ParamId, ParamStore, Real, Tape, Tensor, Var};

use super::config::{BlockKind, ModelConfig, NetworkKind};
use crate::error::{Result, SpikeRxError};
use crate::spiking::{membrane, sew_combine_var, spike, MembraneInputs, NeuronVariant, SpikeMode};
use crate::training::quantize_var;

#[derive(Debug, Clone, Copy)]
struct ConvIds {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct NormIds {
    gamma: ParamId,
    beta: ParamId,
    mean: ParamId,
    var: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct LifIds {
    beta: Option<ParamId>,
    v: Option<ParamId>,
}

#[derive(Debug, Clone)]
struct BlockIds {
    conv: [ConvIds; 2],
    norm: [NormIds; 2],
    lif: [LifIds; 2],
}

/// Forward-pass switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardOptions {
    pub norm: NormMode,
    /// [`SpikeMode::Relaxed`] also lets gradient through the reset term.
    pub spikes: SpikeMode,
}

impl ForwardOptions {
    pub const TRAIN: ForwardOptions = ForwardOptions {
        norm: NormMode::Train,
        spikes: SpikeMode::Heaviside,
    };
    pub const INFER: ForwardOptions = ForwardOptions {
        norm: NormMode::Infer,
        spikes: SpikeMode::Heaviside,
    };
}

/// Per-step activity of one spiking layer, summed over the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    pub layer: String,
    /// Neurons per sample (`C M N`).
    pub neurons: usize,
    pub batch: usize,
    /// Elements with a nonzero output, per time step.
    pub events: Vec<u64>,
    /// Sum of output values per time step (exceeds `events` after ADD).
    pub values: Vec<f64>,
    /// Full outputs per time step when [`Recorder::keep_tensors`] is set.
    pub tensors: Vec<Tensor<f32>>,
}

/// Membrane-potential traces of selected neurons in one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneProbe {
    pub layer: String,
    /// Flat indices into the `[B, C, M, N]` state.
    pub neurons: Vec<usize>,
    /// `traces[i][t]` is the potential of `neurons[i]` after step `t`.
    pub traces: Vec<Vec<f64>>,
}

/// Passive observer of a forward pass.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub keep_tensors: bool,
    pub probe: Option<MembraneProbe>,
    pub layers: Vec<SpikeRecord>,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layer(&self, name: &str) -> Option<&SpikeRecord> {
        self.layers.iter().find(|l| l.layer == name)
    }

    fn record<E: Real>(&mut self, layer: &str, t: usize, value: &Tensor<E>) {
        let shape = value.shape();
        let idx = match self.layers.iter().position(|l| l.layer == layer) {
            Some(i) => i,
            None => {
                self.layers.push(SpikeRecord {
                    layer: layer.to_string(),
                    neurons: shape[1..].iter().product(),
                    batch: shape[0],
                    events: Vec::new(),
                    values: Vec::new(),
                    tensors: Vec::new(),
                });
                self.layers.len() - 1
            }
        };
        let rec = &mut self.layers[idx];
        if rec.events.len() <= t {
            rec.events.resize(t + 1, 0);
            rec.values.resize(t + 1, 0.0);
        }
        rec.events[t] += value.data().iter().filter(|v| **v != E::zero()).count() as u64;
        rec.values[t] += value.sum_f64();
        if self.keep_tensors {
            rec.tensors.push(value.cast());
        }
    }

    fn record_membrane<E: Real>(&mut self, layer: &str, u: &Tensor<E>) {
        if let Some(p) = self.probe.as_mut().filter(|p| p.layer == layer) {
            if p.traces.len() != p.neurons.len() {
                p.traces = vec![Vec::new(); p.neurons.len()];
            }
            for (trace, &i) in p.traces.iter_mut().zip(&p.neurons) {
                trace.push(u.data()[i].as_f64());
            }
        }
    }
}

/// Parameter layout of a receiver network; the weights live in a
/// [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
    encoder: ConvIds,
    encoder_lif: LifIds,
    blocks: Vec<BlockIds>,
    readout: ConvIds,
}

fn kaiming<R: Rng + ?Sized>(shape: [usize; 4], rng: &mut R) -> Tensor<f32> {
    let fan_in = (shape[1] * shape[2] * shape[3]) as f64;
    let bound = (6.0 / fan_in).sqrt();
    Tensor::from_fn(shape, |_| rng.random_range(-bound..bound) as f32)
}

fn bias<R: Rng + ?Sized>(c: usize, fan_in: usize, rng: &mut R) -> Tensor<f32> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Tensor::from_fn([c], |_| rng.random_range(-bound..bound) as f32)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Lif {
    name: String,
    beta: Var,
    v: Option<Var>,
    u: Option<Var>,
    s: Option<Var>,
}

/// Tape handles and mutable state of one forward pass.
struct Pass<'a, E: Real, R: RngCore + ?Sized> {
    tape: &'a mut Tape<E>,
    store: &'a mut ParamStore<E>,
    opts: ForwardOptions,
    rng: &'a mut R,
    recorder: Option<&'a mut Recorder>,
}

impl<E: Real, R: RngCore + ?Sized> Pass<'_, E, R> {
    fn check(&self, v: Var, layer: &str) -> Result<()> {
        if self.tape.value(v).is_finite() {
            Ok(())
        } else {
            Err(SpikeRxError::NonFiniteActivation {
                layer: layer.to_string(),
            })
        }
    }

    fn norm(&mut self, x: Var, ids: NormIds, gamma: Var, beta: Var) -> Result<Var> {
        let (mean, var) = self.store.pair_mut(ids.mean, ids.var);
        let mut stats = BatchNormStats {
            mean: mean.tensor.data_mut(),
            var: var.tensor.data_mut(),
        };
        Ok(self.tape.batch_norm(x, gamma, beta, &mut stats, self.opts.norm)?)
    }

    fn lif(&mut self, lif: &mut Lif, current: Var, t: usize, cfg: &ModelConfig) -> Result<Var> {
        let mut current = current;
        if let (Some(s), Some(v)) = (lif.s, lif.v) {
            let fb = match cfg.neuron.variant {
                NeuronVariant::RleakyAll2all => self.tape.conv2d(s, v, None)?,
                _ => self.tape.channel_mul(s, v)?,
            };
            current = self.tape.add(current, fb)?;
        }
        let u_prev = match lif.u {
            Some(u) => u,
            None => {
                let shape = self.tape.shape(current).to_vec();
                self.tape.constant(Tensor::zeros(shape))
            }
        };
        let relaxed = self.opts.spikes == SpikeMode::Relaxed;
        let u = membrane(
            self.tape,
            MembraneInputs {
                u_prev,
                current,
                beta: lif.beta,
                s_prev: lif.s,
            },
            &cfg.neuron,
            !relaxed,
        )?;
        self.check(u, &lif.name)?;
        let s = spike(self.tape, u, &cfg.neuron, self.opts.spikes, Some(&mut *self.rng))?;
        if let Some(rec) = self.recorder.as_deref_mut() {
            rec.record_membrane(&lif.name, self.tape.value(u));
            rec.record(&lif.name, t, self.tape.value(s));
        }
        lif.u = Some(u);
        lif.s = Some(s);
        Ok(s)
    }
}

struct ConvVars {
    weight: Var,
    bias: Var,
}

struct BlockVars {
    conv: [ConvVars; 2],
    norm: [(Var, Var); 2],
}

impl Model {
    /// Allocates and initializes every parameter.
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<(Model, ParamStore<f32>)> {
        cfg.validate()?;
        let mut store = ParamStore::new();
        let (c, k) = (cfg.channels, cfg.kernel);
        let cin = cfg.input_channels();
        let conv = |store: &mut ParamStore<f32>, rng: &mut R, name: &str, co: usize, ci: usize, k: usize| {
            ConvIds {
                weight: store.add(format!("{name}.weight"), kaiming([co, ci, k, k], rng), true),
                bias: store.add(format!("{name}.bias"), bias(co, ci * k * k, rng), true),
            }
        };
        let norm = |store: &mut ParamStore<f32>, name: &str| NormIds {
            gamma: store.add(format!("{name}.gamma"), Tensor::full([c], 1.0), true),
            beta: store.add(format!("{name}.beta"), Tensor::zeros([c]), true),
            mean: store.add(format!("{name}.running_mean"), Tensor::zeros([c]), false),
            var: store.add(format!("{name}.running_var"), Tensor::full([c], 1.0), false),
        };
        let lif = |store: &mut ParamStore<f32>, name: &str| {
            if cfg.network == NetworkKind::Ann {
                return LifIds { beta: None, v: None };
            }
            let beta = cfg.neuron.beta_learnable.then(|| {
                let raw = logit(cfg.neuron.effective_beta()) as f32;
                store.add(format!("{name}.beta_raw"), Tensor::full([1], raw), true)
            });
            let v = match cfg.neuron.variant {
                NeuronVariant::RleakyOne2one => Some(Tensor::zeros([c])),
                NeuronVariant::RleakyAll2all => Some(Tensor::zeros([c, c, k, k])),
                _ => None,
            }
            .map(|t| store.add(format!("{name}.recurrent"), t, true));
            LifIds { beta, v }
        };
        let encoder = conv(&mut store, rng, "encoder", c, cin, k);
        let encoder_lif = lif(&mut store, "encoder.lif");
        let mut blocks = Vec::with_capacity(cfg.blocks);
        for b in 0..cfg.blocks {
            let p = format!("block{b}");
            let conv1 = conv(&mut store, rng, &format!("{p}.conv1"), c, c, k);
            let norm1 = norm(&mut store, &format!("{p}.norm1"));
            let lif1 = lif(&mut store, &format!("{p}.lif1"));
            let conv2 = conv(&mut store, rng, &format!("{p}.conv2"), c, c, k);
            let norm2 = norm(&mut store, &format!("{p}.norm2"));
            let lif2 = lif(&mut store, &format!("{p}.lif2"));
            blocks.push(BlockIds {
                conv: [conv1, conv2],
                norm: [norm1, norm2],
                lif: [lif1, lif2],
            });
        }
        let readout = conv(&mut store, rng, "readout", cfg.bits_per_symbol, c, 1);
        let model = Model {
            cfg: cfg.clone(),
            encoder,
            encoder_lif,
            blocks,
            readout,
        };
        Ok((model, store))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Names of the spiking layers in forward order.
    pub fn lif_layer_names(&self) -> Vec<String> {
        if self.cfg.network == NetworkKind::Ann {
            return Vec::new();
        }
        let mut names = vec!["encoder.lif".to_string()];
        for b in 0..self.cfg.blocks {
            names.push(format!("block{b}.lif1"));
            names.push(format!("block{b}.lif2"));
        }
        names
    }

    /// Zeroes the convolutions and normalization affine terms inside block `b`.
    pub fn zero_branch<E: Real>(&self, store: &mut ParamStore<E>, b: usize) -> Result<()> {
        let block = self
            .blocks
            .get(b)
            .ok_or_else(|| SpikeRxError::UnknownLayer(format!("block{b}")))?;
        for id in block
            .conv
            .iter()
            .flat_map(|c| [c.weight, c.bias])
            .chain(block.norm.iter().flat_map(|n| [n.gamma, n.beta]))
        {
            store.get_mut(id).tensor.data_mut().fill(E::zero());
        }
        Ok(())
    }

    fn conv_vars<E: Real>(&self, tape: &mut Tape<E>, store: &ParamStore<E>, ids: ConvIds) -> Result<ConvVars> {
        let mut weight = tape.param(store, ids.weight);
        if let Some(q) = &self.cfg.quantization {
            weight = quantize_var(tape, weight, q)?;
        }
        Ok(ConvVars {
            weight,
            bias: tape.param(store, ids.bias),
        })
    }

    fn lif_state<E: Real>(&self, tape: &mut Tape<E>, store: &ParamStore<E>, ids: LifIds, name: String) -> Lif {
        let beta = match ids.beta {
            Some(id) => {
                let raw = tape.param(store, id);
                tape.sigmoid(raw)
            }
            None => tape.constant(Tensor::full([1], E::from_f64(self.cfg.neuron.effective_beta()))),
        };
        Lif {
            name,
            beta,
            v: ids.v.map(|id| tape.param(store, id)),
            u: None,
            s: None,
        }
    }

    /// Runs all time steps on `input` (`[B, 2(N_R+1), M, N]`) and returns the
    /// readout logits `[B, B_t, M, N]` of every step.
    ///
    /// Neuron state starts from zero. `rng` feeds stochastic surrogates only.
    pub fn forward<E: Real, R: RngCore + ?Sized>(
        &self,
        tape: &mut Tape<E>,
        store: &mut ParamStore<E>,
        input: &Tensor<E>,
        opts: ForwardOptions,
        rng: &mut R,
        recorder: Option<&mut Recorder>,
    ) -> Result<Vec<Var>> {
        let cfg = &self.cfg;
        let want = cfg.input_channels();
        if input.shape().len() != 4 || input.shape()[1] != want {
            return Err(SpikeRxError::Shape {
                what: "network input",
                expected: vec![input.shape().first().copied().unwrap_or(0), want],
                got: input.shape().to_vec(),
            });
        }
        if let Some(p) = recorder.as_ref().and_then(|r| r.probe.as_ref()) {
            if !self.lif_layer_names().contains(&p.layer) {
                return Err(SpikeRxError::UnknownLayer(p.layer.clone()));
            }
            let n = input.shape()[0] * cfg.channels * input.shape()[2] * input.shape()[3];
            if let Some(&i) = p.neurons.iter().find(|&&i| i >= n) {
                return Err(SpikeRxError::UnknownLayer(format!("{}[{i}]", p.layer)));
            }
        }
        let enc = self.conv_vars(tape, store, self.encoder)?;
        let blocks: Vec<BlockVars> = self
            .blocks
            .iter()
            .map(|b| {
                Ok(BlockVars {
                    conv: [self.conv_vars(tape, store, b.conv[0])?, self.conv_vars(tape, store, b.conv[1])?],
                    norm: [0, 1].map(|i| (tape.param(store, b.norm[i].gamma), tape.param(store, b.norm[i].beta))),
                })
            })
            .collect::<Result<_>>()?;
        let ro = self.conv_vars(tape, store, self.readout)?;
        let snn = cfg.network == NetworkKind::Snn;
        let mut enc_lif = self.lif_state(tape, store, self.encoder_lif, "encoder.lif".into());
        let mut block_lifs: Vec<[Lif; 2]> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, ids)| {
                [
                    self.lif_state(tape, store, ids.lif[0], format!("block{b}.lif1")),
                    self.lif_state(tape, store, ids.lif[1], format!("block{b}.lif2")),
                ]
            })
            .collect();

        let mut pass = Pass {
            tape,
            store,
            opts,
            rng,
            recorder,
        };
        let x_in = pass.tape.constant(input.clone());
        let encoded = pass.tape.conv2d(x_in, enc.weight, Some(enc.bias))?;
        pass.check(encoded, "encoder")?;
        let timesteps = if snn { cfg.timesteps } else { 1 };
        let mut logits = Vec::with_capacity(timesteps);
        for t in 0..timesteps {
            let mut x = if snn {
                pass.lif(&mut enc_lif, encoded, t, cfg)?
            } else {
                pass.tape.relu(encoded)
            };
            for (b, (vars, lifs)) in blocks.iter().zip(block_lifs.iter_mut()).enumerate() {
                let ids = &self.blocks[b];
                x = match cfg.block_kind {
                    BlockKind::Sew => {
                        let mut h = x;
                        for i in 0..2 {
                            let c = pass.tape.conv2d(h, vars.conv[i].weight, Some(vars.conv[i].bias))?;
                            let n = pass.norm(c, ids.norm[i], vars.norm[i].0, vars.norm[i].1)?;
                            pass.check(n, &format!("block{b}.norm{}", i + 1))?;
                            h = pass.lif(&mut lifs[i], n, t, cfg)?;
                        }
                        let g = sew_combine_var(pass.tape, x, h, cfg.sew_op)?;
                        if let Some(rec) = pass.recorder.as_deref_mut() {
                            rec.record(&format!("block{b}.out"), t, pass.tape.value(g));
                        }
                        g
                    }
                    BlockKind::Traditional => {
                        let mut h = x;
                        for i in 0..2 {
                            let n = pass.norm(h, ids.norm[i], vars.norm[i].0, vars.norm[i].1)?;
                            pass.check(n, &format!("block{b}.norm{}", i + 1))?;
                            let a = if snn {
                                pass.lif(&mut lifs[i], n, t, cfg)?
                            } else {
                                pass.tape.relu(n)
                            };
                            h = pass.tape.conv2d(a, vars.conv[i].weight, Some(vars.conv[i].bias))?;
                        }
                        let out = pass.tape.add(x, h)?;
                        pass.check(out, &format!("block{b}"))?;
                        out
                    }
                };
            }
            let l = pass.tape.conv2d(x, ro.weight, Some(ro.bias))?;
            pass.check(l, "readout")?;
            logits.push(l);
        }
        Ok(logits)
    }
}
