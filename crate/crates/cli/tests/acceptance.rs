//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Trained desk models are shared between criteria and cached under the
//! cargo target tmp dir for the lifetime of the test binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikerx::energy::{OpKind, E_AC_32, E_AC_8, E_ADD_32, E_MAC_32, E_MAC_8, E_MULT_32};
use spikerx::receiver::{aggregate_var, Batch, ForwardOptions, Model, ModelConfig, Recorder};
use spikerx::spiking::{lif_step, spike, NeuronConfig, NeuronState, SpikeMode, Surrogate, SurrogateKind};
use spikerx::training::{
    bce_var, evaluate, EvalOptions, EvalRecord, EvalScenario, Pool, QuantizerConfig, ScenarioSampler,
};
use spikerx_autodiff::{grad_check, AutodiffError, GradCheckOptions, ParamStore, Tape, Tensor};
use spikerx_cli::commands::{self, EvalArgs, ProfileArgs, ScenarioArgs, TrainRun};
use spikerx_cli::RunConfig;
use spikerx_phy::{
    apply_channel, interpolate_linear, interpolate_lmmse, ls_estimate, noise_variance, random_tti, run_baseline,
    substream, tdl_channel, ChannelSpec, CovarianceModel, LinkConfig, Profile, Receiver,
};

const SEEDS: [u64; 3] = [1, 2, 3];
const DESK_STEPS: u64 = 2000;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} [{verdict}] {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn work_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn desk_config(seed: u64, dir: PathBuf) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: dir,
        ..RunConfig::default()
    };
    cfg.train.steps = DESK_STEPS;
    cfg.train.log_every = 100;
    cfg.train.checkpoint_every = 1000;
    cfg.resolve(Some(seed)).unwrap()
}

struct Trained {
    cfg: RunConfig,
    run: TrainRun,
    secs: f64,
}

fn train_desk(name: &str, seed: u64, quantized: bool) -> Trained {
    let mut cfg = desk_config(seed, work_dir(name));
    if quantized {
        cfg.model.quantization = Some(QuantizerConfig { bits: 8 });
    }
    let start = Instant::now();
    let run = commands::train(&cfg, None).unwrap();
    Trained {
        cfg,
        run,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn desk(seed: u64) -> &'static Trained {
    static CELLS: [OnceLock<Trained>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let i = SEEDS.iter().position(|&s| s == seed).unwrap();
    CELLS[i].get_or_init(|| train_desk(&format!("desk-{seed}"), seed, false))
}

fn desk_qat() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| train_desk("desk-qat-1", SEEDS[0], true))
}

fn train_scenario(cfg: &RunConfig) -> EvalScenario {
    EvalScenario::Sampled {
        sampler: cfg.sampler.clone(),
        pool: Pool::Train,
    }
}

fn eval_model(
    model: &Model,
    store: &mut ParamStore<f32>,
    cfg: &RunConfig,
    scenario: &EvalScenario,
    snr: &[f64],
    trials: usize,
    baselines: Vec<Receiver>,
) -> Vec<EvalRecord> {
    let opts = EvalOptions {
        snr_db: snr.to_vec(),
        trials,
        batch: 16,
        seed: cfg.seed(),
        baselines,
        covariance: None,
    };
    evaluate(Some((model, store, "snn")), &cfg.link, scenario, &opts).unwrap()
}

fn load(t: &Trained) -> (Model, ParamStore<f32>) {
    spikerx::receiver::load_model(&t.run.checkpoint).unwrap()
}

fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

// 1 -------------------------------------------------------------------------

#[test]
fn c01_gradient_fidelity() {
    let start = Instant::now();
    let mut cfg = ModelConfig {
        blocks: 1,
        ..ModelConfig::default()
    };
    cfg.neuron.beta_learnable = true;
    let (model, store32) = Model::new(&cfg, &mut substream(5, "init")).unwrap();
    let mut store: ParamStore<f64> = store32.cast();

    let link = LinkConfig::default();
    let sampler = ScenarioSampler::default();
    let samples: Vec<_> = (0..2)
        .map(|i| {
            let mut rng = substream(5, &format!("gc/{i}"));
            sampler.sample(&link, Pool::Train, &mut rng).unwrap().sample(&link, &mut rng).unwrap()
        })
        .collect();
    let batch = Batch::<f64>::from_samples(&samples, cfg.bits_per_symbol, cfg.loss_mask).unwrap();
    let opts = ForwardOptions {
        spikes: SpikeMode::Relaxed,
        ..ForwardOptions::TRAIN
    };
    let wrap = |e: spikerx::SpikeRxError| AutodiffError::InvalidArgument {
        op: "receiver",
        reason: e.to_string(),
    };
    let gc = grad_check(
        &mut store,
        |tape, store| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let logits = model.forward(tape, store, &batch.input, opts, &mut rng, None).map_err(wrap)?;
            let p = aggregate_var(tape, &logits).map_err(wrap)?;
            bce_var(tape, p, &batch.labels, &batch.mask).map_err(wrap)
        },
        GradCheckOptions {
            step: 1e-5,
            max_probes: 6,
            seed: 1,
            floor: 1e-6,
        },
    )
    .unwrap();
    let fd_err = gc.max_rel_error();
    let worst = gc.params.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)).unwrap();

    // Heaviside node: the backward multiplier is the closed-form surrogate.
    let closed = |kind: SurrogateKind, s: &Surrogate, u: f64, theta: f64| -> f64 {
        let x = u - theta;
        match kind {
            SurrogateKind::Sigmoid => {
                let e = (theta - u).exp();
                if e.is_infinite() {
                    0.0
                } else {
                    e / ((e + 1.0) * (e + 1.0))
                }
            }
            SurrogateKind::FastSigmoid => 1.0 / (s.slope * x.abs() + 1.0).powi(2),
            SurrogateKind::SparseFastSigmoid => {
                if u < theta - s.sfs_gate {
                    0.0
                } else {
                    1.0 / (s.slope * x.abs() + 1.0).powi(2)
                }
            }
            SurrogateKind::Arctan => 1.0 / (1.0 + (s.arctan_slope * x).powi(2)),
            SurrogateKind::Lso => {
                if u > theta {
                    1.0
                } else {
                    s.lso_leak
                }
            }
            SurrogateKind::Sso => unreachable!(),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u_vals: Vec<f64> = (0..257).map(|_| rng.random_range(-3.0..4.0)).collect();
    let mut mismatches = 0usize;
    for kind in SurrogateKind::ALL {
        let mut ncfg = NeuronConfig {
            theta: 0.8,
            ..NeuronConfig::default()
        };
        ncfg.surrogate.kind = kind;
        let mut tape = Tape::<f64>::new();
        let u = tape.leaf(Tensor::new(vec![u_vals.len()], u_vals.clone()).unwrap());
        let mut mask_rng = ChaCha8Rng::seed_from_u64(4);
        let s = spike(&mut tape, u, &ncfg, SpikeMode::Heaviside, Some(&mut mask_rng)).unwrap();
        let loss = tape.sum(s);
        tape.backward(loss).unwrap();
        let g = tape.grad(u).unwrap().to_vec();
        let expected: Vec<f64> = if kind == SurrogateKind::Sso {
            let mut replay = ChaCha8Rng::seed_from_u64(4);
            ncfg.surrogate.sso_mask(u_vals.len(), &mut replay).into_iter().map(f64::from).collect()
        } else {
            u_vals.iter().map(|&v| closed(kind, &ncfg.surrogate, v, ncfg.theta)).collect()
        };
        mismatches += g.iter().zip(&expected).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = fd_err < 1e-4 && mismatches == 0 && secs < 60.0;
    report(
        1,
        "gradient fidelity",
        pass,
        &format!(
            "max FD rel err {fd_err:.2e} (worst {} analytic {:.6e} numeric {:.6e}), surrogate mismatches {mismatches}, {secs:.1}s",
            worst.name, worst.analytic, worst.numeric
        ),
    );
    assert!(pass);
}

// 2 -------------------------------------------------------------------------

#[test]
fn c02_lif_dynamics_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0usize;
    let mut spikes = 0usize;
    for _ in 0..1000 {
        let cfg = NeuronConfig {
            beta: rng.random_range(0.0..1.0),
            theta: rng.random_range(0.1..2.0),
            ..NeuronConfig::default()
        };
        let width = 4;
        let steps = 16;
        let inputs: Vec<Vec<f32>> = (0..steps)
            .map(|_| (0..width).map(|_| rng.random_range(-1.0f32..2.5)).collect())
            .collect();

        let mut state = NeuronState {
            u: Tensor::new(vec![width], vec![0.0f32; width]).unwrap(),
            s_prev: Tensor::new(vec![width], vec![0.0f32; width]).unwrap(),
        };
        let (beta, theta) = (cfg.beta as f32, cfg.theta as f32);
        let mut u = vec![0.0f32; width];
        let mut s = vec![0.0f32; width];
        for x in &inputs {
            let (next, out) = lif_step(&state, &Tensor::new(vec![width], x.clone()).unwrap(), &cfg).unwrap();
            for k in 0..width {
                u[k] = beta * u[k] + x[k] - s[k] * theta;
                s[k] = if u[k] > theta { 1.0 } else { 0.0 };
            }
            spikes += s.iter().filter(|&&v| v == 1.0).count();
            let same = |a: &[f32], b: &[f32]| a.iter().zip(b).all(|(p, q)| p.to_bits() == q.to_bits());
            if !same(next.u.data(), &u) || !same(out.data(), &s) {
                mismatches += 1;
            }
            state = next;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && spikes > 0;
    report(
        2,
        "LIF dynamics oracle",
        pass,
        &format!("1000 sequences x 16 steps, {mismatches} mismatching steps, {spikes} spikes, {secs:.2}s"),
    );
    assert!(pass);
}

// 3 -------------------------------------------------------------------------

#[test]
fn c03_phy_oracles() {
    let start = Instant::now();
    let awgn = ChannelSpec {
        profile: Profile::Awgn,
        delay_spread_s: 0.0,
        doppler_hz: 0.0,
    };
    let qpsk = LinkConfig {
        bits_per_symbol: 2,
        ..LinkConfig::default()
    };
    let per_slot = (qpsk.symbols - qpsk.dmrs_symbols.len()) * qpsk.subcarriers * 2;
    let trials = 100_000usize.div_ceil(per_slot);
    let recs = run_baseline(&qpsk, &awgn, &[Receiver::Pcsi], &[2.0, 6.0, 10.0], trials, 31, None).unwrap();
    let mut ok_a = true;
    let mut detail_a = Vec::new();
    for r in &recs {
        let p = q_function((2.0 * 10f64.powf(r.snr_db / 10.0)).sqrt());
        let sd = (p * (1.0 - p) / r.bits as f64).sqrt();
        let ok = r.bits >= 100_000 && (r.ber - p).abs() <= 3.0 * sd;
        ok_a &= ok;
        detail_a.push(format!("{} dB {:.3e}/{:.3e}", r.snr_db, r.ber, p));
    }

    // (b) noiseless LS is exact on the pilots
    let link2 = LinkConfig::default().with_dmrs(vec![3, 11]);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut worst_b = 0.0f64;
    for profile in [Profile::Flat, Profile::TdlLiteA, Profile::TdlLiteB, Profile::TdlLiteC] {
        let spec = ChannelSpec {
            profile,
            delay_spread_s: 250e-9,
            doppler_hz: 400.0,
        };
        let tti = random_tti(&link2, &mut rng).unwrap();
        let ch = tdl_channel(&link2, &spec, &mut rng).unwrap();
        let y = apply_channel(&tti.tx, &ch, 0.0, &mut rng).unwrap();
        let est = ls_estimate(&y, &tti.pilot, &link2.dmrs_symbols, 0.0).unwrap();
        for (pi, &m) in est.rows.iter().enumerate() {
            for n in 0..link2.subcarriers {
                worst_b = worst_b.max((est.get(pi, n, 0) - ch.h.get(m, n, 0)).norm());
            }
        }
    }
    let ok_b = worst_b < 1e-12;

    // (c) matched LMMSE interpolation beats LS + linear on 2-DMRS fading
    let spec = ChannelSpec {
        profile: Profile::TdlLiteA,
        delay_spread_s: 150e-9,
        doppler_hz: 300.0,
    };
    let cov = CovarianceModel::matched(&spec);
    let n0 = noise_variance(10.0, link2.bits_per_symbol);
    let (mut mse_ls, mut mse_lmmse) = (0.0, 0.0);
    for _ in 0..1000 {
        let tti = random_tti(&link2, &mut rng).unwrap();
        let ch = tdl_channel(&link2, &spec, &mut rng).unwrap();
        let y = apply_channel(&tti.tx, &ch, n0, &mut rng).unwrap();
        let pe = ls_estimate(&y, &tti.pilot, &link2.dmrs_symbols, n0).unwrap();
        let lin = interpolate_linear(&pe, link2.symbols);
        let wie = interpolate_lmmse(&pe, &cov, &link2).unwrap();
        for (i, h) in ch.h.data().iter().enumerate() {
            mse_ls += (lin.h.data()[i] - h).norm_sqr();
            mse_lmmse += (wie.h.data()[i] - h).norm_sqr();
        }
    }
    let ok_c = mse_lmmse < mse_ls;

    let secs = start.elapsed().as_secs_f64();
    let pass = ok_a && ok_b && ok_c && secs < 300.0;
    report(
        3,
        "PHY oracles",
        pass,
        &format!(
            "(a) {} [{}]; (b) max pilot error {worst_b:.1e}; (c) MSE lmmse {:.4e} < ls {:.4e}; {secs:.1}s",
            if ok_a { "ok" } else { "bad" },
            detail_a.join(", "),
            mse_lmmse / 1000.0,
            mse_ls / 1000.0
        ),
    );
    assert!(pass);
}

// 4 -------------------------------------------------------------------------

#[test]
fn c04_training_smoke() {
    let mut passes = 0;
    let mut lines = Vec::new();
    let mut minutes = 0.0;
    for seed in SEEDS {
        let t = desk(seed);
        minutes += t.secs / 60.0;
        let scenario = train_scenario(&t.cfg);
        let (model, mut untrained) = Model::new(&t.cfg.model, &mut substream(seed, "init")).unwrap();
        let before = eval_model(&model, &mut untrained, &t.cfg, &scenario, &[10.0], 64, vec![])[0].ber;
        let (model, mut store) = load(t);
        let after = eval_model(&model, &mut store, &t.cfg, &scenario, &[10.0], 64, vec![])[0].ber;
        let ok = after < 0.1 && after < 0.5 * before;
        passes += usize::from(ok);
        lines.push(format!("seed {seed}: {before:.4} -> {after:.4}{}", if ok { "" } else { " (miss)" }));
    }
    let pass = passes >= 2;
    report(
        4,
        "training smoke",
        pass,
        &format!(
            "BER@10dB untrained -> trained after {DESK_STEPS} steps: {}; {passes}/3 seeds; training {minutes:.1} min",
            lines.join("; ")
        ),
    );
    assert!(pass);
}

// 5 -------------------------------------------------------------------------

#[test]
fn c05_baseline_ordering() {
    let t = desk(SEEDS[0]);
    let args = ScenarioArgs {
        pool: Some(Pool::Train),
        doppler_hz: Some(500.0),
        dmrs: Some(1),
        ..ScenarioArgs::default()
    };
    let scenario = args.scenario(&t.cfg).unwrap();
    let (model, mut store) = load(t);
    let recs = eval_model(&model, &mut store, &t.cfg, &scenario, &[10.0], 64, vec![Receiver::Pcsi, Receiver::Ls]);
    let get = |name: &str| recs.iter().find(|r| r.receiver == name).unwrap();
    let (net, pcsi, ls) = (get("snn"), get("pcsi"), get("ls"));
    let sigma = |a: &EvalRecord, b: &EvalRecord| {
        (a.ber * (1.0 - a.ber) / a.bits as f64 + b.ber * (1.0 - b.ber) / b.bits as f64).sqrt()
    };
    let beats_ls = net.ber < ls.ber;
    let above_pcsi = pcsi.ber <= net.ber + 3.0 * sigma(pcsi, net);
    let pass = beats_ls && above_pcsi && net.bits >= 100_000;
    report(
        5,
        "baseline ordering",
        pass,
        &format!(
            "1 DMRS, 500 Hz, 10 dB, {} bits: pcsi {:.4} <= model {:.4} < ls {:.4}",
            net.bits, pcsi.ber, net.ber, ls.ber
        ),
    );
    assert!(pass);
}

// 6 -------------------------------------------------------------------------

#[test]
fn c06_energy_model() {
    let table_ok = E_MULT_32 == 3.7 && E_ADD_32 == 0.9 && E_MAC_32 == 4.6 && E_AC_32 == 0.9 && E_MAC_8 == 1.1 && E_AC_8 == 0.2;

    let t = desk(SEEDS[0]);
    let dir = work_dir("profile-1");
    let args = ProfileArgs {
        out_dir: Some(dir),
        ..ProfileArgs::default()
    };
    let rep = commands::profile(&t.cfg, &t.run.checkpoint, &args).unwrap();
    let table = spikerx::energy::EnergyTable::for_bits(rep.summary.bits).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for row in rep.snn.iter().filter(|r| r.op_kind == OpKind::Ac) {
        let ann = rep.ann.iter().find(|a| a.layer == row.layer).unwrap();
        let r_s = row.r_s.unwrap();
        let expected = ann.energy_pj * (table.e_ac / table.e_mac) * r_s;
        worst = worst.max((row.energy_pj - expected).abs() / expected.abs().max(f64::MIN_POSITIVE));
        checked += 1;
    }
    let identity_ok = checked > 0 && worst < 1e-12;
    let s = &rep.summary;
    let pass = table_ok && identity_ok && s.mean_r_s <= 0.35 && s.ann_over_snn >= 4.0;
    let per_layer: Vec<String> = s.activation_pct.iter().map(|(l, a)| format!("{l} {a:.1}%")).collect();
    report(
        6,
        "energy model",
        pass,
        &format!(
            "table {}, identity over {checked} layers max rel err {worst:.1e}, mean R_s {:.3}, ANN/SNN {:.2} ({})",
            if table_ok { "verbatim" } else { "WRONG" },
            s.mean_r_s,
            s.ann_over_snn,
            per_layer.join(", ")
        ),
    );
    assert!(pass);
}

// 7 -------------------------------------------------------------------------

#[test]
fn c07_qat_robustness() {
    let fp = desk(SEEDS[0]);
    let q = desk_qat();
    let scenario = train_scenario(&fp.cfg);
    let (m, mut s) = load(fp);
    let ber_fp = eval_model(&m, &mut s, &fp.cfg, &scenario, &[10.0], 64, vec![])[0].ber;
    let (m, mut s) = load(q);
    let ber_q = eval_model(&m, &mut s, &q.cfg, &scenario, &[10.0], 64, vec![])[0].ber;
    let pass = ber_q <= 1.3 * ber_fp;
    report(
        7,
        "QAT robustness",
        pass,
        &format!("BER@10dB 8-bit {ber_q:.4} vs full precision {ber_fp:.4} (ratio {:.3})", ber_q / ber_fp),
    );
    assert!(pass);
}

// 8 -------------------------------------------------------------------------

#[test]
fn c08_activation_trend() {
    let mut passes = 0;
    let mut lines = Vec::new();
    for seed in SEEDS {
        let t = desk(seed);
        let (m, mut s) = load(t);
        let recs = eval_model(&m, &mut s, &t.cfg, &train_scenario(&t.cfg), &[0.0, 14.0], 200, vec![]);
        let (a0, a14) = (recs[0].activation_pct.unwrap(), recs[1].activation_pct.unwrap());
        passes += usize::from(a14 > a0);
        lines.push(format!("seed {seed}: A(0 dB) {a0:.2}% A(14 dB) {a14:.2}%"));
    }
    let pass = passes >= 2;
    report(8, "activation trend", pass, &format!("{}; {passes}/3 seeds", lines.join("; ")));
    assert!(pass);
}

// 9 -------------------------------------------------------------------------

#[test]
fn c09_sew_identity_mapping() {
    let cfg = ModelConfig::default();
    let (model, mut store) = Model::new(&cfg, &mut substream(9, "init")).unwrap();
    for b in 0..cfg.blocks {
        model.zero_branch(&mut store, b).unwrap();
    }
    let link = LinkConfig::default();
    let sampler = ScenarioSampler::default();
    let samples: Vec<_> = (0..4)
        .map(|i| {
            let mut rng = substream(9, &format!("sew/{i}"));
            sampler.sample(&link, Pool::Train, &mut rng).unwrap().sample(&link, &mut rng).unwrap()
        })
        .collect();
    let batch = Batch::<f32>::from_samples(&samples, cfg.bits_per_symbol, cfg.loss_mask).unwrap();
    let rec = Recorder {
        keep_tensors: true,
        ..Recorder::default()
    };
    let rec = spikerx::energy::record_forward(&model, &mut store, &batch.input, rec).unwrap();
    let enc = &rec.layer("encoder.lif").unwrap().tensors;
    let active: usize = enc.iter().map(|t| t.data().iter().filter(|&&v| v != 0.0).count()).sum();
    let equal = (0..cfg.blocks).all(|b| &rec.layer(&format!("block{b}.out")).unwrap().tensors == enc);
    let pass = equal && active > 0;
    report(
        9,
        "SEW identity mapping",
        pass,
        &format!("{} zeroed ADD blocks, {active} encoder spikes reproduced exactly: {equal}", cfg.blocks),
    );
    assert!(pass);
}

// 10 ------------------------------------------------------------------------

fn strip_wallclock(text: &str) -> String {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let keep: Vec<usize> = (0..headers.len()).filter(|&i| &headers[i] != "wallclock").collect();
    let mut out = keep.iter().map(|&i| headers[i].to_string()).collect::<Vec<_>>().join(",");
    for rec in rdr.records() {
        let rec = rec.unwrap();
        out.push('\n');
        out.push_str(&keep.iter().map(|&i| rec[i].to_string()).collect::<Vec<_>>().join(","));
    }
    out
}

#[test]
fn c10_determinism() {
    let mut outputs = Vec::new();
    for run in 0..2 {
        let mut cfg = RunConfig {
            output_dir: work_dir(&format!("determinism-{run}")),
            ..RunConfig::default()
        };
        cfg.train.steps = 30;
        cfg.train.log_every = 1;
        cfg.train.checkpoint_every = 15;
        let cfg = cfg.resolve(Some(42)).unwrap();
        let trained = commands::train(&cfg, None).unwrap();
        let args = EvalArgs {
            snr_db: vec![0.0, 10.0, 20.0],
            trials: 8,
            batch: 4,
            scenario: ScenarioArgs::default(),
            out: None,
        };
        commands::eval(&cfg, &trained.checkpoint, &args, true).unwrap();
        let metrics = fs::read_to_string(cfg.output_dir.join("metrics.csv")).unwrap();
        let ber = fs::read(cfg.output_dir.join("ber.csv")).unwrap();
        outputs.push((strip_wallclock(&metrics), ber));
    }
    let metrics_equal = outputs[0].0 == outputs[1].0;
    let ber_equal = outputs[0].1 == outputs[1].1;
    let pass = metrics_equal && ber_equal;
    report(
        10,
        "determinism",
        pass,
        &format!("metrics.csv (wallclock stripped) identical: {metrics_equal}; ber.csv identical: {ber_equal}"),
    );
    assert!(pass);
}
