//! Operator surface for the spiking receiver: configuration, dataset
//! generation, training, BER sweeps, energy profiling, ablations and
//! plot-ready exports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
mod error;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use spikerx::energy::SpikeCounting;
use spikerx::training::Pool;
use spikerx_phy::{Profile, Receiver};

use commands::{AblateArgs, Axis, EvalArgs, GenDatasetArgs, ProfileArgs, ScenarioArgs};
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "spikerx", version, about = "Spiking neural receiver toolkit")]
#[command(after_help = "Any config field can be overridden with --section.key VALUE, e.g. --model.channels 16.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (falls back to the config, then SPIKERX_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory (overrides output_dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Sweep {
    /// SNR points in dB: lo:hi:step or a comma list.
    #[arg(long, default_value = "0:20:2")]
    snr: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Slots per network forward.
    #[arg(long, default_value_t = 16)]
    batch: usize,
    /// Profile pool: train or test.
    #[arg(long, value_parser = parse_pool)]
    pool: Option<Pool>,
    /// Fix the channel profile.
    #[arg(long, value_parser = parse_profile)]
    profile: Option<Profile>,
    /// Fix the maximum Doppler shift in Hz.
    #[arg(long)]
    doppler: Option<f64>,
    /// Fix the RMS delay spread in ns.
    #[arg(long)]
    delay_spread_ns: Option<f64>,
    /// Fix the number of DMRS symbols (1 or 2).
    #[arg(long)]
    dmrs: Option<usize>,
    /// LMMSE statistics averaged over the sampled delay-spread and Doppler
    /// ranges instead of matched to each slot.
    #[arg(long)]
    averaged_lmmse: bool,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a receiver and write config.json, metrics.csv and checkpoints.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<u64>,
        /// Train on a fixed dataset file instead of online samples.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// BER sweep of a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        sweep: Sweep,
        /// Add pcsi, ls and lmmse rows on the same slots.
        #[arg(long)]
        with_baselines: bool,
    },
    /// BER sweep of the classical receivers.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, value_delimiter = ',', default_value = "pcsi,ls,lmmse")]
        receivers: Vec<Receiver>,
    },
    /// Spike rates, FLOPs and energy of a checkpoint and its ReLU twin.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        /// Arithmetic width for the energy table.
        #[arg(long)]
        bits: Option<u32>,
        /// Count spike values instead of nonzero events.
        #[arg(long)]
        proportional: bool,
    },
    /// Train and evaluate one variant per value of an axis.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// neuron, surrogate, sew_op, timesteps or block_kind.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Merge run metrics into a long CSV (figure, x, y, series).
    Plotdata {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write sampled slots to a binary dataset file.
    GenDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: usize,
        #[arg(long, value_parser = parse_pool, default_value = "train")]
        pool: Pool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pool(s: &str) -> std::result::Result<Pool, String> {
    match s {
        "train" => Ok(Pool::Train),
        "test" => Ok(Pool::Test),
        _ => Err(format!("unknown pool `{s}` (train, test)")),
    }
}

fn parse_profile(s: &str) -> std::result::Result<Profile, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

impl Sweep {
    fn args(self) -> Result<EvalArgs> {
        Ok(EvalArgs {
            snr_db: commands::parse_snr(&self.snr)?,
            trials: self.trials,
            batch: self.batch,
            scenario: ScenarioArgs {
                pool: self.pool,
                profile: self.profile,
                doppler_hz: self.doppler,
                delay_spread_ns: self.delay_spread_ns,
                dmrs: self.dmrs,
                averaged_lmmse: self.averaged_lmmse,
            },
            out: self.out,
        })
    }
}

fn resolve(
    common: &Common,
    fallback: Option<&Path>,
    overrides: &[(String, String)],
    patch: impl FnOnce(&mut RunConfig),
) -> Result<RunConfig> {
    let path = common.config.as_deref().or(fallback);
    let mut cfg = config::load(path, overrides)?;
    if let Some(dir) = &common.out_dir {
        cfg.output_dir = dir.clone();
    }
    patch(&mut cfg);
    cfg.resolve(common.seed)
}

/// The run's own config.json when the checkpoint sits in a run directory.
fn sibling_config(checkpoint: &Path) -> Option<PathBuf> {
    let mut dir = checkpoint.parent()?;
    if dir.file_name().is_some_and(|n| n == "checkpoints") {
        dir = dir.parent()?;
    }
    let p = dir.join("config.json");
    p.is_file().then_some(p)
}

fn dispatch(command: Command, overrides: &[(String, String)]) -> Result<()> {
    match command {
        Command::Train { common, steps, dataset } => {
            let cfg = resolve(&common, None, overrides, |c| {
                if let Some(s) = steps {
                    c.train.steps = s;
                }
            })?;
            let run = commands::train(&cfg, dataset.as_deref())?;
            println!(
                "trained {} steps, final loss {:.4}, checkpoint {}",
                cfg.train.steps,
                run.final_loss,
                run.checkpoint.display()
            );
        }
        Command::Eval {
            common,
            checkpoint,
            sweep,
            with_baselines,
        } => {
            let fallback = sibling_config(&checkpoint);
            let cfg = resolve(&common, fallback.as_deref(), overrides, |_| {})?;
            for r in commands::eval(&cfg, &checkpoint, &sweep.args()?, with_baselines)? {
                println!("{:>6.2} dB  {:<6} ber {:.5}", r.snr_db, r.receiver, r.ber);
            }
        }
        Command::Baseline { common, sweep, receivers } => {
            let cfg = resolve(&common, None, overrides, |_| {})?;
            for r in commands::baseline(&cfg, &receivers, &sweep.args()?)? {
                println!("{:>6.2} dB  {:<6} ber {:.5}", r.snr_db, r.receiver, r.ber);
            }
        }
        Command::Profile {
            common,
            checkpoint,
            batch,
            bits,
            proportional,
        } => {
            let fallback = sibling_config(&checkpoint);
            let cfg = resolve(&common, fallback.as_deref(), overrides, |_| {})?;
            let args = ProfileArgs {
                batch,
                bits,
                counting: if proportional { SpikeCounting::Proportional } else { SpikeCounting::Events },
                out_dir: common.out_dir.clone(),
            };
            let s = commands::profile(&cfg, &checkpoint, &args)?.summary;
            println!(
                "params {}  mean R_s {:.4}  SNN {:.4e} pJ  ANN {:.4e} pJ  ANN/SNN {:.3}",
                s.params, s.mean_r_s, s.snn_energy_pj, s.ann_energy_pj, s.ann_over_snn
            );
        }
        Command::Ablate {
            common,
            axis,
            values,
            sweep,
        } => {
            let axis: Axis = axis.parse()?;
            let cfg = resolve(&common, None, overrides, |_| {})?;
            let args = AblateArgs {
                axis,
                values,
                eval: sweep.args()?,
            };
            for r in commands::ablate(&cfg, &args)? {
                println!("{:<20} {:>6.2} dB  ber {:.5}", r.variant, r.snr_db, r.ber);
            }
        }
        Command::Plotdata { runs, out } => {
            let rows = commands::plotdata(&runs, &out)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::GenDataset { common, count, pool, out } => {
            let cfg = resolve(&common, None, overrides, |_| {})?;
            let n = commands::gen_dataset(&cfg, &GenDatasetArgs { count, pool, out: out.clone() })?;
            println!("{n} samples written to {}", out.display());
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let (rest, overrides) = match config::split_overrides(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command, &overrides) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
