use std::fs;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spikerx::receiver::BlockKind;
use spikerx::spiking::{NeuronVariant, SewOp, SurrogateKind};

use super::eval::{eval, EvalArgs};
use super::train::train;
use super::write_csv;
use crate::config::{apply_override, from_value, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Neuron,
    Surrogate,
    SewOp,
    Timesteps,
    BlockKind,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "neuron" => Axis::Neuron,
            "surrogate" => Axis::Surrogate,
            "sew_op" => Axis::SewOp,
            "timesteps" => Axis::Timesteps,
            "block_kind" => Axis::BlockKind,
            _ => {
                return Err(CliError::config(format!(
                    "unknown ablation axis `{s}` (neuron, surrogate, sew_op, timesteps, block_kind)"
                )))
            }
        })
    }
}

fn names<T: Serialize>(items: &[T]) -> Vec<String> {
    items
        .iter()
        .map(|v| match serde_json::to_value(v) {
            Ok(Value::String(s)) => s,
            Ok(other) => other.to_string(),
            Err(_) => String::new(),
        })
        .collect()
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Neuron => "neuron",
            Axis::Surrogate => "surrogate",
            Axis::SewOp => "sew_op",
            Axis::Timesteps => "timesteps",
            Axis::BlockKind => "block_kind",
        }
    }

    /// Config key the axis varies.
    pub fn key(self) -> &'static str {
        match self {
            Axis::Neuron => "model.neuron.variant",
            Axis::Surrogate => "model.neuron.surrogate.kind",
            Axis::SewOp => "model.sew_op",
            Axis::Timesteps => "model.timesteps",
            Axis::BlockKind => "model.block_kind",
        }
    }

    pub fn default_values(self) -> Vec<String> {
        match self {
            Axis::Neuron => names(&NeuronVariant::ALL),
            Axis::Surrogate => names(&SurrogateKind::ALL),
            Axis::SewOp => names(&SewOp::ALL),
            Axis::Timesteps => vec!["1".into(), "2".into(), "4".into()],
            Axis::BlockKind => names(&BlockKind::ALL),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblateArgs {
    pub axis: Axis,
    /// Replaces [`Axis::default_values`] when set.
    pub values: Option<Vec<String>>,
    pub eval: EvalArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub axis: String,
    pub variant: String,
    pub snr_db: f64,
    pub ber: f64,
    pub bce: Option<f64>,
    pub activation_pct: Option<f64>,
    pub final_loss: f64,
    pub params: usize,
    pub seed: u64,
}

/// Trains and evaluates one variant per axis value with the base seed, so
/// every variant sees the same data, initial draws and evaluation slots.
///
/// Variant runs go to `output_dir/<axis>/<value>`; the comparison to
/// `output_dir/ablation.csv`.
pub fn ablate(base: &RunConfig, args: &AblateArgs) -> Result<Vec<AblationRow>> {
    let values = args.values.clone().unwrap_or_else(|| args.axis.default_values());
    if values.is_empty() {
        return Err(CliError::config("ablation needs at least one value"));
    }
    let seed = base.seed();
    let root = base.output_dir.join(args.axis.name());
    let mut rows = Vec::new();
    for value in &values {
        let mut v = serde_json::to_value(base)?;
        apply_override(&mut v, args.axis.key(), value)?;
        let mut cfg = from_value(v)?.resolve(Some(seed))?;
        cfg.output_dir = root.join(value);
        let run = train(&cfg, None)?;
        let eval_args = EvalArgs {
            out: Some(cfg.output_dir.join("ber.csv")),
            ..args.eval.clone()
        };
        let records = eval(&cfg, &run.checkpoint, &eval_args, false)?;
        for r in records {
            rows.push(AblationRow {
                axis: args.axis.name().into(),
                variant: value.clone(),
                snr_db: r.snr_db,
                ber: r.ber,
                bce: r.bce,
                activation_pct: r.activation_pct,
                final_loss: run.final_loss,
                params: cfg.model.param_count(),
                seed,
            });
        }
    }
    fs::create_dir_all(&base.output_dir)?;
    write_csv(&base.output_dir.join("ablation.csv"), &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_values_parse_back() {
        for axis in [Axis::Neuron, Axis::Surrogate, Axis::SewOp, Axis::Timesteps, Axis::BlockKind] {
            for value in axis.default_values() {
                let mut v = serde_json::to_value(RunConfig::default()).unwrap();
                apply_override(&mut v, axis.key(), &value).unwrap();
                from_value(v).unwrap_or_else(|e| panic!("{} = {value}: {e}", axis.key()));
            }
        }
    }

    #[test]
    fn timesteps_and_sew_defaults() {
        assert_eq!(Axis::Timesteps.default_values(), ["1", "2", "4"]);
        assert_eq!(Axis::SewOp.default_values(), ["add", "and", "iand"]);
        assert_eq!(Axis::from_str("sew_op").unwrap(), Axis::SewOp);
        assert!(Axis::from_str("width").is_err());
    }
}
