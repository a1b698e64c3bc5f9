//! Resolved run configuration and flat `--section.key value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spikerx::receiver::ModelConfig;
use spikerx::training::{ScenarioSampler, TrainConfig};
use spikerx_phy::LinkConfig;

use crate::error::{CliError, Result};

/// Environment variable consulted when no seed is given on the command line
/// or in the config file.
pub const SEED_ENV: &str = "SPIKERX_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub link: LinkConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub sampler: ScenarioSampler,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            link: LinkConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            sampler: ScenarioSampler::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    /// Master seed after resolution; zero before [`RunConfig::resolve`].
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Fills the seed, copies the link dimensions into the model and
    /// validates every section.
    pub fn resolve(mut self, seed_flag: Option<u64>) -> Result<Self> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::config(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        self.seed = Some(seed_flag.or(self.seed).or(env_seed).unwrap_or(0));
        self.model.rx_antennas = self.link.rx_antennas;
        self.model.bits_per_symbol = self.link.bits_per_symbol;
        self.link.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.sampler.validate()?;
        Ok(self)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(spikerx::receiver::config_digest(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&serde_json::to_value(self)?)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// `(dotted path, raw value)` pairs from the command line.
pub type Overrides = Vec<(String, String)>;

/// Removes `--a.b value` and `--a.b=value` pairs from `args`.
///
/// Only flags whose name contains a dot are taken, so ordinary clap flags
/// pass through untouched.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| CliError::Field { path: key.clone(), message: "override needs a value".into() })?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

/// Reads `path` (or the defaults), applies `overrides` and deserializes with
/// field paths in error messages.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", p.display())))?
        }
        None => serde_json::to_value(RunConfig::default())?,
    };
    for (key, raw) in overrides {
        apply_override(&mut value, key, raw)?;
    }
    from_value(value)
}

pub fn from_value(value: Value) -> Result<RunConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Field {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Sets `key` (dot separated) in `root`; the value is parsed as JSON and
/// falls back to a plain string.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Field { path: key.into(), message: "empty path segment".into() });
        }
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(CliError::Field {
                    path: parts[..i].join("."),
                    message: "not a section".into(),
                });
            }
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}
