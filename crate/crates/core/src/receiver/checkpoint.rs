use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spikerx_autodiff::{read_checkpoint, write_checkpoint, ParamStore};

use super::config::ModelConfig;
use super::model::Model;
use crate::error::{Result, SpikeRxError};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON form (object keys sorted).
pub fn config_digest<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_string(&serde_json::to_value(value)?)?;
    Ok(hex(&Sha256::digest(canonical.as_bytes())))
}

/// JSON written next to every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub model: ModelConfig,
    pub config_digest: String,
    pub weights_digest: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the weights to `path` and the sidecar to `path` + `.json`.
pub fn save_model(path: &Path, cfg: &ModelConfig, store: &ParamStore<f32>) -> Result<()> {
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, store)?;
    std::fs::write(path, &bytes)?;
    let sidecar = Sidecar {
        model: cfg.clone(),
        config_digest: config_digest(cfg)?,
        weights_digest: hex(&Sha256::digest(&bytes)),
    };
    let mut w = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint, rejecting it if either digest disagrees.
pub fn load_model(path: &Path) -> Result<(Model, ParamStore<f32>)> {
    let sidecar: Sidecar = serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    let computed = config_digest(&sidecar.model)?;
    if computed != sidecar.config_digest {
        return Err(SpikeRxError::DigestMismatch {
            recorded: sidecar.config_digest,
            computed,
        });
    }
    let bytes = std::fs::read(path)?;
    let computed = hex(&Sha256::digest(&bytes));
    if computed != sidecar.weights_digest {
        return Err(SpikeRxError::DigestMismatch {
            recorded: sidecar.weights_digest,
            computed,
        });
    }
    let (model, mut store) = Model::new(&sidecar.model, &mut ChaCha8Rng::seed_from_u64(0))?;
    let records = read_checkpoint(&mut bytes.as_slice())?;
    store
        .load(records)
        .map_err(|e| SpikeRxError::Checkpoint(e.to_string()))?;
    Ok((model, store))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_field_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a": 1, "b": {"x": 2, "y": 3}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b": {"y": 3, "x": 2}, "a": 1}"#).unwrap();
        assert_eq!(config_digest(&a).unwrap(), config_digest(&b).unwrap());
        assert_eq!(config_digest(&a).unwrap().len(), 64);
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let cfg = ModelConfig {
            channels: 4,
            blocks: 1,
            ..ModelConfig::default()
        };
        let (_, store) = Model::new(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        save_model(&path, &cfg, &store).unwrap();
        let (model, loaded) = load_model(&path).unwrap();
        assert_eq!(model.config(), &cfg);
        for (a, b) in store.iter().zip(loaded.iter()) {
            assert_eq!((&a.name, &a.tensor), (&b.name, &b.tensor));
        }

        let side = sidecar_path(&path);
        let text = std::fs::read_to_string(&side).unwrap();
        std::fs::write(&side, text.replace("\"channels\": 4", "\"channels\": 8")).unwrap();
        assert!(matches!(load_model(&path), Err(SpikeRxError::DigestMismatch { .. })));

        save_model(&path, &cfg, &store).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_model(&path), Err(SpikeRxError::DigestMismatch { .. })));
    }
}
