use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use spikerx::training::Pool;
use spikerx_phy::{substream, write_dataset};

use super::ensure_parent;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct GenDatasetArgs {
    pub count: usize,
    pub pool: Pool,
    pub out: PathBuf,
}

/// Draws `count` slots from the sampler and writes them in the binary
/// dataset format. Slot `i` uses the `dataset/{i}` substream.
pub fn gen_dataset(cfg: &RunConfig, args: &GenDatasetArgs) -> Result<usize> {
    if args.count == 0 {
        return Err(CliError::config("dataset needs at least one sample"));
    }
    let seed = cfg.seed();
    let samples = (0..args.count)
        .map(|i| {
            let mut rng = substream(seed, &format!("dataset/{i}"));
            cfg.sampler.sample(&cfg.link, args.pool, &mut rng)?.sample(&cfg.link, &mut rng)
        })
        .collect::<spikerx::Result<Vec<_>>>()?;
    let digest = digest_bytes(&cfg.digest()?);
    ensure_parent(&args.out)?;
    write_dataset(BufWriter::new(File::create(&args.out)?), digest, &samples)?;
    Ok(samples.len())
}

fn digest_bytes(hex: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, b) in out.iter_mut().enumerate() {
        *b = hex.get(2 * i..2 * i + 2).and_then(|h| u8::from_str_radix(h, 16).ok()).unwrap_or(0);
    }
    out
}
