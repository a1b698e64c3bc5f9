use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent generator for a named purpose ("data", "init", "sso", "eval").
pub fn substream(master: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(name.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Generator owned by one Monte-Carlo trial, independent of evaluation order.
pub fn trial_rng(master: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(b"trial");
    h.update((snr_index as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
