use num_complex::Complex64;
use rand::Rng;

use crate::config::LinkConfig;
use crate::error::{PhyError, Result};
use crate::grid::Grid;
use crate::qam::Constellation;

/// One transmitted slot.
#[derive(Debug, Clone)]
pub struct Tti {
    /// Transmitted symbols, DMRS and data, one antenna.
    pub tx: Grid,
    /// DMRS values at pilot positions, exactly zero elsewhere.
    pub pilot: Grid,
    /// Bits per resource element, `M x N x B_t` row-major; zero on DMRS rows.
    pub bit_grid: Vec<u8>,
    pub dmrs_symbols: Vec<usize>,
}

impl Tti {
    /// Payload bits in transmission order (data symbols, then subcarriers).
    pub fn payload(&self, bits_per_symbol: usize) -> Vec<u8> {
        let row = self.tx.subcarriers() * bits_per_symbol;
        (0..self.tx.symbols())
            .filter(|m| !self.dmrs_symbols.contains(m))
            .flat_map(|m| self.bit_grid[m * row..(m + 1) * row].iter().copied())
            .collect()
    }

    /// True for OFDM symbols that carry data.
    pub fn data_mask(&self) -> Vec<bool> {
        (0..self.tx.symbols())
            .map(|m| !self.dmrs_symbols.contains(&m))
            .collect()
    }
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let re = if rng.random::<bool>() { -r } else { r };
    let im = if rng.random::<bool>() { -r } else { r };
    Complex64::new(re, im)
}

/// Places `payload` on the data elements and random QPSK DMRS on the pilot
/// symbols.
pub fn build_tti<R: Rng + ?Sized>(cfg: &LinkConfig, payload: &[u8], rng: &mut R) -> Result<Tti> {
    cfg.validate()?;
    if payload.len() != cfg.data_bits() {
        return Err(PhyError::SizeMismatch {
            what: "payload bits",
            expected: cfg.data_bits(),
            got: payload.len(),
        });
    }
    let constellation = Constellation::new(cfg.bits_per_symbol)?;
    let (m_total, n_total, b) = (cfg.symbols, cfg.subcarriers, cfg.bits_per_symbol);
    let mut tx = Grid::zeros(m_total, n_total, 1);
    let mut pilot = Grid::zeros(m_total, n_total, 1);
    let mut bit_grid = vec![0u8; m_total * n_total * b];
    let mut chunks = payload.chunks_exact(b);
    for m in 0..m_total {
        for n in 0..n_total {
            if cfg.is_dmrs(m) {
                let p = qpsk(rng);
                tx.set(m, n, 0, p);
                pilot.set(m, n, 0, p);
            } else {
                let bits = chunks.next().expect("payload length checked");
                tx.set(m, n, 0, constellation.map_label(bits));
                bit_grid[(m * n_total + n) * b..][..b].copy_from_slice(bits);
            }
        }
    }
    Ok(Tti {
        tx,
        pilot,
        bit_grid,
        dmrs_symbols: cfg.dmrs_symbols.clone(),
    })
}

/// Draws uniform payload bits, then builds the slot.
pub fn random_tti<R: Rng + ?Sized>(cfg: &LinkConfig, rng: &mut R) -> Result<Tti> {
    let payload: Vec<u8> = (0..cfg.data_bits()).map(|_| rng.random_range(0..2u8)).collect();
    build_tti(cfg, &payload, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_and_pilot_layout() {
        let cfg = LinkConfig::default();
        assert_eq!(cfg.data_bits(), 3328);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tti(&cfg, &mut rng).unwrap();
        let nonzero = t.pilot.data().iter().filter(|p| p.norm() > 0.0).count();
        assert_eq!(nonzero, 64);
        for m in 0..14 {
            for n in 0..64 {
                let p = t.pilot.get(m, n, 0);
                if m == 3 {
                    assert!((p.norm_sqr() - 1.0).abs() < 1e-12);
                    assert_eq!(p, t.tx.get(m, n, 0));
                } else {
                    assert_eq!(p, Complex64::new(0.0, 0.0));
                }
            }
        }
        let two = cfg.with_dmrs(vec![3, 12]);
        let t2 = random_tti(&two, &mut rng).unwrap();
        assert_eq!(t2.pilot.data().iter().filter(|p| p.norm() > 0.0).count(), 128);
    }

    #[test]
    fn payload_round_trip_and_determinism() {
        let cfg = LinkConfig::default().with_dmrs(vec![3, 12]);
        let payload: Vec<u8> = (0..cfg.data_bits()).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let a = build_tti(&cfg, &payload, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = build_tti(&cfg, &payload, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.payload(4), payload);
        assert_eq!(a.tx, b.tx);
        assert_eq!(a.pilot, b.pilot);
        assert_eq!(a.data_mask().iter().filter(|&&d| d).count(), 12);
    }

    #[test]
    fn wrong_payload_size_is_rejected() {
        let cfg = LinkConfig::default();
        let err = build_tti(&cfg, &[0; 10], &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, PhyError::SizeMismatch { expected: 3328, got: 10, .. }));
    }
}
