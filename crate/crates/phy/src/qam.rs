use num_complex::Complex64;

use crate::error::{PhyError, Result};

/// Gray-mapped square QAM with unit average energy.
///
/// Bit `l` of a symbol label is `(label >> l) & 1`. Even-indexed bits select
/// the in-phase amplitude and odd-indexed bits the quadrature amplitude, so
/// QPSK bits `(0, 0)` map to `(1 + j) / sqrt(2)`.
#[derive(Debug, Clone)]
pub struct Constellation {
    bits: usize,
    points: Vec<Complex64>,
}

fn pam(bits: &[u8]) -> f64 {
    let k = bits.len();
    let sign = |b: u8| 1.0 - 2.0 * f64::from(b);
    let mut v = sign(bits[k - 1]);
    for j in (0..k - 1).rev() {
        v = sign(bits[j]) * (f64::from(1u32 << (k - 1 - j)) - v);
    }
    v
}

impl Constellation {
    pub fn new(bits: usize) -> Result<Self> {
        if !bits.is_multiple_of(2) || !(2..=10).contains(&bits) {
            return Err(PhyError::InvalidModulation(bits));
        }
        let order = 1usize << bits;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let points = (0..order)
            .map(|label| {
                let b: Vec<u8> = (0..bits).map(|l| ((label >> l) & 1) as u8).collect();
                let i_bits: Vec<u8> = b.iter().step_by(2).copied().collect();
                let q_bits: Vec<u8> = b.iter().skip(1).step_by(2).copied().collect();
                Complex64::new(pam(&i_bits), pam(&q_bits)) / norm
            })
            .collect();
        Ok(Constellation { bits, points })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn map_label(&self, bits: &[u8]) -> Complex64 {
        let label = bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (l, &b)| acc | (usize::from(b & 1) << l));
        self.points[label]
    }

    /// Maps a bit stream to symbols, `bits()` bits per symbol.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if !bits.len().is_multiple_of(self.bits) {
            return Err(PhyError::SizeMismatch {
                what: "bit count divisible by bits per symbol",
                expected: bits.len().div_ceil(self.bits) * self.bits,
                got: bits.len(),
            });
        }
        Ok(bits.chunks_exact(self.bits).map(|c| self.map_label(c)).collect())
    }
}

/// Exact per-bit log-likelihood ratios `log P(b=1) / P(b=0)` of one
/// equalized symbol under circular Gaussian noise of variance `nu2`.
///
/// Writes `constellation.bits()` values into `out`.
pub fn demap_llr(x: Complex64, nu2: f64, constellation: &Constellation, out: &mut [f64]) {
    let bits = constellation.bits;
    debug_assert_eq!(out.len(), bits);
    let nu2 = nu2.max(f64::MIN_POSITIVE);
    let metrics: Vec<f64> = constellation
        .points
        .iter()
        .map(|s| -(x - s).norm_sqr() / nu2)
        .collect();
    for (l, llr) in out.iter_mut().enumerate() {
        let (mut max1, mut max0) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (label, &d) in metrics.iter().enumerate() {
            if (label >> l) & 1 == 1 {
                max1 = max1.max(d);
            } else {
                max0 = max0.max(d);
            }
        }
        let (mut s1, mut s0) = (0.0, 0.0);
        for (label, &d) in metrics.iter().enumerate() {
            if (label >> l) & 1 == 1 {
                s1 += (d - max1).exp();
            } else {
                s0 += (d - max0).exp();
            }
        }
        *llr = (max1 + s1.ln()) - (max0 + s0.ln());
    }
}
