use num_complex::Complex64;

use crate::error::{PhyError, Result};
use crate::estimate::ChannelEstimate;
use crate::grid::Grid;

/// LMMSE-equalized data symbols in transmission order.
#[derive(Debug, Clone)]
pub struct Equalized {
    /// `(h^H h + s2)^-1 h^H y`
    pub x_hat: Vec<Complex64>,
    /// Bias factor `h^H h / (h^H h + s2)`.
    pub mu: Vec<f64>,
}

impl Equalized {
    /// Bias-corrected symbol and its effective noise variance `(1 - mu) / mu`.
    pub fn unbiased(&self, i: usize) -> (Complex64, f64) {
        let mu = self.mu[i];
        if mu <= 0.0 {
            return (Complex64::new(0.0, 0.0), f64::MAX);
        }
        (self.x_hat[i] / mu, ((1.0 - mu) / mu).max(f64::MIN_POSITIVE))
    }

    pub fn len(&self) -> usize {
        self.x_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_hat.is_empty()
    }
}

/// Per-element LMMSE combining over receive antennas on the data symbols.
///
/// The regularizer is the noise variance plus the mean estimation error
/// variance across antennas.
pub fn lmmse_equalize(
    rx: &Grid,
    est: &ChannelEstimate,
    n0: f64,
    data_symbols: &[usize],
) -> Result<Equalized> {
    if !rx.same_shape(&est.h) {
        return Err(PhyError::SizeMismatch {
            what: "channel estimate elements",
            expected: rx.data().len(),
            got: est.h.data().len(),
        });
    }
    let (n_total, r_total) = (rx.subcarriers(), rx.antennas());
    let mut x_hat = Vec::with_capacity(data_symbols.len() * n_total);
    let mut mu = Vec::with_capacity(x_hat.capacity());
    for &m in data_symbols {
        for n in 0..n_total {
            let (mut gain, mut matched, mut err) = (0.0, Complex64::new(0.0, 0.0), 0.0);
            for r in 0..r_total {
                let h = est.h.get(m, n, r);
                gain += h.norm_sqr();
                matched += h.conj() * rx.get(m, n, r);
                err += est.err_var[est.h.index(m, n, r)];
            }
            let s2 = n0 + err / r_total as f64;
            let denom = gain + s2;
            if denom <= 0.0 {
                return Err(PhyError::DegenerateEqualizer(x_hat.len()));
            }
            x_hat.push(matched / denom);
            mu.push(gain / denom);
        }
    }
    Ok(Equalized { x_hat, mu })
}
