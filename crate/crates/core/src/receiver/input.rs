use spikerx_autodiff::{Real, Tensor};
use spikerx_phy::{DatasetSample, Grid};

use super::config::LossMask;
use crate::error::{Result, SpikeRxError};

fn check_pair(rx: &Grid, pilot: &Grid) -> Result<()> {
    if rx.symbols() != pilot.symbols() || rx.subcarriers() != pilot.subcarriers() {
        return Err(SpikeRxError::Shape {
            what: "received and pilot grids",
            expected: vec![rx.symbols(), rx.subcarriers()],
            got: vec![pilot.symbols(), pilot.subcarriers()],
        });
    }
    Ok(())
}

/// Value of input plane `k` at `(m, n)`: real parts of the antennas and the
/// pilot, then imaginary parts in the same order.
fn plane(rx: &Grid, pilot: &Grid, k: usize, m: usize, n: usize) -> f64 {
    let planes = rx.antennas() + 1;
    let (part, a) = (k / planes, k % planes);
    let z = if a < rx.antennas() {
        rx.get(m, n, a)
    } else {
        pilot.get(m, n, 0)
    };
    if part == 0 {
        z.re
    } else {
        z.im
    }
}

/// Network input `M x N x 2(N_R+1) x T`; every time slice is the same.
pub fn build_input<E: Real>(rx: &Grid, pilot: &Grid, timesteps: usize) -> Result<Tensor<E>> {
    check_pair(rx, pilot)?;
    let (m, n) = (rx.symbols(), rx.subcarriers());
    let k = 2 * (rx.antennas() + 1);
    let t = timesteps;
    Ok(Tensor::from_fn([m, n, k, t], |i| {
        let (rest, _) = (i / t, i % t);
        let (rest, kk) = (rest / k, rest % k);
        let (mm, nn) = (rest / n, rest % n);
        E::from_f64(plane(rx, pilot, kk, mm, nn))
    }))
}

/// One mini-batch in network layout.
#[derive(Debug, Clone)]
pub struct Batch<E: Real = f32> {
    /// `[B, 2(N_R+1), M, N]`; shared by all time steps.
    pub input: Tensor<E>,
    /// Bit labels `[B, B_t, M, N]`.
    pub labels: Vec<u8>,
    /// Loss mask aligned with `labels`.
    pub mask: Vec<bool>,
    /// Data-symbol mask aligned with `labels`, used for error counting.
    pub data: Vec<bool>,
}

impl<E: Real> Batch<E> {
    pub fn batch_size(&self) -> usize {
        self.input.shape()[0]
    }

    /// Assembles samples that share grid dimensions.
    pub fn from_samples(samples: &[DatasetSample], bits: usize, loss: LossMask) -> Result<Self> {
        let first = samples.first().ok_or_else(|| SpikeRxError::config("empty batch"))?;
        let (m, n, r) = (first.rx.symbols(), first.rx.subcarriers(), first.rx.antennas());
        let k = 2 * (r + 1);
        let mut input = Vec::with_capacity(samples.len() * k * m * n);
        let mut labels = Vec::with_capacity(samples.len() * bits * m * n);
        let mut mask = Vec::with_capacity(labels.capacity());
        let mut data = Vec::with_capacity(labels.capacity());
        for s in samples {
            check_pair(&s.rx, &s.pilot)?;
            if s.rx.symbols() != m || s.rx.subcarriers() != n || s.rx.antennas() != r {
                return Err(SpikeRxError::Shape {
                    what: "batch sample",
                    expected: vec![m, n, r],
                    got: vec![s.rx.symbols(), s.rx.subcarriers(), s.rx.antennas()],
                });
            }
            if s.bit_grid.len() != m * n * bits || s.data_mask.len() != m {
                return Err(SpikeRxError::Shape {
                    what: "batch labels",
                    expected: vec![m * n * bits, m],
                    got: vec![s.bit_grid.len(), s.data_mask.len()],
                });
            }
            for kk in 0..k {
                for mm in 0..m {
                    for nn in 0..n {
                        input.push(E::from_f64(plane(&s.rx, &s.pilot, kk, mm, nn)));
                    }
                }
            }
            for b in 0..bits {
                for mm in 0..m {
                    for nn in 0..n {
                        let bit = s.bit_grid[(mm * n + nn) * bits + b];
                        if bit > 1 {
                            return Err(SpikeRxError::InvalidLabel(bit));
                        }
                        labels.push(bit);
                        data.push(s.data_mask[mm]);
                        mask.push(loss == LossMask::Full || s.data_mask[mm]);
                    }
                }
            }
        }
        Ok(Batch {
            input: Tensor::new([samples.len(), k, m, n], input)?,
            labels,
            mask,
            data,
        })
    }
}
