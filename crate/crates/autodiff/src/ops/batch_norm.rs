//! Per-channel batch normalization over every axis except axis 1.

use crate::error::{AutodiffError, Result};
use crate::real::Real;
use crate::tape::{Op, Tape, Var};
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Whether batch statistics or running statistics normalize the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Infer,
}

/// Running mean and variance, one entry per channel.
#[derive(Debug)]
pub struct BatchNormStats<'a, E> {
    pub mean: &'a mut [E],
    pub var: &'a mut [E],
}

pub(crate) struct Cache<E> {
    xhat: Vec<E>,
    inv_std: Vec<E>,
    mode: NormMode,
}

struct Layout {
    outer: usize,
    channels: usize,
    inner: usize,
}

impl Layout {
    fn of(shape: &[usize]) -> Result<Self> {
        if shape.len() < 2 {
            return Err(AutodiffError::invalid(
                "batch_norm",
                format!("input needs a channel axis, got shape {shape:?}"),
            ));
        }
        Ok(Layout {
            outer: shape[0],
            channels: shape[1],
            inner: shape[2..].iter().product(),
        })
    }

    fn count(&self) -> usize {
        self.outer * self.inner
    }

    fn for_channel<F: FnMut(usize)>(&self, c: usize, mut f: F) {
        for b in 0..self.outer {
            let base = (b * self.channels + c) * self.inner;
            for i in base..base + self.inner {
                f(i);
            }
        }
    }
}

pub(crate) struct NormGrads<E> {
    pub input: Option<Vec<E>>,
    pub gamma: Vec<E>,
    pub beta: Vec<E>,
}

pub(crate) fn backward<E: Real>(
    input: &Tensor<E>,
    gamma: &Tensor<E>,
    cache: &Cache<E>,
    grad_out: &[E],
    need_input: bool,
) -> NormGrads<E> {
    let l = Layout::of(input.shape()).expect("validated in forward");
    let n = l.count() as f64;
    let mut d_gamma = Vec::with_capacity(l.channels);
    let mut d_beta = Vec::with_capacity(l.channels);
    let mut d_input = need_input.then(|| vec![E::zero(); input.len()]);
    for c in 0..l.channels {
        let (mut sg, mut sgx) = (0.0f64, 0.0f64);
        l.for_channel(c, |i| {
            let g = grad_out[i].as_f64();
            sg += g;
            sgx += g * cache.xhat[i].as_f64();
        });
        d_gamma.push(E::from_f64(sgx));
        d_beta.push(E::from_f64(sg));
        if let Some(dx) = d_input.as_mut() {
            let scale = gamma.data()[c].as_f64() * cache.inv_std[c].as_f64();
            match cache.mode {
                NormMode::Infer => l.for_channel(c, |i| {
                    dx[i] = E::from_f64(grad_out[i].as_f64() * scale);
                }),
                NormMode::Train => l.for_channel(c, |i| {
                    let g = grad_out[i].as_f64();
                    let xh = cache.xhat[i].as_f64();
                    dx[i] = E::from_f64(scale * (g - sg / n - xh * sgx / n));
                }),
            }
        }
    }
    NormGrads {
        input: d_input,
        gamma: d_gamma,
        beta: d_beta,
    }
}

impl<E: Real> Tape<E> {
    /// Normalizes `x` per channel, then applies `gamma * xhat + beta`.
    ///
    /// In [`NormMode::Train`] the batch statistics are used and the running
    /// statistics are updated with momentum [`BN_MOMENTUM`] (unbiased
    /// variance). In [`NormMode::Infer`] the running statistics are used and
    /// left untouched.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        stats: &mut BatchNormStats<'_, E>,
        mode: NormMode,
    ) -> Result<Var> {
        let input = self.value(x);
        let l = Layout::of(input.shape())?;
        let c = l.channels;
        for (name, v) in [("batch_norm gamma", gamma), ("batch_norm beta", beta)] {
            if self.shape(v) != [c] {
                return Err(AutodiffError::shape(name, &[c], self.shape(v)));
            }
        }
        if stats.mean.len() != c || stats.var.len() != c {
            return Err(AutodiffError::shape(
                "batch_norm running stats",
                &[c],
                &[stats.mean.len().min(stats.var.len())],
            ));
        }
        if mode == NormMode::Train && l.count() == 0 {
            return Err(AutodiffError::ZeroBatch);
        }
        let data = input.data();
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![E::zero(); data.len()];
        let mut out = vec![E::zero(); data.len()];
        let mut inv_std = Vec::with_capacity(c);
        let n = l.count() as f64;
        for ch in 0..c {
            let (mean, var) = match mode {
                NormMode::Train => {
                    let mut sum = 0.0f64;
                    l.for_channel(ch, |i| sum += data[i].as_f64());
                    let mean = sum / n;
                    let mut ss = 0.0f64;
                    l.for_channel(ch, |i| ss += (data[i].as_f64() - mean).powi(2));
                    let var = ss / n;
                    let unbiased = if n > 1.0 { ss / (n - 1.0) } else { var };
                    let rm = stats.mean[ch].as_f64();
                    let rv = stats.var[ch].as_f64();
                    stats.mean[ch] = E::from_f64((1.0 - BN_MOMENTUM) * rm + BN_MOMENTUM * mean);
                    stats.var[ch] =
                        E::from_f64((1.0 - BN_MOMENTUM) * rv + BN_MOMENTUM * unbiased);
                    (mean, var)
                }
                NormMode::Infer => (stats.mean[ch].as_f64(), stats.var[ch].as_f64()),
            };
            let is = 1.0 / (var + BN_EPS).sqrt();
            inv_std.push(E::from_f64(is));
            let (gc, bc) = (g[ch].as_f64(), b[ch].as_f64());
            l.for_channel(ch, |i| {
                let xh = (data[i].as_f64() - mean) * is;
                xhat[i] = E::from_f64(xh);
                out[i] = E::from_f64(gc * xh + bc);
            });
        }
        let y = Tensor::new(input.shape().to_vec(), out)?;
        Ok(self.push(
            y,
            Op::BatchNorm {
                input: x,
                gamma,
                beta,
                cache: Cache {
                    xhat,
                    inv_std,
                    mode,
                },
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(
        x: Tensor<f64>,
        mode: NormMode,
        mean: &mut [f64],
        var: &mut [f64],
    ) -> (Tensor<f64>, Vec<f64>) {
        let c = x.shape()[1];
        let mut tape = Tape::new();
        let xv = tape.leaf(x);
        let g = tape.leaf(Tensor::full([c], 1.0));
        let b = tape.leaf(Tensor::zeros([c]));
        let mut stats = BatchNormStats { mean, var };
        let y = tape.batch_norm(xv, g, b, &mut stats, mode).unwrap();
        let w: Vec<f64> = (0..tape.value(y).len()).map(|i| (i as f64).sin()).collect();
        let wv = tape.constant(Tensor::new(tape.shape(y).to_vec(), w).unwrap());
        let p = tape.mul(y, wv).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();
        (tape.value(y).clone(), tape.grad(xv).unwrap().to_vec())
    }

    #[test]
    fn train_mode_normalizes_channel() {
        let x = Tensor::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (mut m, mut v) = (vec![0.0], vec![1.0]);
        let (y, _) = run(x, NormMode::Train, &mut m, &mut v);
        let s = (1.25f64 + BN_EPS).sqrt();
        let expected = [-1.5 / s, -0.5 / s, 0.5 / s, 1.5 / s];
        for (a, e) in y.data().iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((m[0] - 0.25).abs() < 1e-12);
        // unbiased variance 5/3
        assert!((v[0] - (0.9 + 0.1 * 5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let x = Tensor::full([3, 2, 2, 2], 7.0);
        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(x);
        let g = tape.leaf(Tensor::full([2], 2.0));
        let b = tape.leaf(Tensor::new([2], vec![0.5, -1.0]).unwrap());
        let (mut m, mut v) = (vec![0.0; 2], vec![1.0; 2]);
        let mut stats = BatchNormStats {
            mean: &mut m,
            var: &mut v,
        };
        let y = tape.batch_norm(xv, g, b, &mut stats, NormMode::Train).unwrap();
        for (i, &val) in tape.value(y).data().iter().enumerate() {
            let expect = if (i / 4) % 2 == 0 { 0.5 } else { -1.0 };
            assert!((val - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn infer_mode_uses_running_stats() {
        let x = Tensor::new([2, 1, 1, 1], vec![3.0, 5.0]).unwrap();
        let (mut m, mut v) = (vec![1.0], vec![4.0]);
        let (y, gx) = run(x, NormMode::Infer, &mut m, &mut v);
        let s = (4.0 + BN_EPS).sqrt();
        assert!((y.data()[0] - 2.0 / s).abs() < 1e-12);
        assert!((y.data()[1] - 4.0 / s).abs() < 1e-12);
        assert_eq!((m[0], v[0]), (1.0, 4.0));
        assert!((gx[1] - 1f64.sin() / s).abs() < 1e-12);
    }

    #[test]
    fn train_gradient_matches_finite_difference() {
        let x = Tensor::<f64>::from_fn([2, 3, 2, 2], |i| ((i * 37) % 11) as f64 * 0.3 - 1.0);
        let (_, gx) = run(x.clone(), NormMode::Train, &mut [0.0; 3], &mut [1.0; 3]);
        let h = 1e-6;
        for i in 0..x.len() {
            let (mut p, mut m) = (x.clone(), x.clone());
            p.data_mut()[i] += h;
            m.data_mut()[i] -= h;
            let f = |t: Tensor<f64>| {
                let (y, _) = run(t, NormMode::Train, &mut [0.0; 3], &mut [1.0; 3]);
                y.data().iter().enumerate().map(|(k, v)| v * (k as f64).sin()).sum::<f64>()
            };
            let fd = (f(p) - f(m)) / (2.0 * h);
            assert!((fd - gx[i]).abs() < 1e-6, "{i}: {fd} vs {}", gx[i]);
        }
    }

    #[test]
    fn errors() {
        let mut tape = Tape::<f32>::new();
        let x = tape.leaf(Tensor::zeros([0, 2, 2, 2]));
        let g = tape.leaf(Tensor::full([2], 1.0));
        let b = tape.leaf(Tensor::zeros([2]));
        let (mut m, mut v) = (vec![0.0; 2], vec![1.0; 2]);
        let mut stats = BatchNormStats {
            mean: &mut m,
            var: &mut v,
        };
        assert!(matches!(
            tape.batch_norm(x, g, b, &mut stats, NormMode::Train),
            Err(AutodiffError::ZeroBatch)
        ));
        let x3 = tape.leaf(Tensor::zeros([1, 3, 2, 2]));
        assert!(matches!(
            tape.batch_norm(x3, g, b, &mut stats, NormMode::Train),
            Err(AutodiffError::ShapeMismatch { .. })
        ));
    }
}
