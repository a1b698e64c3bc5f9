//! Same-padded 2-D cross-correlation via im2col and GEMM.

use crate::error::{AutodiffError, Result};
use crate::real::Real;
use crate::tape::{Op, Tape, Var};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
struct Geometry {
    batch: usize,
    c_in: usize,
    c_out: usize,
    height: usize,
    width: usize,
    k: usize,
}

impl Geometry {
    fn of(input: &[usize], kernel: &[usize]) -> Result<Self> {
        if input.len() != 4 {
            return Err(AutodiffError::invalid(
                "conv2d",
                format!("input must be [B, C, H, W], got {input:?}"),
            ));
        }
        if kernel.len() != 4 || kernel[2] != kernel[3] {
            return Err(AutodiffError::invalid(
                "conv2d",
                format!("kernel must be [C_out, C_in, K, K], got {kernel:?}"),
            ));
        }
        if kernel[2].is_multiple_of(2) {
            return Err(AutodiffError::invalid(
                "conv2d",
                format!("kernel size must be odd, got {}", kernel[2]),
            ));
        }
        if kernel[1] != input[1] {
            return Err(AutodiffError::shape(
                "conv2d input channels",
                &[kernel[1]],
                &[input[1]],
            ));
        }
        Ok(Geometry {
            batch: input[0],
            c_in: input[1],
            c_out: kernel[0],
            height: input[2],
            width: input[3],
            k: kernel[2],
        })
    }

    fn hw(&self) -> usize {
        self.height * self.width
    }

    fn patch(&self) -> usize {
        self.c_in * self.k * self.k
    }
}

/// Unfolds one `[C_in, H, W]` image into `[C_in*K*K, H*W]` columns.
fn im2col<E: Real>(img: &[E], g: &Geometry, cols: &mut [E]) {
    let (h, w, k) = (g.height, g.width, g.k);
    let pad = k / 2;
    let hw = g.hw();
    for c in 0..g.c_in {
        let plane = &img[c * hw..(c + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((c * k + ky) * k + kx) * hw..][..hw];
                // valid x range: 0 <= x + kx - pad < w
                let x_lo = pad.saturating_sub(kx);
                let x_hi = (w + pad).saturating_sub(kx).min(w);
                for y in 0..h {
                    let dst = &mut row[y * w..(y + 1) * w];
                    let sy = y + ky;
                    if sy < pad || sy - pad >= h || x_lo >= x_hi {
                        dst.fill(E::zero());
                        continue;
                    }
                    let src = &plane[(sy - pad) * w..(sy - pad + 1) * w];
                    dst[..x_lo].fill(E::zero());
                    dst[x_hi..].fill(E::zero());
                    let sx0 = x_lo + kx - pad;
                    dst[x_lo..x_hi].copy_from_slice(&src[sx0..sx0 + (x_hi - x_lo)]);
                }
            }
        }
    }
}

/// Folds columns back, accumulating into `img`.
fn col2im<E: Real>(cols: &[E], g: &Geometry, img: &mut [E]) {
    let (h, w, k) = (g.height, g.width, g.k);
    let pad = k / 2;
    let hw = g.hw();
    for c in 0..g.c_in {
        let plane = &mut img[c * hw..(c + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((c * k + ky) * k + kx) * hw..][..hw];
                let x_lo = pad.saturating_sub(kx);
                let x_hi = (w + pad).saturating_sub(kx).min(w);
                if x_lo >= x_hi {
                    continue;
                }
                for y in 0..h {
                    let sy = y + ky;
                    if sy < pad || sy - pad >= h {
                        continue;
                    }
                    let src = &row[y * w + x_lo..y * w + x_hi];
                    let sx0 = x_lo + kx - pad;
                    let dst = &mut plane[(sy - pad) * w + sx0..][..x_hi - x_lo];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d = *d + s;
                    }
                }
            }
        }
    }
}

/// Forward convolution outside any tape.
pub fn conv2d_forward<E: Real>(
    input: &Tensor<E>,
    kernel: &Tensor<E>,
    bias: Option<&Tensor<E>>,
) -> Result<Tensor<E>> {
    let g = Geometry::of(input.shape(), kernel.shape())?;
    if let Some(b) = bias {
        if b.shape() != [g.c_out] {
            return Err(AutodiffError::shape("conv2d bias", &[g.c_out], b.shape()));
        }
    }
    let (hw, patch) = (g.hw(), g.patch());
    let mut out = vec![E::zero(); g.batch * g.c_out * hw];
    let mut cols = if g.k == 1 {
        Vec::new()
    } else {
        vec![E::zero(); patch * hw]
    };
    for b in 0..g.batch {
        let img = &input.data()[b * g.c_in * hw..(b + 1) * g.c_in * hw];
        let cols_ref: &[E] = if g.k == 1 {
            img
        } else {
            im2col(img, &g, &mut cols);
            &cols
        };
        let dst = &mut out[b * g.c_out * hw..(b + 1) * g.c_out * hw];
        if let Some(bias) = bias {
            for (c, &bc) in bias.data().iter().enumerate() {
                dst[c * hw..(c + 1) * hw].fill(bc);
            }
        }
        let beta = if bias.is_some() { E::one() } else { E::zero() };
        E::gemm(
            g.c_out,
            patch,
            hw,
            kernel.data(),
            (patch as isize, 1),
            cols_ref,
            (hw as isize, 1),
            beta,
            dst,
            (hw as isize, 1),
        );
    }
    Tensor::new(vec![g.batch, g.c_out, g.height, g.width], out)
}

pub(crate) struct ConvGrads<E> {
    pub input: Option<Vec<E>>,
    pub kernel: Option<Vec<E>>,
    pub bias: Option<Vec<E>>,
}

pub(crate) fn backward<E: Real>(
    input: &Tensor<E>,
    kernel: &Tensor<E>,
    grad_out: &[E],
    need_input: bool,
    need_kernel: bool,
    need_bias: bool,
) -> ConvGrads<E> {
    let g = Geometry::of(input.shape(), kernel.shape()).expect("validated in forward");
    let (hw, patch) = (g.hw(), g.patch());
    let mut d_input = need_input.then(|| vec![E::zero(); input.len()]);
    let mut d_kernel = need_kernel.then(|| vec![E::zero(); kernel.len()]);
    let d_bias = need_bias.then(|| {
        let mut acc = vec![0.0f64; g.c_out];
        for b in 0..g.batch {
            for (c, a) in acc.iter_mut().enumerate() {
                let off = (b * g.c_out + c) * hw;
                *a += grad_out[off..off + hw].iter().map(|x| x.as_f64()).sum::<f64>();
            }
        }
        acc.into_iter().map(E::from_f64).collect()
    });
    let mut cols = vec![E::zero(); if g.k == 1 { 0 } else { patch * hw }];
    let mut d_cols = vec![E::zero(); if need_input && g.k != 1 { patch * hw } else { 0 }];
    for b in 0..g.batch {
        let gout = &grad_out[b * g.c_out * hw..(b + 1) * g.c_out * hw];
        let img = &input.data()[b * g.c_in * hw..(b + 1) * g.c_in * hw];
        if let Some(dk) = d_kernel.as_mut() {
            let cols_ref: &[E] = if g.k == 1 {
                img
            } else {
                im2col(img, &g, &mut cols);
                &cols
            };
            // dK += dY (C_out x HW) * cols^T (HW x patch)
            E::gemm(
                g.c_out,
                hw,
                patch,
                gout,
                (hw as isize, 1),
                cols_ref,
                (1, hw as isize),
                E::one(),
                dk,
                (patch as isize, 1),
            );
        }
        if let Some(di) = d_input.as_mut() {
            let dst = &mut di[b * g.c_in * hw..(b + 1) * g.c_in * hw];
            // dcols = K^T (patch x C_out) * dY (C_out x HW)
            let target: &mut [E] = if g.k == 1 { dst } else { &mut d_cols };
            E::gemm(
                patch,
                g.c_out,
                hw,
                kernel.data(),
                (1, patch as isize),
                gout,
                (hw as isize, 1),
                E::zero(),
                target,
                (hw as isize, 1),
            );
            if g.k != 1 {
                col2im(&d_cols, &g, dst);
            }
        }
    }
    ConvGrads {
        input: d_input,
        kernel: d_kernel,
        bias: d_bias,
    }
}

impl<E: Real> Tape<E> {
    /// Same-padded, stride-1 convolution: `[B, C_in, H, W] * [C_out, C_in, K, K] -> [B, C_out, H, W]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>) -> Result<Var> {
        let y = conv2d_forward(
            self.value(input),
            self.value(kernel),
            bias.map(|b| self.value(b)),
        )?;
        Ok(self.push(
            y,
            Op::Conv2d {
                input,
                kernel,
                bias,
            },
        ))
    }
}
