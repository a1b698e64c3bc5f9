//! Sum and mean reductions, accumulated in `f64`.

use crate::error::{AutodiffError, Result};
use crate::real::Real;
use crate::tape::{Op, Tape, Var};
use crate::tensor::Tensor;

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub(crate) fn mean_axis_backward<E: Real>(shape: &[usize], axis: usize, g: &[E]) -> Vec<E> {
    let (outer, extent, inner) = split_axis(shape, axis);
    let inv = 1.0 / extent as f64;
    let mut out = Vec::with_capacity(outer * extent * inner);
    for o in 0..outer {
        for _ in 0..extent {
            out.extend(
                g[o * inner..(o + 1) * inner]
                    .iter()
                    .map(|&d| E::from_f64(d.as_f64() * inv)),
            );
        }
    }
    out
}

impl<E: Real> Tape<E> {
    /// Sum of all elements as a shape-`[1]` tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).sum_f64();
        self.push(Tensor::scalar(E::from_f64(s)), Op::Sum(a))
    }

    /// Mean of all elements as a shape-`[1]` tensor.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(AutodiffError::EmptyAxis {
                axis: 0,
                shape: self.shape(a).to_vec(),
            });
        }
        let s = self.sum(a);
        Ok(self.scale(s, 1.0 / n as f64))
    }

    /// Arithmetic mean over `axis`; the axis is removed from the shape
    /// (a rank-1 input yields shape `[1]`).
    pub fn reduce_mean(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(AutodiffError::InvalidAxis { axis, shape });
        }
        if shape[axis] == 0 {
            return Err(AutodiffError::EmptyAxis { axis, shape });
        }
        let (outer, extent, inner) = split_axis(&shape, axis);
        let x = self.value(a).data();
        let mut data = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let s: f64 = (0..extent)
                    .map(|k| x[(o * extent + k) * inner + i].as_f64())
                    .sum();
                data.push(E::from_f64(s / extent as f64));
            }
        }
        let mut out_shape: Vec<usize> = shape
            .iter()
            .enumerate()
            .filter(|&(d, _)| d != axis)
            .map(|(_, &s)| s)
            .collect();
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        let y = Tensor::new(out_shape, data).expect("reduced shape");
        Ok(self.push(y, Op::MeanAxis { input: a, axis }))
    }

    /// Stacks equally shaped values along a new leading axis.
    pub fn stack(&mut self, vars: &[Var]) -> Result<Var> {
        let Some(first) = vars.first() else {
            return Err(AutodiffError::invalid("stack", "no inputs"));
        };
        let shape = self.shape(*first).to_vec();
        let mut data = Vec::with_capacity(shape.iter().product::<usize>() * vars.len());
        for v in vars {
            if self.shape(*v) != shape.as_slice() {
                return Err(AutodiffError::shape("stack", &shape, self.shape(*v)));
            }
            data.extend_from_slice(self.value(*v).data());
        }
        let mut out_shape = vec![vars.len()];
        out_shape.extend(&shape);
        let y = Tensor::new(out_shape, data).expect("stacked shape");
        Ok(self.push(y, Op::Stack(vars.to_vec())))
    }
}
