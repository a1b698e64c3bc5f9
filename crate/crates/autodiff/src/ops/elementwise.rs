//! Elementwise arithmetic. Shapes must match exactly, except that the
//! right-hand operand of `add`/`sub`/`mul` may be a single element.

use crate::error::{AutodiffError, Result};
use crate::real::Real;
use crate::tape::{Op, Tape, Var};
use crate::tensor::Tensor;

fn broadcast_ok(a: &[usize], b: &Tensor<impl Real>) -> bool {
    a == b.shape() || b.len() == 1
}

fn zip_with<E: Real>(a: &Tensor<E>, b: &Tensor<E>, f: impl Fn(E, E) -> E) -> Tensor<E> {
    let data = if b.len() == 1 && a.len() != 1 {
        let s = b.data()[0];
        a.data().iter().map(|&x| f(x, s)).collect()
    } else {
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
    };
    Tensor::new(a.shape().to_vec(), data).expect("shape preserved")
}

/// Sums `g` down to `len` elements when the operand was broadcast.
pub(crate) fn reduce_broadcast<E: Real>(g: &[E], len: usize) -> Vec<E> {
    if len == g.len() {
        g.to_vec()
    } else {
        debug_assert_eq!(len, 1);
        let s: f64 = g.iter().map(|x| x.as_f64()).sum();
        vec![E::from_f64(s)]
    }
}

pub(crate) fn mul_backward<E: Real>(a: &Tensor<E>, b: &Tensor<E>, g: &[E]) -> (Vec<E>, Vec<E>) {
    if b.len() == 1 && a.len() != 1 {
        let s = b.data()[0];
        let da = g.iter().map(|&d| d * s).collect();
        let db: f64 = g
            .iter()
            .zip(a.data())
            .map(|(&d, &x)| (d * x).as_f64())
            .sum();
        (da, vec![E::from_f64(db)])
    } else {
        let da = g.iter().zip(b.data()).map(|(&d, &y)| d * y).collect();
        let db = g.iter().zip(a.data()).map(|(&d, &x)| d * x).collect();
        (da, db)
    }
}

fn channel_layout(shape: &[usize]) -> (usize, usize, usize) {
    let batch = shape[0];
    let channels = shape[1];
    let inner = shape[2..].iter().product();
    (batch, channels, inner)
}

pub(crate) fn channel_mul_backward<E: Real>(
    x: &Tensor<E>,
    v: &Tensor<E>,
    g: &[E],
) -> (Vec<E>, Vec<E>) {
    let (batch, channels, inner) = channel_layout(x.shape());
    let mut dx = vec![E::zero(); x.len()];
    let mut dv = vec![0.0f64; channels];
    for b in 0..batch {
        for c in 0..channels {
            let off = (b * channels + c) * inner;
            let vc = v.data()[c];
            for i in off..off + inner {
                dx[i] = g[i] * vc;
                dv[c] += (g[i] * x.data()[i]).as_f64();
            }
        }
    }
    (dx, dv.into_iter().map(E::from_f64).collect())
}

impl<E: Real> Tape<E> {
    fn binary(&mut self, name: &'static str, a: Var, b: Var) -> Result<()> {
        if broadcast_ok(self.shape(a), self.value(b)) {
            Ok(())
        } else {
            Err(AutodiffError::shape(name, self.shape(a), self.shape(b)))
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b)?;
        let y = zip_with(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push(y, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b)?;
        let y = zip_with(self.value(a), self.value(b), |x, y| x - y);
        Ok(self.push(y, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b)?;
        let y = zip_with(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push(y, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let s = E::from_f64(s);
        let y = self.value(a).map(|x| x * s);
        self.push(y, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let s = E::from_f64(s);
        let y = self.value(a).map(|x| x + s);
        self.push(y, Op::AddScalar(a, s))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let y = self.value(a).map(|x| E::one() / (E::one() + (-x).exp()));
        self.push(y, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let y = self.value(a).map(|x| if x > E::zero() { x } else { E::zero() });
        self.push(y, Op::Relu(a))
    }

    /// Multiplies `x` of shape `[B, C, ...]` by a per-channel vector `v` of shape `[C]`.
    pub fn channel_mul(&mut self, x: Var, v: Var) -> Result<Var> {
        let xs = self.shape(x);
        if xs.len() < 2 || self.shape(v) != [xs[1]] {
            return Err(AutodiffError::shape(
                "channel_mul",
                &[xs.get(1).copied().unwrap_or(0)],
                self.shape(v),
            ));
        }
        let (batch, channels, inner) = channel_layout(xs);
        let xv = self.value(x);
        let vv = self.value(v).data();
        let mut data = Vec::with_capacity(xv.len());
        for b in 0..batch {
            for (c, &vc) in vv.iter().enumerate() {
                let off = (b * channels + c) * inner;
                data.extend(xv.data()[off..off + inner].iter().map(|&a| a * vc));
            }
        }
        let y = Tensor::new(xv.shape().to_vec(), data).expect("shape preserved");
        Ok(self.push(y, Op::ChannelMul { x, v }))
    }
}
