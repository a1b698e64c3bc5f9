use crate::error::{AutodiffError, Result};
use crate::param::ParamStore;
use crate::real::Real;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl AdamW {
    /// Applies update number `t` (starting at 1) to every trainable parameter
    /// that carries a gradient.
    ///
    /// All gradients are checked before any value changes, so a non-finite
    /// gradient leaves the store untouched.
    pub fn step<E: Real>(&self, store: &mut ParamStore<E>, t: u64) -> Result<()> {
        if t == 0 {
            return Err(AutodiffError::invalid("adamw", "step counter starts at 1"));
        }
        for p in store.iter() {
            if let (true, Some(g)) = (p.trainable, p.tensor.grad()) {
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(AutodiffError::NonFiniteGradient(p.name.clone()));
                }
            }
        }
        let bc1 = 1.0 - self.beta1.powi(t as i32);
        let bc2 = 1.0 - self.beta2.powi(t as i32);
        let decay = 1.0 - self.lr * self.weight_decay;
        for p in store.iter_mut() {
            if !p.trainable {
                continue;
            }
            let Some(g) = p.tensor.grad().map(<[E]>::to_vec) else {
                continue;
            };
            let (m, v) = (&mut p.m, &mut p.v);
            for (i, w) in p.tensor.data_mut().iter_mut().enumerate() {
                let gi = g[i].as_f64();
                let mi = self.beta1 * m[i].as_f64() + (1.0 - self.beta1) * gi;
                let vi = self.beta2 * v[i].as_f64() + (1.0 - self.beta2) * gi * gi;
                m[i] = E::from_f64(mi);
                v[i] = E::from_f64(vi);
                let mhat = mi / bc1;
                let vhat = vi / bc2;
                let wi = w.as_f64() * decay - self.lr * mhat / (vhat.sqrt() + self.eps);
                *w = E::from_f64(wi);
            }
        }
        Ok(())
    }
}
