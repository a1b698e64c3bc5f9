use serde::{Deserialize, Serialize};
use spikerx_autodiff::{CustomOp, Real, Tape, Tensor, Var};

use crate::error::{Result, SpikeRxError};

/// Per-tensor symmetric weight quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerConfig {
    pub bits: u32,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        QuantizerConfig { bits: 8 }
    }
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=32).contains(&self.bits) {
            return Err(SpikeRxError::config(format!(
                "quantizer bits must lie in 2..=32, got {}",
                self.bits
            )));
        }
        Ok(())
    }

    /// Lowest integer level `l_o`.
    pub fn lower(&self) -> f64 {
        -(2f64.powi(self.bits as i32 - 1))
    }

    /// Highest integer level `u_p`.
    pub fn upper(&self) -> f64 {
        2f64.powi(self.bits as i32 - 1) - 1.0
    }

    /// `max|W| / u_p`, or 1 for an all-zero tensor.
    pub fn scale<E: Real>(&self, w: &[E]) -> f64 {
        let max = w.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
        if max == 0.0 {
            1.0
        } else {
            max / self.upper()
        }
    }

    /// `s * clip(round(w / s), l_o, u_p)`, rounding half away from zero.
    pub fn quantize_value(&self, w: f64, s: f64) -> f64 {
        s * (w / s).round().clamp(self.lower(), self.upper())
    }

    /// Whether the straight-through gradient passes at `w`.
    pub fn passes(&self, w: f64, s: f64) -> bool {
        let r = w / s;
        self.lower() <= r && r <= self.upper()
    }
}

/// Quantizes `w` with an explicit scale.
pub fn quantize_with_scale<E: Real>(w: &Tensor<E>, s: f64, q: &QuantizerConfig) -> Result<Tensor<E>> {
    if !(s > 0.0) {
        return Err(SpikeRxError::config(format!("quantizer scale must be positive, got {s}")));
    }
    Ok(w.map(|v| E::from_f64(q.quantize_value(v.as_f64(), s))))
}

/// Quantizes `w` with the scale derived from its own range.
pub fn quantize_weights<E: Real>(w: &Tensor<E>, q: &QuantizerConfig) -> Result<Tensor<E>> {
    quantize_with_scale(w, q.scale(w.data()), q)
}

/// Straight-through gradient: `g` where `l_o <= w/s <= u_p`, else 0.
pub fn ste_backward<E: Real>(grad_out: &[E], w: &[E], s: f64, q: &QuantizerConfig) -> Vec<E> {
    grad_out
        .iter()
        .zip(w)
        .map(|(&g, &w)| if q.passes(w.as_f64(), s) { g } else { E::zero() })
        .collect()
}

struct QuantizeOp {
    cfg: QuantizerConfig,
    scale: f64,
}

impl<E: Real> CustomOp<E> for QuantizeOp {
    fn name(&self) -> &'static str {
        "quantize_ste"
    }

    fn backward(&self, inputs: &[&Tensor<E>], _: &Tensor<E>, g: &[E]) -> Vec<Option<Vec<E>>> {
        vec![Some(ste_backward(g, inputs[0].data(), self.scale, &self.cfg))]
    }
}

/// Records the quantized copy of `w`; its backward is the straight-through
/// estimator.
pub fn quantize_var<E: Real>(tape: &mut Tape<E>, w: Var, q: &QuantizerConfig) -> Result<Var> {
    let value = tape.value(w);
    let scale = q.scale(value.data());
    let out = quantize_with_scale(value, scale, q)?;
    Ok(tape.custom(&[w], out, Box::new(QuantizeOp { cfg: *q, scale })))
}
