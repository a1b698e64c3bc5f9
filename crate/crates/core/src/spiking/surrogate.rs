use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use spikerx_autodiff::{Real, Tensor};

use crate::error::{Result, SpikeRxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    /// `e^(θ-U) / (e^(θ-U) + 1)^2`
    Sigmoid,
    /// `1 / (slope |U-θ| + 1)^2`
    FastSigmoid,
    /// Fast sigmoid, zero below `θ - sfs_gate`.
    SparseFastSigmoid,
    /// `1 / (1 + (arctan_slope (U-θ))^2)`
    Arctan,
    /// Random Bernoulli pass-through mask.
    Sso,
    /// 1 above threshold, `lso_leak` below.
    Lso,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 6] = [
        SurrogateKind::Sigmoid,
        SurrogateKind::FastSigmoid,
        SurrogateKind::SparseFastSigmoid,
        SurrogateKind::Arctan,
        SurrogateKind::Sso,
        SurrogateKind::Lso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurrogateKind::Sigmoid => "sigmoid",
            SurrogateKind::FastSigmoid => "fast_sigmoid",
            SurrogateKind::SparseFastSigmoid => "sparse_fast_sigmoid",
            SurrogateKind::Arctan => "arctan",
            SurrogateKind::Sso => "sso",
            SurrogateKind::Lso => "lso",
        }
    }
}

/// Backward rule of the spike node. The forward pass is always a
/// Heaviside step; these fields only shape the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Surrogate {
    pub kind: SurrogateKind,
    pub slope: f64,
    pub arctan_slope: f64,
    pub sfs_gate: f64,
    pub lso_leak: f64,
    pub sso_p: f64,
}

impl Default for Surrogate {
    fn default() -> Self {
        Surrogate {
            kind: SurrogateKind::Arctan,
            slope: 25.0,
            arctan_slope: PI,
            sfs_gate: 1.0,
            lso_leak: 0.1,
            sso_p: 0.5,
        }
    }
}

impl Surrogate {
    pub fn of(kind: SurrogateKind) -> Self {
        Surrogate {
            kind,
            ..Surrogate::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slope", self.slope),
            ("arctan_slope", self.arctan_slope),
            ("sfs_gate", self.sfs_gate),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SpikeRxError::config(format!(
                    "surrogate {name} must be positive, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.lso_leak) || !(0.0..=1.0).contains(&self.sso_p) {
            return Err(SpikeRxError::config(
                "surrogate lso_leak and sso_p must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Deterministic derivative at membrane potential `u`.
    ///
    /// For [`SurrogateKind::Sso`] this is the expected mask value `sso_p`;
    /// the spike node draws the actual mask.
    pub fn grad(&self, u: f64, theta: f64) -> f64 {
        let x = u - theta;
        match self.kind {
            SurrogateKind::Sigmoid => {
                let e = (-x).exp();
                if e.is_infinite() {
                    0.0
                } else {
                    e / ((e + 1.0) * (e + 1.0))
                }
            }
            SurrogateKind::FastSigmoid => 1.0 / (self.slope * x.abs() + 1.0).powi(2),
            SurrogateKind::SparseFastSigmoid => {
                if u < theta - self.sfs_gate {
                    0.0
                } else {
                    1.0 / (self.slope * x.abs() + 1.0).powi(2)
                }
            }
            SurrogateKind::Arctan => 1.0 / (1.0 + (self.arctan_slope * x).powi(2)),
            SurrogateKind::Sso => self.sso_p,
            SurrogateKind::Lso => {
                if u > theta {
                    1.0
                } else {
                    self.lso_leak
                }
            }
        }
    }

    /// Draws the pass-through mask of one SSO spike node.
    pub fn sso_mask<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<u8> {
        (0..len).map(|_| u8::from(rng.random_bool(self.sso_p))).collect()
    }
}

/// Elementwise surrogate derivative; SSO draws its mask from `rng`.
pub fn surrogate_grad<E: Real, R: Rng + ?Sized>(
    u: &Tensor<E>,
    surrogate: &Surrogate,
    theta: f64,
    rng: Option<&mut R>,
) -> Result<Tensor<E>> {
    if surrogate.kind == SurrogateKind::Sso {
        let rng = rng.ok_or_else(|| {
            SpikeRxError::config("the sso surrogate needs a random generator")
        })?;
        let mask = surrogate.sso_mask(u.len(), rng);
        return Ok(Tensor::new(
            u.shape().to_vec(),
            mask.into_iter().map(|m| E::from_f64(f64::from(m))).collect(),
        )?);
    }
    Ok(u.map(|v| E::from_f64(surrogate.grad(v.as_f64(), theta))))
}
