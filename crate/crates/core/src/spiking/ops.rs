use rand::Rng;
use spikerx_autodiff::{CustomOp, Real, Tape, Tensor, Var};

use super::neuron::{heaviside, membrane_kernel, NeuronConfig, NeuronVariant};
use super::surrogate::{Surrogate, SurrogateKind};
use crate::error::{Result, SpikeRxError};

/// Forward behaviour of spike nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpikeMode {
    /// Heaviside forward, surrogate backward.
    #[default]
    Heaviside,
    /// `sigmoid(U - θ)` forward with its exact derivative; used to compare
    /// tape gradients against finite differences.
    Relaxed,
}

struct MembraneOp {
    lapicque_r: Option<f64>,
    theta: f64,
}

impl<E: Real> CustomOp<E> for MembraneOp {
    fn name(&self) -> &'static str {
        "lif_membrane"
    }

    fn backward(&self, inputs: &[&Tensor<E>], _: &Tensor<E>, g: &[E]) -> Vec<Option<Vec<E>>> {
        let (u, i, beta) = (inputs[0].data(), inputs[1].data(), inputs[2].data()[0]);
        let scale = match self.lapicque_r {
            Some(r) => (E::one() - beta) * E::from_f64(r),
            None => E::one(),
        };
        let r = E::from_f64(self.lapicque_r.unwrap_or(0.0));
        let mut d_beta = 0.0f64;
        for k in 0..g.len() {
            d_beta += (g[k] * (u[k] - r * i[k])).as_f64();
        }
        let mut grads = vec![
            Some(g.iter().map(|&d| d * beta).collect()),
            Some(g.iter().map(|&d| d * scale).collect()),
            Some(vec![E::from_f64(d_beta)]),
        ];
        if inputs.len() == 4 {
            let theta = E::from_f64(self.theta);
            grads.push(Some(g.iter().map(|&d| E::zero() - d * theta).collect()));
        }
        grads
    }
}

/// Tape handles for one membrane update.
#[derive(Debug, Clone, Copy)]
pub struct MembraneInputs {
    pub u_prev: Var,
    pub current: Var,
    /// Decay as a one-element tensor (a constant unless learnable).
    pub beta: Var,
    /// Spikes of the previous step; `None` before the first step.
    pub s_prev: Option<Var>,
}

/// Records `U' = beta U + scale I - S_prev θ`.
///
/// With `detach_reset` the reset term is treated as a constant, so no
/// gradient reaches the previous spikes through it.
pub fn membrane<E: Real>(
    tape: &mut Tape<E>,
    inputs: MembraneInputs,
    cfg: &NeuronConfig,
    detach_reset: bool,
) -> Result<Var> {
    let u = tape.value(inputs.u_prev);
    let i = tape.value(inputs.current);
    let zeros;
    let s_prev = match inputs.s_prev {
        Some(s) => tape.value(s).data(),
        None => {
            zeros = vec![E::zero(); i.len()];
            &zeros
        }
    };
    if u.shape() != i.shape() || s_prev.len() != i.len() {
        return Err(SpikeRxError::Shape {
            what: "membrane update",
            expected: i.shape().to_vec(),
            got: u.shape().to_vec(),
        });
    }
    let beta = tape.value(inputs.beta).data()[0];
    let lapicque_r = (cfg.variant == NeuronVariant::Lapicque).then_some(cfg.r);
    let scale = E::from_f64(cfg.input_scale(beta.as_f64()));
    let out = membrane_kernel(u.data(), i.data(), s_prev, beta, scale, E::from_f64(cfg.theta));
    let out = Tensor::new(i.shape().to_vec(), out)?;
    let mut vars = vec![inputs.u_prev, inputs.current, inputs.beta];
    if let (Some(s), false) = (inputs.s_prev, detach_reset) {
        vars.push(s);
    }
    Ok(tape.custom(
        &vars,
        out,
        Box::new(MembraneOp {
            lapicque_r,
            theta: cfg.theta,
        }),
    ))
}

struct SpikeOp {
    surrogate: Surrogate,
    theta: f64,
    mask: Option<Vec<u8>>,
    relaxed: bool,
}

impl<E: Real> CustomOp<E> for SpikeOp {
    fn name(&self) -> &'static str {
        "spike"
    }

    fn backward(&self, inputs: &[&Tensor<E>], _: &Tensor<E>, g: &[E]) -> Vec<Option<Vec<E>>> {
        let u = inputs[0].data();
        let grad: Vec<E> = if self.relaxed {
            let sig = Surrogate::of(SurrogateKind::Sigmoid);
            u.iter()
                .zip(g)
                .map(|(&u, &d)| d * E::from_f64(sig.grad(u.as_f64(), self.theta)))
                .collect()
        } else if let Some(mask) = &self.mask {
            g.iter()
                .zip(mask)
                .map(|(&d, &m)| if m == 1 { d } else { E::zero() })
                .collect()
        } else {
            u.iter()
                .zip(g)
                .map(|(&u, &d)| d * E::from_f64(self.surrogate.grad(u.as_f64(), self.theta)))
                .collect()
        };
        vec![Some(grad)]
    }
}

/// Records the spike nonlinearity on membrane potential `u`.
///
/// The SSO surrogate draws its mask from `rng` at record time.
pub fn spike<E: Real, R: Rng + ?Sized>(
    tape: &mut Tape<E>,
    u: Var,
    cfg: &NeuronConfig,
    mode: SpikeMode,
    rng: Option<&mut R>,
) -> Result<Var> {
    let value = tape.value(u);
    let theta = cfg.theta;
    let relaxed = mode == SpikeMode::Relaxed;
    let out = if relaxed {
        value.map(|v| E::from_f64(1.0 / (1.0 + (theta - v.as_f64()).exp())))
    } else {
        Tensor::new(value.shape().to_vec(), heaviside(value.data(), E::from_f64(theta)))?
    };
    let mask = if !relaxed && cfg.surrogate.kind == SurrogateKind::Sso && tape.requires_grad(u) {
        let rng = rng.ok_or_else(|| {
            SpikeRxError::config("the sso surrogate needs a random generator")
        })?;
        Some(cfg.surrogate.sso_mask(value.len(), rng))
    } else {
        None
    };
    Ok(tape.custom(
        &[u],
        out,
        Box::new(SpikeOp {
            surrogate: cfg.surrogate,
            theta,
            mask,
            relaxed,
        }),
    ))
}
