use serde::{Deserialize, Serialize};
use spikerx_autodiff::{conv2d_forward, Real, Tensor};

use super::surrogate::Surrogate;
use crate::error::{Result, SpikeRxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronVariant {
    Leaky,
    Lapicque,
    RleakyOne2one,
    RleakyAll2all,
}

impl NeuronVariant {
    pub const ALL: [NeuronVariant; 4] = [
        NeuronVariant::Leaky,
        NeuronVariant::Lapicque,
        NeuronVariant::RleakyOne2one,
        NeuronVariant::RleakyAll2all,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NeuronVariant::Leaky => "leaky",
            NeuronVariant::Lapicque => "lapicque",
            NeuronVariant::RleakyOne2one => "rleaky_one2one",
            NeuronVariant::RleakyAll2all => "rleaky_all2all",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, NeuronVariant::RleakyOne2one | NeuronVariant::RleakyAll2all)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronConfig {
    pub variant: NeuronVariant,
    /// Membrane decay per step.
    pub beta: f64,
    /// Lapicque resistance.
    pub r: f64,
    /// Lapicque capacitance; when set, `beta = exp(-1 / (r c))`.
    pub c: Option<f64>,
    pub theta: f64,
    pub beta_learnable: bool,
    pub surrogate: Surrogate,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        NeuronConfig {
            variant: NeuronVariant::Leaky,
            beta: 0.97,
            r: 1.0,
            c: None,
            theta: 1.0,
            beta_learnable: false,
            surrogate: Surrogate::default(),
        }
    }
}

impl NeuronConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(SpikeRxError::config(format!(
                "neuron theta must be positive, got {}",
                self.theta
            )));
        }
        if self.variant == NeuronVariant::Lapicque
            && (!(self.r > 0.0) || self.c.is_some_and(|c| !(c > 0.0))) {
                return Err(SpikeRxError::config(
                    "lapicque neuron needs positive r and c",
                ));
            }
        let beta = self.effective_beta();
        if !(beta > 0.0 && beta < 1.0) {
            return Err(SpikeRxError::config(format!(
                "neuron beta must lie in (0, 1), got {beta}"
            )));
        }
        self.surrogate.validate()
    }

    /// Decay rate; derived from `r` and `c` for a Lapicque neuron with `c` set.
    pub fn effective_beta(&self) -> f64 {
        match (self.variant, self.c) {
            (NeuronVariant::Lapicque, Some(c)) => (-1.0 / (self.r * c)).exp(),
            _ => self.beta,
        }
    }

    /// Gain applied to the input current for decay `beta`.
    pub fn input_scale(&self, beta: f64) -> f64 {
        match self.variant {
            NeuronVariant::Lapicque => (1.0 - beta) * self.r,
            _ => 1.0,
        }
    }
}

/// Membrane potentials and previous spikes of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState<E: Real = f32> {
    pub u: Tensor<E>,
    pub s_prev: Tensor<E>,
}

impl<E: Real> NeuronState<E> {
    /// `U = 0`, `S = 0`.
    pub fn zeros(shape: &[usize]) -> Self {
        NeuronState {
            u: Tensor::zeros(shape.to_vec()),
            s_prev: Tensor::zeros(shape.to_vec()),
        }
    }
}

/// Recurrent weights of an RLeaky layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Recurrent<E: Real = f32> {
    /// One weight per channel (or per neuron when shaped like the state).
    One2One(Tensor<E>),
    /// Convolution kernel `[C, C, K, K]` applied to the previous spikes.
    All2All(Tensor<E>),
}

/// `u' = beta u + scale i - s theta`, evaluated left to right.
pub(crate) fn membrane_kernel<E: Real>(
    u: &[E],
    i: &[E],
    s_prev: &[E],
    beta: E,
    scale: E,
    theta: E,
) -> Vec<E> {
    u.iter()
        .zip(i)
        .zip(s_prev)
        .map(|((&u, &i), &s)| beta * u + scale * i - s * theta)
        .collect()
}

pub(crate) fn heaviside<E: Real>(u: &[E], theta: E) -> Vec<E> {
    u.iter()
        .map(|&v| if v > theta { E::one() } else { E::zero() })
        .collect()
}

/// One step of a leaky or Lapicque neuron with reset by subtraction.
///
/// Returns the new state (whose `s_prev` holds the emitted spikes) and the
/// spikes.
pub fn lif_step<E: Real>(
    state: &NeuronState<E>,
    input: &Tensor<E>,
    cfg: &NeuronConfig,
) -> Result<(NeuronState<E>, Tensor<E>)> {
    for (what, t) in [("membrane", &state.u), ("previous spikes", &state.s_prev)] {
        if t.shape() != input.shape() {
            return Err(SpikeRxError::Shape {
                what,
                expected: input.shape().to_vec(),
                got: t.shape().to_vec(),
            });
        }
    }
    let beta = cfg.effective_beta();
    let u = membrane_kernel(
        state.u.data(),
        input.data(),
        state.s_prev.data(),
        E::from_f64(beta),
        E::from_f64(cfg.input_scale(beta)),
        E::from_f64(cfg.theta),
    );
    let spikes = heaviside(&u, E::from_f64(cfg.theta));
    let shape = input.shape().to_vec();
    let spikes = Tensor::new(shape.clone(), spikes)?;
    Ok((
        NeuronState {
            u: Tensor::new(shape, u)?,
            s_prev: spikes.clone(),
        },
        spikes,
    ))
}

/// Feedback current of an RLeaky layer for previous spikes `s_prev`.
pub(crate) fn feedback<E: Real>(s_prev: &Tensor<E>, v: &Recurrent<E>) -> Result<Tensor<E>> {
    match v {
        Recurrent::One2One(w) if w.len() == s_prev.len() => Ok(Tensor::new(
            s_prev.shape().to_vec(),
            s_prev.data().iter().zip(w.data()).map(|(&s, &w)| s * w).collect(),
        )?),
        Recurrent::One2One(w) => {
            let shape = s_prev.shape();
            if shape.len() < 2 || shape[1] != w.len() {
                return Err(SpikeRxError::Shape {
                    what: "one-to-one recurrent weights",
                    expected: vec![shape.get(1).copied().unwrap_or(0)],
                    got: w.shape().to_vec(),
                });
            }
            let inner: usize = shape[2..].iter().product();
            Ok(Tensor::from_fn(shape.to_vec(), |i| {
                s_prev.data()[i] * w.data()[(i / inner) % w.len()]
            }))
        }
        Recurrent::All2All(k) => Ok(conv2d_forward(s_prev, k, None)?),
    }
}

/// One step of a recurrent leaky neuron: the previous spikes are fed back
/// through `v` and added to the input current before the leaky update.
pub fn rleaky_step<E: Real>(
    state: &NeuronState<E>,
    input: &Tensor<E>,
    v: Option<&Recurrent<E>>,
    cfg: &NeuronConfig,
) -> Result<(NeuronState<E>, Tensor<E>)> {
    let v = v.ok_or_else(|| SpikeRxError::config("recurrent neuron needs weights V"))?;
    let fb = feedback(&state.s_prev, v)?;
    if fb.shape() != input.shape() {
        return Err(SpikeRxError::Shape {
            what: "recurrent feedback",
            expected: input.shape().to_vec(),
            got: fb.shape().to_vec(),
        });
    }
    let total = Tensor::new(
        input.shape().to_vec(),
        input.data().iter().zip(fb.data()).map(|(&a, &b)| a + b).collect(),
    )?;
    lif_step(state, &total, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::new([1, 1, 1, 1], vec![v]).unwrap()
    }

    fn leaky(beta: f64) -> NeuronConfig {
        NeuronConfig {
            beta,
            ..NeuronConfig::default()
        }
    }

    #[test]
    fn zero_dynamics() {
        for beta in [0.1, 0.5, 0.97] {
            let s = NeuronState::<f64>::zeros(&[1, 1, 1, 1]);
            let (s2, spk) = lif_step(&s, &scalar(0.0), &leaky(beta)).unwrap();
            assert_eq!(s2.u.data(), &[0.0]);
            assert_eq!(spk.data(), &[0.0]);
        }
    }

    #[test]
    fn fire_then_reset() {
        let cfg = leaky(0.9);
        let s = NeuronState::<f64>::zeros(&[1, 1, 1, 1]);
        let (s, spk) = lif_step(&s, &scalar(2.0), &cfg).unwrap();
        assert_eq!((s.u.data()[0], spk.data()[0]), (2.0, 1.0));
        let (s, spk) = lif_step(&s, &scalar(0.0), &cfg).unwrap();
        assert!((s.u.data()[0] - 0.8).abs() < 1e-15);
        assert_eq!(spk.data()[0], 0.0);
    }

    #[test]
    fn geometric_decay_without_spikes() {
        let cfg = leaky(0.5);
        let mut s = NeuronState {
            u: scalar(0.8),
            s_prev: scalar(0.0),
        };
        for want in [0.4, 0.2, 0.1] {
            let (next, spk) = lif_step(&s, &scalar(0.0), &cfg).unwrap();
            assert_eq!(next.u.data()[0], want);
            assert_eq!(spk.data()[0], 0.0);
            s = next;
        }
    }

    #[test]
    fn threshold_tie_does_not_fire() {
        let s = NeuronState::<f64>::zeros(&[1, 1, 1, 1]);
        let (_, spk) = lif_step(&s, &scalar(1.0), &leaky(0.9)).unwrap();
        assert_eq!(spk.data()[0], 0.0);
    }

    #[test]
    fn lapicque_matches_leaky_decay() {
        let beta: f64 = 0.8;
        let rc = -1.0 / beta.ln();
        let lap = NeuronConfig {
            variant: NeuronVariant::Lapicque,
            r: 2.0,
            c: Some(rc / 2.0),
            ..NeuronConfig::default()
        };
        assert!((lap.effective_beta() - beta).abs() < 1e-12);
        let s = NeuronState {
            u: scalar(0.6),
            s_prev: scalar(0.0),
        };
        let (a, _) = lif_step(&s, &scalar(0.0), &lap).unwrap();
        let (b, _) = lif_step(&s, &scalar(0.0), &leaky(beta)).unwrap();
        assert!((a.u.data()[0] - b.u.data()[0]).abs() < 1e-12);
        // input scaled by (1 - beta) R
        let (c, _) = lif_step(&NeuronState::zeros(&[1, 1, 1, 1]), &scalar(1.0), &lap).unwrap();
        assert!((c.u.data()[0] - 0.2 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn rleaky_one2one_hand_case() {
        let cfg = NeuronConfig {
            variant: NeuronVariant::RleakyOne2one,
            beta: 0.9,
            ..NeuronConfig::default()
        };
        let s = NeuronState {
            u: scalar(0.0),
            s_prev: scalar(1.0),
        };
        let v = Recurrent::One2One(Tensor::new([1], vec![0.5]).unwrap());
        let (next, spk) = rleaky_step(&s, &scalar(0.6), Some(&v), &cfg).unwrap();
        assert!((next.u.data()[0] - 0.1).abs() < 1e-12);
        assert_eq!(spk.data()[0], 0.0);
        assert!(rleaky_step(&s, &scalar(0.6), None, &cfg).is_err());
    }

    #[test]
    fn rleaky_without_feedback_equals_lif() {
        let cfg = leaky(0.9);
        let shape = [1, 2, 3, 3];
        let input = Tensor::<f64>::from_fn(shape, |i| (i as f64 * 0.37).sin() * 2.0);
        let s = NeuronState {
            u: Tensor::from_fn(shape, |i| (i as f64 * 0.11).cos()),
            s_prev: Tensor::from_fn(shape, |i| (i % 2) as f64),
        };
        let zero_v = Recurrent::All2All(Tensor::zeros([2, 2, 3, 3]));
        let a = rleaky_step(&s, &input, Some(&zero_v), &cfg).unwrap();
        let b = lif_step(&s, &input, &cfg).unwrap();
        assert_eq!(a, b);
        let quiet = NeuronState {
            s_prev: Tensor::zeros(shape),
            ..s
        };
        let any_v = Recurrent::One2One(Tensor::full([2], 3.0));
        assert_eq!(
            rleaky_step(&quiet, &input, Some(&any_v), &cfg).unwrap(),
            lif_step(&quiet, &input, &cfg).unwrap()
        );
    }

    #[test]
    fn shape_mismatch_errors() {
        let s = NeuronState::<f32>::zeros(&[1, 1, 2, 2]);
        assert!(lif_step(&s, &Tensor::zeros([1, 1, 2, 3]), &NeuronConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(NeuronConfig::default().validate().is_ok());
        assert!(leaky(1.0).validate().is_err());
        let bad = NeuronConfig {
            theta: 0.0,
            ..NeuronConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn reset_subtracts_exactly_theta(u in -3.0f64..3.0, i in -3.0f64..3.0, beta in 0.05f64..0.95, theta in 0.25f64..2.0) {
            let cfg = NeuronConfig { beta, theta, ..NeuronConfig::default() };
            let fired = NeuronState { u: scalar(u), s_prev: scalar(1.0) };
            let quiet = NeuronState { u: scalar(u), s_prev: scalar(0.0) };
            let (a, sa) = lif_step(&fired, &scalar(i), &cfg).unwrap();
            let (b, _) = lif_step(&quiet, &scalar(i), &cfg).unwrap();
            proptest::prop_assert!((b.u.data()[0] - a.u.data()[0] - theta).abs() < 1e-12);
            proptest::prop_assert!(sa.data()[0] == 0.0 || sa.data()[0] == 1.0);
        }

        #[test]
        fn free_decay_is_geometric(u0 in -1.0f64..1.0, beta in 0.05f64..0.99, steps in 1usize..30) {
            let cfg = NeuronConfig { beta, ..NeuronConfig::default() };
            let mut s = NeuronState { u: scalar(u0), s_prev: scalar(0.0) };
            let mut expect = u0;
            for _ in 0..steps {
                let (next, spk) = lif_step(&s, &scalar(0.0), &cfg).unwrap();
                expect *= beta;
                proptest::prop_assert_eq!(spk.data()[0], 0.0);
                proptest::prop_assert!((next.u.data()[0] - expect).abs() < 1e-12);
                s = next;
            }
        }
    }
}
