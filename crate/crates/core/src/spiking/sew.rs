use serde::{Deserialize, Serialize};
use spikerx_autodiff::{Real, Tape, Tensor, Var};

use crate::error::{Result, SpikeRxError};

/// How a SEW block merges its input spikes `I` with branch spikes `O`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SewOp {
    /// `I + O`
    #[serde(alias = "ADD")]
    Add,
    /// `I O`
    #[serde(alias = "AND")]
    And,
    /// `(1 - I) O`
    #[serde(alias = "IAND")]
    Iand,
}

impl SewOp {
    pub const ALL: [SewOp; 3] = [SewOp::Add, SewOp::And, SewOp::Iand];

    pub fn name(self) -> &'static str {
        match self {
            SewOp::Add => "add",
            SewOp::And => "and",
            SewOp::Iand => "iand",
        }
    }
}

fn check_binary<E: Real>(t: &Tensor<E>, what: &str) -> Result<()> {
    if cfg!(debug_assertions) {
        if let Some(v) = t.data().iter().find(|&&v| v != E::zero() && v != E::one()) {
            return Err(SpikeRxError::config(format!(
                "{what} spikes must be binary, found {v}"
            )));
        }
    }
    Ok(())
}

/// Elementwise combination of two spike tensors.
pub fn sew_combine<E: Real>(i: &Tensor<E>, o: &Tensor<E>, op: SewOp) -> Result<Tensor<E>> {
    if i.shape() != o.shape() {
        return Err(SpikeRxError::Shape {
            what: "sew_combine",
            expected: i.shape().to_vec(),
            got: o.shape().to_vec(),
        });
    }
    check_binary(i, "identity")?;
    check_binary(o, "branch")?;
    let f = |a: E, b: E| match op {
        SewOp::Add => a + b,
        SewOp::And => a * b,
        SewOp::Iand => (E::one() - a) * b,
    };
    Ok(Tensor::new(
        i.shape().to_vec(),
        i.data().iter().zip(o.data()).map(|(&a, &b)| f(a, b)).collect(),
    )?)
}

/// Tape version; gradients follow the algebraic form of each operation.
pub fn sew_combine_var<E: Real>(tape: &mut Tape<E>, i: Var, o: Var, op: SewOp) -> Result<Var> {
    Ok(match op {
        SewOp::Add => tape.add(i, o)?,
        SewOp::And => tape.mul(i, o)?,
        SewOp::Iand => {
            let io = tape.mul(i, o)?;
            tape.sub(o, io)?
        }
    })
}
