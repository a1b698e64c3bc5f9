use spikerx_autodiff::{CustomOp, Real, Tape, Tensor, Var};

use crate::error::{Result, SpikeRxError};
use crate::receiver::P_CLAMP;

fn clamp(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

fn check(p: usize, labels: &[u8], mask: &[bool]) -> Result<usize> {
    if labels.len() != p || mask.len() != p {
        return Err(SpikeRxError::Shape {
            what: "bce inputs",
            expected: vec![p, p],
            got: vec![labels.len(), mask.len()],
        });
    }
    if let Some(&b) = labels.iter().find(|&&b| b > 1) {
        return Err(SpikeRxError::InvalidLabel(b));
    }
    match mask.iter().filter(|&&m| m).count() {
        0 => Err(SpikeRxError::config("bce mask selects no bits")),
        n => Ok(n),
    }
}

/// Mean binary cross-entropy over the masked bits.
pub fn bce_loss<E: Real>(p: &[E], labels: &[u8], mask: &[bool]) -> Result<f64> {
    let count = check(p.len(), labels, mask)?;
    let mut sum = 0.0;
    for ((&p, &b), &m) in p.iter().zip(labels).zip(mask) {
        if m {
            let p = clamp(p.as_f64());
            sum -= if b == 1 { p.ln() } else { (1.0 - p).ln() };
        }
    }
    Ok(sum / count as f64)
}

struct BceOp {
    labels: Vec<u8>,
    mask: Vec<bool>,
    count: usize,
}

impl<E: Real> CustomOp<E> for BceOp {
    fn name(&self) -> &'static str {
        "bce"
    }

    fn backward(&self, inputs: &[&Tensor<E>], _: &Tensor<E>, g: &[E]) -> Vec<Option<Vec<E>>> {
        let scale = g[0].as_f64() / self.count as f64;
        let grad = inputs[0]
            .data()
            .iter()
            .zip(&self.labels)
            .zip(&self.mask)
            .map(|((&p, &b), &m)| {
                if !m {
                    return E::zero();
                }
                let p = clamp(p.as_f64());
                let d = if b == 1 { -1.0 / p } else { 1.0 / (1.0 - p) };
                E::from_f64(d * scale)
            })
            .collect();
        vec![Some(grad)]
    }
}

/// Records the masked BCE of probabilities `p` on the tape.
pub fn bce_var<E: Real>(tape: &mut Tape<E>, p: Var, labels: &[u8], mask: &[bool]) -> Result<Var> {
    let value = bce_loss(tape.value(p).data(), labels, mask)?;
    let count = check(tape.value(p).len(), labels, mask)?;
    Ok(tape.custom(
        &[p],
        Tensor::scalar(E::from_f64(value)),
        Box::new(BceOp {
            labels: labels.to_vec(),
            mask: mask.to_vec(),
            count,
        }),
    ))
}
