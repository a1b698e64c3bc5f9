use spikerx_autodiff::{Real, Tape, Tensor, Var};

use crate::error::{Result, SpikeRxError};

/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` before logs.
pub const P_CLAMP: f64 = 1e-7;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `p̃ = mean_t sigmoid(logits_t)` on the tape.
pub fn aggregate_var<E: Real>(tape: &mut Tape<E>, logits: &[Var]) -> Result<Var> {
    let (&first, rest) = logits
        .split_first()
        .ok_or_else(|| SpikeRxError::config("aggregation needs at least one time step"))?;
    let mut acc = tape.sigmoid(first);
    for &l in rest {
        let p = tape.sigmoid(l);
        acc = tape.add(acc, p)?;
    }
    Ok(if logits.len() == 1 {
        acc
    } else {
        tape.scale(acc, 1.0 / logits.len() as f64)
    })
}

/// Mean per-step probability with DMRS rows removed.
///
/// `logits` are `[B, B_t, M, N]` per step; `data_rows[m]` marks data
/// symbols. The result is `[B, B_t, M', N]`.
pub fn aggregate<E: Real>(logits: &[Tensor<E>], data_rows: &[bool]) -> Result<Tensor<E>> {
    let first = logits
        .first()
        .ok_or_else(|| SpikeRxError::config("aggregation needs at least one time step"))?;
    let shape = first.shape();
    if shape.len() != 4 || shape[2] != data_rows.len() || logits.iter().any(|l| l.shape() != shape) {
        return Err(SpikeRxError::Shape {
            what: "aggregate",
            expected: vec![shape.first().copied().unwrap_or(0), 0, data_rows.len(), 0],
            got: shape.to_vec(),
        });
    }
    let (bt, m, n) = (shape[0] * shape[1], shape[2], shape[3]);
    let kept = data_rows.iter().filter(|&&d| d).count();
    let t = logits.len() as f64;
    let mut out = Vec::with_capacity(bt * kept * n);
    for plane in 0..bt {
        for row in (0..m).filter(|&r| data_rows[r]) {
            for col in 0..n {
                let i = (plane * m + row) * n + col;
                let p: f64 = logits.iter().map(|l| sigmoid(l.data()[i].as_f64())).sum::<f64>() / t;
                out.push(E::from_f64(p));
            }
        }
    }
    Ok(Tensor::new([shape[0], shape[1], kept, n], out)?)
}

/// `log(p / (1 - p))` after clamping.
pub fn llr_from_prob(p: f64) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    (p / (1.0 - p)).ln()
}

/// LLRs of sample `b` in payload order (data symbols, subcarriers, bits)
/// from probabilities `[B, B_t, M, N]`.
pub fn payload_llrs<E: Real>(p: &Tensor<E>, b: usize, data_rows: &[bool]) -> Vec<f64> {
    let s = p.shape();
    let (bits, m, n) = (s[1], s[2], s[3]);
    let mut out = Vec::with_capacity(bits * n * data_rows.len());
    for row in (0..m).filter(|&r| data_rows[r]) {
        for col in 0..n {
            for bit in 0..bits {
                let i = ((b * bits + bit) * m + row) * n + col;
                out.push(llr_from_prob(p.data()[i].as_f64()));
            }
        }
    }
    out
}
