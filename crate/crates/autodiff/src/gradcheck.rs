//! Central finite-difference check of tape gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AutodiffError, Result};
use crate::param::ParamStore;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Perturbation applied in both directions.
    pub step: f64,
    /// Largest number of coordinates probed per parameter.
    pub max_probes: usize,
    pub seed: u64,
    /// Lower bound of the relative-error denominator.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-3,
            max_probes: 16,
            seed: 0,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub probes: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares analytic gradients of the scalar built by `f` against central
/// differences for every trainable parameter in `store`.
///
/// `f` is called once for the analytic pass and twice per probe; it must be
/// a deterministic function of the parameter values.
pub fn grad_check<F>(
    store: &mut ParamStore<f64>,
    mut f: F,
    opts: GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape<f64>, &mut ParamStore<f64>) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new();
        let loss = f(&mut tape, store)?;
        tape.backward(loss)?;
        tape.write_param_grads(store);
        store
            .iter()
            .map(|p| p.tensor.grad().map(<[f64]>::to_vec))
            .collect::<Vec<_>>()
    };

    let mut eval = |store: &mut ParamStore<f64>| -> Result<f64> {
        let mut tape = Tape::new();
        let loss = f(&mut tape, store)?;
        tape.value(loss)
            .item()
            .ok_or_else(|| AutodiffError::NonScalarLoss(tape.shape(loss).to_vec()))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = Vec::new();
    let ids: Vec<_> = store.ids().collect();
    for (id, grad) in ids.into_iter().zip(analytic) {
        let (Some(grad), true) = (grad, store.get(id).trainable) else {
            continue;
        };
        let n = grad.len();
        let probes: Vec<usize> = if n <= opts.max_probes {
            (0..n).collect()
        } else {
            sample(&mut rng, n, opts.max_probes).into_vec()
        };
        let mut check = ParamCheck {
            name: store.get(id).name.clone(),
            probes: probes.len(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in probes {
            let orig = store.get(id).tensor.data()[i];
            store.get_mut(id).tensor.data_mut()[i] = orig + opts.step;
            let plus = eval(store);
            store.get_mut(id).tensor.data_mut()[i] = orig - opts.step;
            let minus = eval(store);
            store.get_mut(id).tensor.data_mut()[i] = orig;
            let numeric = (plus? - minus?) / (2.0 * opts.step);
            let err = relative_error(grad[i], numeric, opts.floor);
            if err >= check.max_rel_error {
                check.max_rel_error = err;
                check.worst_index = i;
                check.analytic = grad[i];
                check.numeric = numeric;
            }
        }
        report.push(check);
    }
    Ok(GradCheckReport { params: report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::batch_norm::{BatchNormStats, NormMode};
    use crate::tensor::Tensor;
    use crate::ParamId;

    struct Net {
        kernel: ParamId,
        bias: ParamId,
        gamma: ParamId,
        beta: ParamId,
        mean: ParamId,
        var: ParamId,
    }

    fn build() -> (ParamStore<f64>, Net) {
        let mut s = ParamStore::new();
        let net = Net {
            kernel: s.add(
                "kernel",
                Tensor::from_fn([3, 2, 3, 3], |i| ((i * 7) % 13) as f64 / 13.0 - 0.5),
                true,
            ),
            bias: s.add("bias", Tensor::new([3], vec![0.1, -0.2, 0.05]).unwrap(), true),
            gamma: s.add("gamma", Tensor::new([3], vec![1.0, 0.7, 1.3]).unwrap(), true),
            beta: s.add("beta", Tensor::new([3], vec![0.0, 0.2, -0.1]).unwrap(), true),
            mean: s.add("mean", Tensor::zeros([3]), false),
            var: s.add("var", Tensor::full([3], 1.0), false),
        };
        (s, net)
    }

    #[test]
    fn conv_norm_sigmoid_mean_passes() {
        let (mut store, net) = build();
        let input = Tensor::<f64>::from_fn([2, 2, 4, 4], |i| ((i * 31) % 17) as f64 / 8.0 - 1.0);
        let target = Tensor::<f64>::from_fn([2, 3, 4, 4], |i| (i % 2) as f64);
        let report = grad_check(
            &mut store,
            |tape, s| {
                let x = tape.constant(input.clone());
                let k = tape.param(s, net.kernel);
                let b = tape.param(s, net.bias);
                let g = tape.param(s, net.gamma);
                let be = tape.param(s, net.beta);
                let y = tape.conv2d(x, k, Some(b))?;
                let (pm, pv) = s.pair_mut(net.mean, net.var);
                let mut stats = BatchNormStats {
                    mean: pm.tensor.data_mut(),
                    var: pv.tensor.data_mut(),
                };
                let y = tape.batch_norm(y, g, be, &mut stats, NormMode::Train)?;
                let y = tape.sigmoid(y);
                let t = tape.constant(target.clone());
                let y = tape.mul(y, t)?;
                tape.mean(y)
            },
            GradCheckOptions {
                step: 1e-5,
                max_probes: 64,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.params.len(), 4);
        assert!(report.max_rel_error() < 1e-5, "{report:?}");
    }

    #[test]
    fn detects_wrong_gradient() {
        struct Wrong;
        impl crate::CustomOp<f64> for Wrong {
            fn name(&self) -> &'static str {
                "wrong"
            }
            fn backward(
                &self,
                _: &[&Tensor<f64>],
                _: &Tensor<f64>,
                g: &[f64],
            ) -> Vec<Option<Vec<f64>>> {
                vec![Some(g.iter().map(|x| 2.0 * x).collect())]
            }
        }
        let mut s = ParamStore::new();
        let w = s.add("w", Tensor::full([2], 0.5), true);
        let report = grad_check(
            &mut s,
            |tape, s| {
                let wv = tape.param(s, w);
                let out = tape.value(wv).clone();
                let y = tape.custom(&[wv], out, Box::new(Wrong));
                Ok(tape.sum(y))
            },
            GradCheckOptions::default(),
        )
        .unwrap();
        assert!((report.max_rel_error() - 0.5).abs() < 1e-6);
    }
}
