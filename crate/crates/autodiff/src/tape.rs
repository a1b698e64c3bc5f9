use crate::error::{AutodiffError, Result};
use crate::ops::{batch_norm, conv, elementwise, reduce};
use crate::param::{ParamId, ParamStore};
use crate::real::Real;
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// An operation whose forward result is computed by the caller and whose
/// backward rule is supplied explicitly.
///
/// The spike nonlinearity uses this to pair a Heaviside forward with a
/// surrogate derivative; the quantizer pairs rounding with a
/// straight-through gradient.
pub trait CustomOp<E: Real>: Send + Sync {
    fn name(&self) -> &'static str;

    /// One entry per input: `None` when no gradient flows to that input.
    fn backward(
        &self,
        inputs: &[&Tensor<E>],
        output: &Tensor<E>,
        grad_out: &[E],
    ) -> Vec<Option<Vec<E>>>;
}

pub(crate) enum Op<E: Real> {
    Leaf,
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Option<Var>,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        cache: batch_norm::Cache<E>,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, E),
    AddScalar(Var, E),
    Sigmoid(Var),
    Relu(Var),
    ChannelMul {
        x: Var,
        v: Var,
    },
    Sum(Var),
    MeanAxis {
        input: Var,
        axis: usize,
    },
    Stack(Vec<Var>),
    Custom {
        inputs: Vec<Var>,
        op: Box<dyn CustomOp<E>>,
    },
}

impl<E: Real> Op<E> {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => Vec::new(),
            Op::Conv2d {
                input,
                kernel,
                bias,
            } => {
                let mut v = vec![*input, *kernel];
                v.extend(bias);
                v
            }
            Op::BatchNorm {
                input, gamma, beta, ..
            } => vec![*input, *gamma, *beta],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _) | Op::AddScalar(a, _) | Op::Sigmoid(a) | Op::Relu(a) | Op::Sum(a) => {
                vec![*a]
            }
            Op::ChannelMul { x, v } => vec![*x, *v],
            Op::MeanAxis { input, .. } => vec![*input],
            Op::Stack(vs) => vs.clone(),
            Op::Custom { inputs, .. } => inputs.clone(),
        }
    }
}

struct Node<E: Real> {
    value: Tensor<E>,
    op: Op<E>,
    requires_grad: bool,
    param: Option<ParamId>,
}

/// Append-only record of a forward computation.
pub struct Tape<E: Real = f32> {
    nodes: Vec<Node<E>>,
    grads: Vec<Option<Vec<E>>>,
}

impl<E: Real> Default for Tape<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Real> Tape<E> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<E> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last [`backward`](Self::backward) loss w.r.t. `v`.
    pub fn grad(&self, v: Var) -> Option<&[E]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Records a value that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<E>) -> Var {
        self.push_raw(value, Op::Leaf, false, None)
    }

    /// Records a differentiable input that is not a stored parameter.
    pub fn leaf(&mut self, value: Tensor<E>) -> Var {
        self.push_raw(value, Op::Leaf, true, None)
    }

    /// Records a copy of a stored parameter.
    pub fn param(&mut self, store: &ParamStore<E>, id: ParamId) -> Var {
        let p = store.get(id);
        let mut value = p.tensor.clone();
        value.clear_grad();
        self.push_raw(value, Op::Leaf, p.trainable, Some(id))
    }

    /// Records the result of a caller-computed operation.
    pub fn custom(&mut self, inputs: &[Var], output: Tensor<E>, op: Box<dyn CustomOp<E>>) -> Var {
        self.push(
            output,
            Op::Custom {
                inputs: inputs.to_vec(),
                op,
            },
        )
    }

    pub(crate) fn push(&mut self, value: Tensor<E>, op: Op<E>) -> Var {
        let requires_grad = op.inputs().iter().any(|v| self.nodes[v.0].requires_grad);
        self.push_raw(value, op, requires_grad, None)
    }

    fn push_raw(
        &mut self,
        value: Tensor<E>,
        op: Op<E>,
        requires_grad: bool,
        param: Option<ParamId>,
    ) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            param,
        });
        Var(self.nodes.len() - 1)
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Every node is visited at most once, in reverse recording order.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let loss_shape = self.shape(loss).to_vec();
        if loss_shape.iter().product::<usize>() != 1 {
            return Err(AutodiffError::NonScalarLoss(loss_shape));
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(vec![E::one()]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            let contributions = self.node_backward(i, &g);
            self.grads[i] = Some(g);
            for (var, grad) in contributions {
                if !self.nodes[var.0].requires_grad {
                    continue;
                }
                match &mut self.grads[var.0] {
                    Some(acc) => {
                        for (a, d) in acc.iter_mut().zip(&grad) {
                            *a = *a + *d;
                        }
                    }
                    slot @ None => *slot = Some(grad),
                }
            }
        }
        Ok(())
    }

    fn node_backward(&self, i: usize, g: &[E]) -> Vec<(Var, Vec<E>)> {
        let node = &self.nodes[i];
        let val = |v: Var| &self.nodes[v.0].value;
        let need = |v: Var| self.nodes[v.0].requires_grad;
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                kernel,
                bias,
            } => {
                let grads = conv::backward(
                    val(*input),
                    val(*kernel),
                    g,
                    need(*input),
                    need(*kernel),
                    bias.is_some_and(need),
                );
                out.extend(grads.input.map(|d| (*input, d)));
                out.extend(grads.kernel.map(|d| (*kernel, d)));
                if let (Some(b), Some(d)) = (bias, grads.bias) {
                    out.push((*b, d));
                }
            }
            Op::BatchNorm {
                input,
                gamma,
                beta,
                cache,
            } => {
                let grads = batch_norm::backward(val(*input), val(*gamma), cache, g, need(*input));
                out.extend(grads.input.map(|d| (*input, d)));
                out.push((*gamma, grads.gamma));
                out.push((*beta, grads.beta));
            }
            Op::Add(a, b) => {
                out.push((*a, g.to_vec()));
                out.push((*b, elementwise::reduce_broadcast(g, val(*b).len())));
            }
            Op::Sub(a, b) => {
                out.push((*a, g.to_vec()));
                let neg: Vec<E> = g.iter().map(|&x| -x).collect();
                out.push((*b, elementwise::reduce_broadcast(&neg, val(*b).len())));
            }
            Op::Mul(a, b) => {
                let (da, db) = elementwise::mul_backward(val(*a), val(*b), g);
                out.push((*a, da));
                out.push((*b, db));
            }
            Op::Scale(a, s) => out.push((*a, g.iter().map(|&x| x * *s).collect())),
            Op::AddScalar(a, _) => out.push((*a, g.to_vec())),
            Op::Sigmoid(a) => {
                let y = node.value.data();
                out.push((
                    *a,
                    g.iter()
                        .zip(y)
                        .map(|(&d, &y)| d * y * (E::one() - y))
                        .collect(),
                ));
            }
            Op::Relu(a) => {
                let x = val(*a).data();
                out.push((
                    *a,
                    g.iter()
                        .zip(x)
                        .map(|(&d, &x)| if x > E::zero() { d } else { E::zero() })
                        .collect(),
                ));
            }
            Op::ChannelMul { x, v } => {
                let (dx, dv) = elementwise::channel_mul_backward(val(*x), val(*v), g);
                out.push((*x, dx));
                out.push((*v, dv));
            }
            Op::Sum(a) => out.push((*a, vec![g[0]; val(*a).len()])),
            Op::MeanAxis { input, axis } => {
                out.push((*input, reduce::mean_axis_backward(val(*input).shape(), *axis, g)));
            }
            Op::Stack(vs) => {
                let chunk = g.len() / vs.len();
                for (k, v) in vs.iter().enumerate() {
                    out.push((*v, g[k * chunk..(k + 1) * chunk].to_vec()));
                }
            }
            Op::Custom { inputs, op } => {
                let ins: Vec<&Tensor<E>> = inputs.iter().map(|v| val(*v)).collect();
                let grads = op.backward(&ins, &node.value, g);
                assert_eq!(
                    grads.len(),
                    inputs.len(),
                    "custom op `{}` returned {} gradients for {} inputs",
                    op.name(),
                    grads.len(),
                    inputs.len()
                );
                for (v, d) in inputs.iter().zip(grads) {
                    if let Some(d) = d {
                        assert_eq!(d.len(), val(*v).len(), "custom op `{}` gradient length", op.name());
                        out.push((*v, d));
                    }
                }
            }
        }
        out
    }

    /// Copies gradients of recorded parameters into their `grad` slots.
    ///
    /// Trainable parameters that did not take part in the loss receive zeros.
    /// A parameter recorded several times gets the sum of its uses.
    pub fn write_param_grads(&self, store: &mut ParamStore<E>) {
        for p in store.iter_mut() {
            if p.trainable {
                let n = p.tensor.len();
                p.tensor
                    .set_grad(vec![E::zero(); n])
                    .expect("zero gradient has parameter length");
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let (Some(id), Some(g)) = (node.param, self.grads.get(i).and_then(|g| g.as_ref())) else {
                continue;
            };
            let p = store.get_mut(id);
            if !p.trainable {
                continue;
            }
            let mut acc = p.tensor.grad().map(<[E]>::to_vec).unwrap_or_default();
            for (a, d) in acc.iter_mut().zip(g) {
                *a = *a + *d;
            }
            p.tensor.set_grad(acc).expect("gradient has parameter length");
        }
    }
}
