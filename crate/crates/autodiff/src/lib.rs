//! Dense-tensor reverse-mode differentiation for the receiver networks.
//!
//! The engine is deliberately narrow: it knows 2-D same-padded convolution,
//! batch normalization, a handful of elementwise ops, mean reductions and a
//! [`CustomOp`] hook through which other crates inject operations whose
//! backward rule is not the derivative of their forward (spike nodes,
//! straight-through quantizers).
//!
//! Values live on a [`Tape`]; every op appends one node whose inputs were
//! recorded before it, so the node list is already a topological order and
//! [`Tape::backward`] is a single reverse sweep.

#![allow(clippy::needless_range_loop)]

mod checkpoint;
mod error;
mod gradcheck;
mod ops;
mod optim;
mod param;
mod real;
mod tape;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use error::{AutodiffError, Result};
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, ParamCheck};
pub use ops::batch_norm::{BatchNormStats, NormMode, BN_EPS, BN_MOMENTUM};
pub use ops::conv::conv2d_forward;
pub use optim::AdamW;
pub use param::{ParamId, ParamStore, Parameter};
pub use real::Real;
pub use tape::{CustomOp, Tape, Var};
pub use tensor::Tensor;
