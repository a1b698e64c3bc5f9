//! Scenario sampling, loss, quantization-aware training and evaluation.

mod eval;
mod loss;
mod quant;
mod sampler;
mod train;

pub use eval::{eval_trial, evaluate, read_eval_csv, write_eval_csv, EvalOptions, EvalRecord, EvalScenario};
pub use loss::{bce_loss, bce_var};
pub use quant::{quantize_var, quantize_weights, quantize_with_scale, ste_backward, QuantizerConfig};
pub use sampler::{dmrs_layout, into_sample, Mobility, Pool, Scenario, ScenarioSampler};
pub use train::{train, train_step, DataSource, StepReport, TrainConfig};
