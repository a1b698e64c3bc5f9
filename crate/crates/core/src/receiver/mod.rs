//! Spiking receiver network, its ReLU twin, input encoding and readout
//! aggregation.

mod aggregate;
mod checkpoint;
mod config;
mod input;
mod model;

pub use aggregate::{aggregate, aggregate_var, llr_from_prob, payload_llrs, P_CLAMP};
pub use checkpoint::{config_digest, load_model, save_model, Sidecar};
pub use config::{BlockKind, LossMask, ModelConfig, NetworkKind};
pub use input::{build_input, Batch};
pub use model::{ForwardOptions, MembraneProbe, Model, Recorder, SpikeRecord};
