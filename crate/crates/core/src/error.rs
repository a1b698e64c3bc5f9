use spikerx_autodiff::AutodiffError;
use spikerx_phy::PhyError;
use thiserror::Error;

pub type Result<T, E = SpikeRxError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpikeRxError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch in {what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: String },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("checkpoint digest mismatch: sidecar records {recorded}, configuration hashes to {computed}")]
    DigestMismatch { recorded: String, computed: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("profile has no layers")]
    EmptyProfile,
    #[error("layer `{0}` has no neurons")]
    ZeroNeurons(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SpikeRxError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SpikeRxError::Config(msg.into())
    }
}
