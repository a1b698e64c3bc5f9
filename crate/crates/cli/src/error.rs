use spikerx::SpikeRxError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error at `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Field { .. } | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Checkpoint(_) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::Other(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<SpikeRxError> for CliError {
    fn from(e: SpikeRxError) -> Self {
        use SpikeRxError as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::Shape { .. } | E::InvalidLabel(_) | E::EmptyProfile | E::UnknownLayer(_) | E::Json(_) => {
                CliError::Config(msg)
            }
            E::ZeroNeurons(_) => CliError::Config(msg),
            E::NonFiniteActivation { .. } | E::NonFiniteLoss { .. } => CliError::Numerical(msg),
            E::DigestMismatch { .. } | E::Checkpoint(_) => CliError::Checkpoint(msg),
            E::Phy(spikerx_phy::PhyError::InvalidConfig(_))
            | E::Phy(spikerx_phy::PhyError::InvalidChannel(_))
            | E::Phy(spikerx_phy::PhyError::InvalidModulation(_)) => CliError::Config(msg),
            E::Autodiff(spikerx_autodiff::AutodiffError::NonFiniteGradient(_)) => CliError::Numerical(msg),
            _ => CliError::Other(msg),
        }
    }
}

impl From<spikerx_phy::PhyError> for CliError {
    fn from(e: spikerx_phy::PhyError) -> Self {
        SpikeRxError::from(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
