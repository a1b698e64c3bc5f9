use thiserror::Error;

pub type Result<T, E = PhyError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported modulation order {0} bits per symbol (must be even and 2..=10)")]
    InvalidModulation(usize),
    #[error("{what}: expected {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid channel parameter: {0}")]
    InvalidChannel(String),
    #[error("pilot at symbol {symbol}, subcarrier {subcarrier} is zero")]
    ZeroPilot { symbol: usize, subcarrier: usize },
    #[error("LMMSE interpolation system is ill-conditioned")]
    IllConditioned,
    #[error("equalizer undefined at data element {0}: zero channel estimate and zero noise")]
    DegenerateEqualizer(usize),
    #[error("need at least one trial")]
    NoTrials,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
