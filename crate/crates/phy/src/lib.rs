//! Link-level OFDM simulation: QAM mapping, DMRS resource grids, tapped
//! delay line fading with Doppler, AWGN and classical receivers (perfect
//! CSI, LS with linear interpolation, LMMSE interpolation) ending in an
//! exact log-likelihood demapper.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod baseline;
mod channel;
mod config;
mod dataset;
mod equalize;
mod error;
mod estimate;
mod grid;
mod qam;
mod seed;
mod tti;

pub use baseline::{
    count_bit_errors, read_ber_csv, receive, run_baseline, simulate_trial, write_ber_csv,
    BerRecord, Receiver, Trial,
};
pub use channel::{
    apply_channel, noise_variance, tdl_channel, ChannelRealization, ChannelSpec, Profile, Tap,
    SOS_ORDER,
};
pub use config::LinkConfig;
pub use dataset::{read_dataset, write_dataset, DatasetHeader, DatasetSample, DATASET_MAGIC};
pub use equalize::{lmmse_equalize, Equalized};
pub use error::{PhyError, Result};
pub use estimate::{
    interpolate_linear, interpolate_lmmse, ls_estimate, ChannelEstimate, CovarianceModel,
    PilotEstimate, LMMSE_RIDGE,
};
pub use grid::Grid;
pub use num_complex::Complex64;
pub use qam::{demap_llr, Constellation};
pub use seed::{substream, trial_rng};
pub use tti::{build_tti, random_tti, Tti};
