//! Spiking neural receiver for OFDM uplinks.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
mod error;
pub mod receiver;
pub mod spiking;
pub mod training;

pub use error::{Result, SpikeRxError};
