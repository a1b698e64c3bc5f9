use serde::{Deserialize, Serialize};

use crate::error::{Result, SpikeRxError};

/// Per-operation energies in picojoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub bits: u32,
    pub e_mult: f64,
    pub e_add: f64,
    pub e_mac: f64,
    pub e_ac: f64,
}

pub const E_MULT_32: f64 = 3.7;
pub const E_ADD_32: f64 = 0.9;
pub const E_MAC_32: f64 = 4.6;
pub const E_AC_32: f64 = 0.9;
pub const E_MAC_8: f64 = 1.1;
pub const E_AC_8: f64 = 0.2;

impl Default for EnergyTable {
    fn default() -> Self {
        EnergyTable {
            bits: 32,
            e_mult: E_MULT_32,
            e_add: E_ADD_32,
            e_mac: E_MAC_32,
            e_ac: E_AC_32,
        }
    }
}

impl EnergyTable {
    /// Power-law scaling from the 32-bit row: MAC ∝ Q^1.25, AC ∝ Q.
    pub fn scaled(bits: u32) -> Result<Self> {
        if !(1..=32).contains(&bits) {
            return Err(SpikeRxError::config(format!("energy bits must lie in 1..=32, got {bits}")));
        }
        let q = f64::from(bits) / 32.0;
        let mac = q.powf(1.25);
        Ok(EnergyTable {
            bits,
            e_mult: E_MULT_32 * mac,
            e_add: E_ADD_32 * mac,
            e_mac: E_MAC_32 * mac,
            e_ac: E_AC_32 * q,
        })
    }

    /// The measured row at 8 bits, the power law elsewhere.
    pub fn for_bits(bits: u32) -> Result<Self> {
        if bits != 8 {
            return Self::scaled(bits);
        }
        let split = E_MAC_8 / E_MAC_32;
        Ok(EnergyTable {
            bits,
            e_mult: E_MULT_32 * split,
            e_add: E_ADD_32 * split,
            e_mac: E_MAC_8,
            e_ac: E_AC_8,
        })
    }
}
