use serde::{Deserialize, Serialize};

use crate::error::{PhyError, Result};

/// Dimensions and numerology of one transmission time interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// OFDM symbols per TTI (M).
    pub symbols: usize,
    /// Subcarriers (N).
    pub subcarriers: usize,
    /// Receive antennas (N_R).
    pub rx_antennas: usize,
    /// Bits per QAM symbol (B_t).
    pub bits_per_symbol: usize,
    /// OFDM symbols carrying DMRS.
    pub dmrs_symbols: Vec<usize>,
    pub subcarrier_spacing_hz: f64,
    pub carrier_hz: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            symbols: 14,
            subcarriers: 64,
            rx_antennas: 1,
            bits_per_symbol: 4,
            dmrs_symbols: vec![3],
            subcarrier_spacing_hz: 30e3,
            carrier_hz: 4e9,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PhyError::InvalidConfig(m));
        if self.symbols == 0 || self.subcarriers == 0 {
            return bad(format!(
                "grid must be non-empty, got {}x{}",
                self.symbols, self.subcarriers
            ));
        }
        if !(1..=2).contains(&self.rx_antennas) {
            return bad(format!("rx_antennas must be 1 or 2, got {}", self.rx_antennas));
        }
        if !self.bits_per_symbol.is_multiple_of(2) || !(2..=10).contains(&self.bits_per_symbol) {
            return Err(PhyError::InvalidModulation(self.bits_per_symbol));
        }
        if self.dmrs_symbols.is_empty() {
            return bad("dmrs_symbols must be non-empty".into());
        }
        let mut seen = vec![false; self.symbols];
        for &s in &self.dmrs_symbols {
            if s >= self.symbols {
                return bad(format!("DMRS symbol {s} outside 0..{}", self.symbols));
            }
            if std::mem::replace(&mut seen[s], true) {
                return bad(format!("DMRS symbol {s} listed twice"));
            }
        }
        if self.dmrs_symbols.len() == self.symbols {
            return bad("no data symbols left after DMRS".into());
        }
        if !(self.subcarrier_spacing_hz > 0.0) || !(self.carrier_hz > 0.0) {
            return bad("subcarrier spacing and carrier must be positive".into());
        }
        Ok(())
    }

    /// Copy with a different DMRS placement.
    pub fn with_dmrs(&self, dmrs_symbols: Vec<usize>) -> Self {
        LinkConfig {
            dmrs_symbols,
            ..self.clone()
        }
    }

    pub fn is_dmrs(&self, symbol: usize) -> bool {
        self.dmrs_symbols.contains(&symbol)
    }

    /// Data-carrying OFDM symbols in ascending order.
    pub fn data_symbols(&self) -> Vec<usize> {
        (0..self.symbols).filter(|&m| !self.is_dmrs(m)).collect()
    }

    pub fn data_res(&self) -> usize {
        (self.symbols - self.dmrs_symbols.len()) * self.subcarriers
    }

    pub fn data_bits(&self) -> usize {
        self.data_res() * self.bits_per_symbol
    }

    /// OFDM symbol period including cyclic prefix (14 symbols per slot).
    pub fn symbol_duration_s(&self) -> f64 {
        let slot = 1e-3 * 15e3 / self.subcarrier_spacing_hz;
        slot / 14.0
    }

    /// Maximum Doppler shift at speed `v` m/s.
    pub fn doppler_for_speed(&self, speed_mps: f64) -> f64 {
        speed_mps * self.carrier_hz / 299_792_458.0
    }
}
