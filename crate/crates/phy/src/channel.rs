use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::LinkConfig;
use crate::error::{PhyError, Result};
use crate::grid::Grid;

/// Sinusoids per fading process.
pub const SOS_ORDER: usize = 16;

/// Power delay profile family.
///
/// The `tdl-lite` profiles are exponential-decay tapped delay lines with
/// 3, 5 and 7 equally spaced taps, rescaled to the requested RMS delay
/// spread. `awgn` is a unit channel without fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    #[serde(rename = "awgn")]
    Awgn,
    #[serde(rename = "flat")]
    Flat,
    #[serde(rename = "tdl-lite-A")]
    TdlLiteA,
    #[serde(rename = "tdl-lite-B")]
    TdlLiteB,
    #[serde(rename = "tdl-lite-C")]
    TdlLiteC,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::Awgn,
        Profile::Flat,
        Profile::TdlLiteA,
        Profile::TdlLiteB,
        Profile::TdlLiteC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Awgn => "awgn",
            Profile::Flat => "flat",
            Profile::TdlLiteA => "tdl-lite-A",
            Profile::TdlLiteB => "tdl-lite-B",
            Profile::TdlLiteC => "tdl-lite-C",
        }
    }

    fn shape(self) -> (usize, f64) {
        match self {
            Profile::Awgn | Profile::Flat => (1, 0.0),
            Profile::TdlLiteA => (3, 1.0),
            Profile::TdlLiteB => (5, 0.7),
            Profile::TdlLiteC => (7, 0.5),
        }
    }

    /// Taps with unit total power and the requested RMS delay spread.
    pub fn taps(self, delay_spread_s: f64) -> Vec<Tap> {
        let (count, decay) = self.shape();
        if count == 1 {
            return vec![Tap {
                delay_s: 0.0,
                power: 1.0,
            }];
        }
        let raw: Vec<f64> = (0..count).map(|k| (-decay * k as f64).exp()).collect();
        let total: f64 = raw.iter().sum();
        let powers: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mean: f64 = powers.iter().enumerate().map(|(k, p)| p * k as f64).sum();
        let second: f64 = powers.iter().enumerate().map(|(k, p)| p * (k * k) as f64).sum();
        let rms = (second - mean * mean).sqrt();
        let scale = delay_spread_s / rms;
        powers
            .into_iter()
            .enumerate()
            .map(|(k, power)| Tap {
                delay_s: k as f64 * scale,
                power,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_s: f64,
    pub power: f64,
}

/// Large-scale channel parameters of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub profile: Profile,
    pub delay_spread_s: f64,
    pub doppler_hz: f64,
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delay_spread_s >= 0.0) || !self.delay_spread_s.is_finite() {
            return Err(PhyError::InvalidChannel(format!(
                "delay spread must be finite and non-negative, got {}",
                self.delay_spread_s
            )));
        }
        if !(self.doppler_hz >= 0.0) || !self.doppler_hz.is_finite() {
            return Err(PhyError::InvalidChannel(format!(
                "doppler must be finite and non-negative, got {}",
                self.doppler_hz
            )));
        }
        Ok(())
    }
}

/// Frequency response of one slot on every resource element and antenna.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: Grid,
    pub taps: Vec<Tap>,
    pub doppler_hz: f64,
    pub delay_spread_s: f64,
}

/// One Rayleigh process with Jakes spectrum, unit power.
struct SumOfSinusoids {
    cos_freq: [f64; SOS_ORDER],
    sin_freq: [f64; SOS_ORDER],
    phase_i: [f64; SOS_ORDER],
    phase_q: [f64; SOS_ORDER],
}

impl SumOfSinusoids {
    fn draw<R: Rng + ?Sized>(doppler_hz: f64, rng: &mut R) -> Self {
        let theta = rng.random_range(-PI..PI);
        let mut s = SumOfSinusoids {
            cos_freq: [0.0; SOS_ORDER],
            sin_freq: [0.0; SOS_ORDER],
            phase_i: [0.0; SOS_ORDER],
            phase_q: [0.0; SOS_ORDER],
        };
        let wd = 2.0 * PI * doppler_hz;
        for n in 0..SOS_ORDER {
            let alpha = (2.0 * PI * (n + 1) as f64 - PI + theta) / (4.0 * SOS_ORDER as f64);
            s.cos_freq[n] = wd * alpha.cos();
            s.sin_freq[n] = wd * alpha.sin();
            s.phase_i[n] = rng.random_range(-PI..PI);
            s.phase_q[n] = rng.random_range(-PI..PI);
        }
        s
    }

    fn at(&self, t: f64) -> Complex64 {
        let (mut i, mut q) = (0.0, 0.0);
        for n in 0..SOS_ORDER {
            i += (self.cos_freq[n] * t + self.phase_i[n]).cos();
            q += (self.sin_freq[n] * t + self.phase_q[n]).cos();
        }
        // sqrt(2/N) per quadrature, then 1/sqrt(2) for unit complex power
        Complex64::new(i, q) / (SOS_ORDER as f64).sqrt()
    }
}

/// Draws a fading realization; antennas and taps fade independently.
pub fn tdl_channel<R: Rng + ?Sized>(
    cfg: &LinkConfig,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    spec.validate()?;
    let (m_total, n_total, r_total) = (cfg.symbols, cfg.subcarriers, cfg.rx_antennas);
    let taps = spec.profile.taps(spec.delay_spread_s);
    let mut h = Grid::zeros(m_total, n_total, r_total);
    if spec.profile == Profile::Awgn {
        h.data_mut().fill(Complex64::new(1.0, 0.0));
    } else {
        let t_sym = cfg.symbol_duration_s();
        // phase ramp of each tap across subcarriers
        let ramps: Vec<Vec<Complex64>> = taps
            .iter()
            .map(|tap| {
                (0..n_total)
                    .map(|n| {
                        Complex64::from_polar(
                            tap.power.sqrt(),
                            -2.0 * PI * n as f64 * cfg.subcarrier_spacing_hz * tap.delay_s,
                        )
                    })
                    .collect()
            })
            .collect();
        for ramp in &ramps {
            for r in 0..r_total {
                let process = SumOfSinusoids::draw(spec.doppler_hz, rng);
                for m in 0..m_total {
                    let g = process.at(m as f64 * t_sym);
                    for (n, &e) in ramp.iter().enumerate() {
                        let i = h.index(m, n, r);
                        h.data_mut()[i] += g * e;
                    }
                }
            }
        }
    }
    Ok(ChannelRealization {
        h,
        taps,
        doppler_hz: spec.doppler_hz,
        delay_spread_s: spec.delay_spread_s,
    })
}

/// Noise variance per complex sample for unit-energy symbols carrying
/// `bits_per_symbol` uncoded bits: `N0 = 1 / (B_t * Eb/N0)`.
pub fn noise_variance(ebn0_db: f64, bits_per_symbol: usize) -> f64 {
    1.0 / (bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0))
}

/// `y = h x + z` on every element and antenna, `z ~ CN(0, n0)`.
pub fn apply_channel<R: Rng + ?Sized>(
    tx: &Grid,
    channel: &ChannelRealization,
    n0: f64,
    rng: &mut R,
) -> Result<Grid> {
    let h = &channel.h;
    if tx.symbols() != h.symbols() || tx.subcarriers() != h.subcarriers() || tx.antennas() != 1 {
        return Err(PhyError::SizeMismatch {
            what: "transmit grid elements",
            expected: h.symbols() * h.subcarriers(),
            got: tx.symbols() * tx.subcarriers() * tx.antennas(),
        });
    }
    let sigma = (n0.max(0.0) / 2.0).sqrt();
    let mut y = Grid::zeros(h.symbols(), h.subcarriers(), h.antennas());
    for m in 0..h.symbols() {
        for n in 0..h.subcarriers() {
            let x = tx.get(m, n, 0);
            for r in 0..h.antennas() {
                let zr: f64 = StandardNormal.sample(rng);
                let zi: f64 = StandardNormal.sample(rng);
                y.set(m, n, r, h.get(m, n, r) * x + Complex64::new(zr, zi) * sigma);
            }
        }
    }
    Ok(y)
}
