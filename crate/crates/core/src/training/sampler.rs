use rand::Rng;
use serde::{Deserialize, Serialize};
use spikerx_phy::{simulate_trial, ChannelSpec, DatasetSample, LinkConfig, Profile};

use crate::error::{Result, SpikeRxError};

/// Which profile pool a draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Train,
    Test,
}

/// How the Doppler shift of a draw is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    /// Uniform over `doppler_hz`.
    #[default]
    Doppler,
    /// Uniform speed over `speed_mps`, converted at the carrier frequency.
    Speed,
}

/// Uniform ranges for per-TTI channel randomization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSampler {
    pub snr_db: (f64, f64),
    pub delay_spread_ns: (f64, f64),
    pub doppler_hz: (f64, f64),
    pub speed_mps: (f64, f64),
    pub mobility: Mobility,
    pub train_profiles: Vec<Profile>,
    pub test_profiles: Vec<Profile>,
    /// Number of DMRS symbols per slot.
    pub dmrs_counts: Vec<usize>,
}

impl Default for ScenarioSampler {
    fn default() -> Self {
        ScenarioSampler {
            snr_db: (0.0, 20.0),
            delay_spread_ns: (10.0, 300.0),
            doppler_hz: (0.0, 500.0),
            speed_mps: (0.0, 35.0),
            mobility: Mobility::Doppler,
            train_profiles: vec![Profile::Flat, Profile::TdlLiteA],
            test_profiles: vec![Profile::TdlLiteB, Profile::TdlLiteC],
            dmrs_counts: vec![1, 2],
        }
    }
}

/// One draw of the channel conditions for a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub spec: ChannelSpec,
    pub snr_db: f64,
    pub dmrs_symbols: Vec<usize>,
}

impl Scenario {
    /// A fixed scenario on `link`'s own DMRS layout.
    pub fn fixed(spec: ChannelSpec, snr_db: f64, dmrs_symbols: Vec<usize>) -> Self {
        Scenario {
            spec,
            snr_db,
            dmrs_symbols,
        }
    }

    /// Simulates one slot; payload, DMRS, fading and noise come from `rng`.
    pub fn simulate<R: Rng + ?Sized>(&self, link: &LinkConfig, rng: &mut R) -> Result<spikerx_phy::Trial> {
        let link = link.with_dmrs(self.dmrs_symbols.clone());
        Ok(simulate_trial(&link, &self.spec, self.snr_db, rng)?)
    }

    /// Simulates one slot as a training sample.
    pub fn sample<R: Rng + ?Sized>(&self, link: &LinkConfig, rng: &mut R) -> Result<DatasetSample> {
        Ok(into_sample(self.simulate(link, rng)?))
    }
}

/// Network-facing view of a simulated slot.
pub fn into_sample(trial: spikerx_phy::Trial) -> DatasetSample {
    DatasetSample {
        data_mask: trial.tti.data_mask(),
        rx: trial.rx,
        pilot: trial.tti.pilot,
        bit_grid: trial.tti.bit_grid,
    }
}

/// DMRS symbol indices for `count` pilots in a slot of `symbols`.
pub fn dmrs_layout(count: usize, symbols: usize) -> Result<Vec<usize>> {
    let first = 3.min(symbols.saturating_sub(1));
    match count {
        1 => Ok(vec![first]),
        2 if symbols >= 6 => Ok(vec![first, symbols - 3]),
        _ => Err(SpikeRxError::config(format!(
            "no DMRS layout with {count} symbols in a {symbols}-symbol slot"
        ))),
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

impl ScenarioSampler {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("snr_db", self.snr_db),
            ("delay_spread_ns", self.delay_spread_ns),
            ("doppler_hz", self.doppler_hz),
            ("speed_mps", self.speed_mps),
        ] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SpikeRxError::config(format!(
                    "sampler.{name} must be a finite range with lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if self.delay_spread_ns.0 < 0.0 || self.doppler_hz.0 < 0.0 || self.speed_mps.0 < 0.0 {
            return Err(SpikeRxError::config("sampler delay, doppler and speed must be non-negative"));
        }
        if self.train_profiles.is_empty() || self.test_profiles.is_empty() {
            return Err(SpikeRxError::EmptyProfile);
        }
        if let Some(p) = self.train_profiles.iter().find(|p| self.test_profiles.contains(p)) {
            return Err(SpikeRxError::config(format!(
                "profile {} is in both the train and the test pool",
                p.name()
            )));
        }
        if self.dmrs_counts.is_empty() || self.dmrs_counts.iter().any(|c| !(1..=2).contains(c)) {
            return Err(SpikeRxError::config("sampler.dmrs_counts must be drawn from {1, 2}"));
        }
        Ok(())
    }

    pub fn profiles(&self, pool: Pool) -> &[Profile] {
        match pool {
            Pool::Train => &self.train_profiles,
            Pool::Test => &self.test_profiles,
        }
    }

    /// Independent uniform draws: profile, delay spread, mobility, SNR, DMRS count.
    pub fn sample<R: Rng + ?Sized>(&self, link: &LinkConfig, pool: Pool, rng: &mut R) -> Result<Scenario> {
        let profiles = self.profiles(pool);
        if profiles.is_empty() {
            return Err(SpikeRxError::EmptyProfile);
        }
        let profile = profiles[rng.random_range(0..profiles.len())];
        let delay_spread_s = uniform(rng, self.delay_spread_ns) * 1e-9;
        let doppler_hz = match self.mobility {
            Mobility::Doppler => uniform(rng, self.doppler_hz),
            Mobility::Speed => link.doppler_for_speed(uniform(rng, self.speed_mps)),
        };
        let snr_db = uniform(rng, self.snr_db);
        let count = self.dmrs_counts[rng.random_range(0..self.dmrs_counts.len())];
        Ok(Scenario {
            spec: ChannelSpec {
                profile,
                delay_spread_s,
                doppler_hz,
            },
            snr_db,
            dmrs_symbols: dmrs_layout(count, link.symbols)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn snr_mean_and_supports() {
        let s = ScenarioSampler::default();
        let link = LinkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut snr = 0.0;
        for _ in 0..n {
            let sc = s.sample(&link, Pool::Train, &mut rng).unwrap();
            snr += sc.snr_db;
            assert!(sc.dmrs_symbols == [3] || sc.dmrs_symbols == [3, 11]);
            assert!(s.train_profiles.contains(&sc.spec.profile));
            assert!((10e-9..=300e-9).contains(&sc.spec.delay_spread_s));
            assert!((0.0..=500.0).contains(&sc.spec.doppler_hz));
        }
        assert!((snr / n as f64 - 10.0).abs() < 0.3);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = ScenarioSampler::default();
        let link = LinkConfig::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| s.sample(&link, Pool::Test, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        assert!(draw(5).iter().all(|sc| s.test_profiles.contains(&sc.spec.profile)));
    }

    #[test]
    fn speed_mobility_converts() {
        let s = ScenarioSampler {
            mobility: Mobility::Speed,
            speed_mps: (30.0, 30.0),
            ..ScenarioSampler::default()
        };
        let link = LinkConfig::default();
        let sc = s.sample(&link, Pool::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((sc.spec.doppler_hz - link.doppler_for_speed(30.0)).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(ScenarioSampler::default().validate().is_ok());
        let overlap = ScenarioSampler {
            test_profiles: vec![Profile::Flat],
            ..ScenarioSampler::default()
        };
        assert!(overlap.validate().is_err());
        let empty = ScenarioSampler {
            train_profiles: vec![],
            ..ScenarioSampler::default()
        };
        assert!(matches!(empty.validate(), Err(SpikeRxError::EmptyProfile)));
        let bad = ScenarioSampler {
            snr_db: (5.0, 1.0),
            ..ScenarioSampler::default()
        };
        assert!(bad.validate().is_err());
        assert!(ScenarioSampler { dmrs_counts: vec![3], ..ScenarioSampler::default() }.validate().is_err());
    }

    #[test]
    fn layouts() {
        assert_eq!(dmrs_layout(1, 14).unwrap(), vec![3]);
        assert_eq!(dmrs_layout(2, 14).unwrap(), vec![3, 11]);
        assert!(dmrs_layout(3, 14).is_err());
    }
}
