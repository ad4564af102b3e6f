//! Distance-dependent Nakagami-m reference channel.
//!
//! Small-scale fading and shadowing are lumped into one Gamma-distributed
//! power sample whose mean follows a dual-slope curve and whose shape `m`
//! depends on the distance interval.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::PathLossParams;
use crate::error::{config, domain, Result};

/// Fading shape for distances up to `upper_m` (inclusive) and above the
/// previous interval's bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MInterval {
    pub upper_m: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NakagamiParams {
    /// Mean-power curve.
    pub mean: PathLossParams,
    /// Contiguous intervals starting at 0 m, ordered by `upper_m`.
    pub intervals: Vec<MInterval>,
}

impl Default for NakagamiParams {
    /// Placeholder values with the right shape (dual-slope mean, m falling
    /// from about 4 to below 1 with distance). They are NOT a published
    /// parameter set; supply measured values through the configuration.
    fn default() -> Self {
        let mean = PathLossParams {
            n1: Some(-2.0),
            n2: -4.0,
            pl0_db: -66.1,
            sigma_db: 1.0,
            d0_m: 10.0,
            db_m: 104.0,
        };
        let intervals = [
            (5.5, 4.07),
            (13.9, 2.44),
            (35.5, 3.08),
            (90.5, 1.52),
            (230.7, 0.74),
            (588.0, 0.84),
            (10_000.0, 0.84),
        ]
        .into_iter()
        .map(|(upper_m, m)| MInterval { upper_m, m })
        .collect();
        Self { mean, intervals }
    }
}

impl NakagamiParams {
    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        if self.intervals.is_empty() {
            return Err(config("Nakagami table has no intervals"));
        }
        let mut prev = 0.0;
        for iv in &self.intervals {
            if !(iv.upper_m > prev) {
                return Err(config(format!(
                    "Nakagami interval bounds must be strictly increasing from 0 m, got {} after {prev}",
                    iv.upper_m
                )));
            }
            if !(iv.m >= 0.5) {
                return Err(config(format!("Nakagami m must be >= 0.5, got {}", iv.m)));
            }
            prev = iv.upper_m;
        }
        Ok(())
    }

    /// Largest distance covered by the table.
    pub fn max_distance_m(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.upper_m)
    }

    /// Fading shape at distance `d`.
    pub fn m_at(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(config(format!("distance {d} m is outside the Nakagami table")));
        }
        self.intervals
            .iter()
            .find(|iv| d <= iv.upper_m)
            .map(|iv| iv.m)
            .ok_or_else(|| {
                config(format!(
                    "distance {d} m is beyond the Nakagami table (covers up to {} m)",
                    self.max_distance_m()
                ))
            })
    }

    /// Mean received power at distance `d`, distances below the reference
    /// distance clamped.
    pub fn mean_power_w(&self, d: f64, tx_power_w: f64) -> f64 {
        tx_power_w * 10f64.powf(self.mean.gain_db_clamped(d) / 10.0)
    }

    /// Draw one received-power sample (watts).
    pub fn sample<R: Rng + ?Sized>(&self, d: f64, tx_power_w: f64, rng: &mut R) -> Result<f64> {
        if !(tx_power_w >= 0.0) {
            return Err(domain(format!("transmit power must be non-negative, got {tx_power_w}")));
        }
        let m = self.m_at(d)?;
        let mean = self.mean_power_w(d, tx_power_w);
        if mean == 0.0 {
            return Ok(0.0);
        }
        let gamma = Gamma::new(m, mean / m).map_err(|e| domain(e.to_string()))?;
        Ok(gamma.sample(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn flat(m: f64) -> NakagamiParams {
        NakagamiParams {
            intervals: vec![MInterval { upper_m: 1000.0, m }],
            ..NakagamiParams::default()
        }
    }

    fn moments(p: &NakagamiParams, d: f64, n: usize) -> (f64, f64, f64) {
        let mut rng = stream(11, Stream::Channel);
        let xs: Vec<f64> = (0..n).map(|_| p.sample(d, 0.1, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var, p.mean_power_w(d, 0.1))
    }

    #[test]
    fn sample_mean_matches_configured_mean() {
        let p = NakagamiParams::default();
        for d in [20.0, 150.0, 400.0] {
            let (mean, _, target) = moments(&p, d, 100_000);
            assert!((mean / target - 1.0).abs() < 0.02, "d={d}: {mean} vs {target}");
        }
    }

    #[test]
    fn m_one_is_exponential() {
        let p = flat(1.0);
        let (mean, var, target) = moments(&p, 50.0, 100_000);
        // exponential: variance equals mean squared
        assert!((var / (mean * mean) - 1.0).abs() < 0.03);
        // P(X > mean) = 1/e
        let mut rng = stream(12, Stream::Channel);
        let above = (0..100_000)
            .filter(|_| p.sample(50.0, 0.1, &mut rng).unwrap() > target)
            .count() as f64
            / 1e5;
        assert!((above - (-1.0f64).exp()).abs() < 0.005, "{above}");
    }

    #[test]
    fn large_m_variance_identity() {
        let p = flat(50.0);
        let (mean, var, _) = moments(&p, 50.0, 100_000);
        assert!((var / (mean * mean) - 1.0 / 50.0).abs() < 0.002);
    }

    #[test]
    fn table_lookup_and_errors() {
        let p = NakagamiParams::default();
        p.validate().unwrap();
        assert_eq!(p.m_at(5.5).unwrap(), 4.07);
        assert_eq!(p.m_at(5.6).unwrap(), 2.44);
        assert!(p.m_at(20_000.0).is_err());
        let mut rng = stream(1, Stream::Channel);
        assert!(matches!(
            p.sample(20_000.0, 0.1, &mut rng),
            Err(crate::Error::Config(_))
        ));

        let mut bad = p.clone();
        bad.intervals[2].m = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = p.clone();
        bad.intervals.swap(0, 1);
        assert!(bad.validate().is_err());
    }
}
