//! Spatially correlated log-normal shadow fading.
//!
//! Each link owns a zero-mean Gaussian process (in dB) with exponential
//! autocorrelation `exp(-|Δd|/dc)`. In [`ShadowMode::Ar`] the process is a
//! first-order autoregression driven by the displacement between updates; in
//! [`ShadowMode::Block`] it is piecewise constant over blocks of length `dc`
//! with independent values per block.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::LinkClass;
use crate::propagation::Scenario;
use crate::rng::{keyed, mix64, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    #[default]
    Ar,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowConfig {
    pub sigma_db: f64,
    pub dc_m: f64,
    pub mode: ShadowMode,
}

impl ShadowConfig {
    pub fn new(sigma_db: f64, dc_m: f64, mode: ShadowMode) -> Result<Self> {
        let c = Self { sigma_db, dc_m, mode };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_db > 0.0 && self.dc_m > 0.0) {
            return Err(domain(format!(
                "shadowing needs positive sigma and decorrelation distance, got {} dB, {} m",
                self.sigma_db, self.dc_m
            )));
        }
        Ok(())
    }
}

/// Measured decorrelation distances. NLOS has none; callers fall back to
/// the urban OLOS value.
pub fn decorrelation_distance(scenario: Scenario, class: LinkClass) -> Option<f64> {
    match (scenario, class) {
        (Scenario::Highway, LinkClass::Los) => Some(23.3),
        (Scenario::Highway, LinkClass::Olos) => Some(32.5),
        (Scenario::Urban, LinkClass::Los) => Some(4.25),
        (Scenario::Urban, LinkClass::Olos) => Some(4.5),
        _ => None,
    }
}

/// Correlation of the shadowing at two points `delta_d` apart.
pub fn autocorrelation(dc_m: f64, delta_d_m: f64) -> f64 {
    (-delta_d_m.abs() / dc_m).exp()
}

/// Key shared by the links (a, b) and (b, a).
pub fn link_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (u64::from(lo) << 32) | u64::from(hi)
}

/// Per-link shadowing state.
///
/// The state is held normalised (`X/σ`) so that a change of link class,
/// which swaps σ and `dc`, does not make the normalised value jump.
#[derive(Debug, Clone)]
pub struct ShadowProcess {
    config: ShadowConfig,
    normalized: f64,
    position_m: f64,
    seed: u64,
    key: u64,
    rng: SimRng,
    block: Option<(i64, f64)>,
}

impl ShadowProcess {
    /// Start a process in its stationary distribution.
    pub fn new(config: ShadowConfig, seed: u64, key: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = keyed(seed, Stream::Shadow, key);
        let normalized: f64 = rng.sample(StandardNormal);
        let mut p = Self {
            config,
            normalized,
            position_m: 0.0,
            seed,
            key,
            rng,
            block: None,
        };
        if config.mode == ShadowMode::Block {
            p.normalized = p.block_normalized(0);
        }
        Ok(p)
    }

    pub fn config(&self) -> &ShadowConfig {
        &self.config
    }

    /// Current shadowing value in dB.
    pub fn value_db(&self) -> f64 {
        self.config.sigma_db * self.normalized
    }

    /// Accumulated displacement coordinate.
    pub fn position_m(&self) -> f64 {
        self.position_m
    }

    /// Move the process by `delta_d` metres and return the new value.
    pub fn advance(&mut self, delta_d: f64) -> f64 {
        let delta_d = delta_d.abs();
        self.position_m += delta_d;
        match self.config.mode {
            ShadowMode::Ar => {
                if delta_d > 0.0 {
                    let rho = autocorrelation(self.config.dc_m, delta_d);
                    let innovation: f64 = self.rng.sample(StandardNormal);
                    self.normalized = rho * self.normalized + (1.0 - rho * rho).sqrt() * innovation;
                }
                self.value_db()
            }
            ShadowMode::Block => self.block_value(self.position_m),
        }
    }

    /// Value of the block containing `position_m`; one independent draw per
    /// block of length `dc`.
    pub fn block_value(&mut self, position_m: f64) -> f64 {
        let index = (position_m.max(0.0) / self.config.dc_m).floor() as i64;
        let z = match self.block {
            Some((i, z)) if i == index => z,
            _ => {
                let z = self.block_normalized(index);
                self.block = Some((index, z));
                z
            }
        };
        self.normalized = z;
        self.config.sigma_db * z
    }

    fn block_normalized(&self, index: i64) -> f64 {
        let mut rng = keyed(
            self.seed,
            Stream::Shadow,
            mix64(self.key) ^ (index as u64).rotate_left(17),
        );
        rng.sample(StandardNormal)
    }

    /// Swap the statistics on a link-class change, keeping `X/σ`.
    pub fn switch_config(&mut self, config: ShadowConfig) {
        if config.dc_m != self.config.dc_m {
            self.block = None;
        }
        self.config = config;
    }
}
