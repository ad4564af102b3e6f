//! Vehicle-to-vehicle channel modelling and network simulation.
//!
//! The crate is organised in layers:
//!
//! - [`propagation`]: deterministic mean channel gain for LOS, OLOS and NLOS
//!   links (dual-slope log-distance model, street-intersection model), the
//!   probability-weighted power mixing rule and a Nakagami-m reference channel.
//! - [`shadowing`]: spatially correlated log-normal shadow fading.
//! - [`geometry`]: rectangle-based LOS/OLOS/NLOS link classification.
//! - [`mobility`]: multi-lane highway traffic with Poisson arrivals.
//! - [`netsim`]: discrete-event CSMA broadcast simulation.
//! - [`estimation`]: the measurement post-processing and fitting pipeline
//!   (APDP, channel gain, dual-slope fit, censored EM, decorrelation distance).
//! - [`metrics`], [`config`] and [`sweep`]: figure-level metrics, run
//!   configuration and multi-run orchestration.

pub mod config;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod metrics;
pub mod mobility;
pub mod netsim;
pub mod propagation;
pub mod rng;
pub mod shadowing;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::LinkClass;
pub use propagation::{PathLossParams, Scenario};

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Milliwatts to dBm. Zero power maps to negative infinity.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    dbm_to_mw(dbm) * 1e-3
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    mw_to_dbm(w * 1e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_round_trip() {
        assert!((dbm_to_watts(20.0) - 0.1).abs() < 1e-15);
        assert!((watts_to_dbm(0.1) - 20.0).abs() < 1e-12);
        assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
        assert_eq!(dbm_to_mw(f64::NEG_INFINITY), 0.0);
    }
}
