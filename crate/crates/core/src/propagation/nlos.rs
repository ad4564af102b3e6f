//! Street-intersection (NLOS) path loss.
//!
//! ```text
//! PL = 3.75 + i_s·2.94 + 10·n·log10( dt^0.957 / (xt·wr)^0.81 · 4π·dr / λ )          dr <= db
//!                      + 10·n·log10( dt^0.957 / (xt·wr)^0.81 · 4π·dr² / (λ·db) )     dr >  db
//! ```
//!
//! The result is a positive loss in dB; the link gain is its negation.

use serde::{Deserialize, Serialize};

use super::flat_earth_breakpoint;
use crate::error::{domain, Result};

/// Path-loss exponent of the intersection model.
pub const N_NLOS: f64 = 2.69;
/// Log-normal fading spread of the intersection model.
pub const DEFAULT_NLOS_SIGMA_DB: f64 = 4.1;

const DEFAULT_LAMBDA_M: f64 = 0.0536;
const DEFAULT_ANTENNA_HEIGHT_M: f64 = 1.47;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NlosParams {
    pub n_nlos: f64,
    pub sigma_db: f64,
    /// Suburban (`true`) or urban (`false`) environment.
    pub suburban: bool,
    pub db_m: f64,
    pub lambda_m: f64,
}

impl Default for NlosParams {
    fn default() -> Self {
        let db_m = flat_earth_breakpoint(DEFAULT_ANTENNA_HEIGHT_M, DEFAULT_ANTENNA_HEIGHT_M, DEFAULT_LAMBDA_M)
            .expect("positive defaults");
        Self {
            n_nlos: N_NLOS,
            sigma_db: DEFAULT_NLOS_SIGMA_DB,
            suburban: false,
            db_m,
            lambda_m: DEFAULT_LAMBDA_M,
        }
    }
}

impl NlosParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_nlos > 0.0 && self.lambda_m > 0.0 && self.db_m > 0.0 && self.sigma_db > 0.0) {
            return Err(domain(format!("invalid NLOS parameters: {self:?}")));
        }
        Ok(())
    }

    fn suburban_indicator(&self) -> f64 {
        if self.suburban {
            1.0
        } else {
            0.0
        }
    }
}

/// Street geometry of an NLOS link around one intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlosGeometry {
    /// RX distance to the intersection centre.
    pub dr_m: f64,
    /// TX distance to the intersection centre.
    pub dt_m: f64,
    /// Width of the RX street.
    pub wr_m: f64,
    /// TX distance to the wall.
    pub xt_m: f64,
}

impl NlosGeometry {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.dr_m, self.dt_m, self.wr_m, self.xt_m]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_positive {
            return Err(domain(format!("NLOS geometry fields must be positive, got {self:?}")));
        }
        Ok(())
    }
}

/// Street-intersection path loss (positive dB).
pub fn nlos_loss_db(p: &NlosParams, g: &NlosGeometry) -> Result<f64> {
    p.validate()?;
    g.validate()?;
    let street = g.dt_m.powf(0.957) / (g.xt_m * g.wr_m).powf(0.81);
    let spread = if g.dr_m <= p.db_m {
        4.0 * std::f64::consts::PI * g.dr_m / p.lambda_m
    } else {
        4.0 * std::f64::consts::PI * g.dr_m * g.dr_m / (p.lambda_m * p.db_m)
    };
    Ok(3.75 + p.suburban_indicator() * 2.94 + 10.0 * p.n_nlos * (street * spread).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(suburban: bool) -> NlosParams {
        NlosParams {
            n_nlos: 2.69,
            sigma_db: 4.1,
            suburban,
            db_m: 161.0,
            lambda_m: 0.0536,
        }
    }

    fn geom(dr: f64) -> NlosGeometry {
        NlosGeometry {
            dr_m: dr,
            dt_m: 50.0,
            wr_m: 15.0,
            xt_m: 7.5,
        }
    }

    #[test]
    fn scalar_evaluation() {
        // written out term by term
        let inner = 50f64.powf(0.957) / 112.5f64.powf(0.81) * (4.0 * std::f64::consts::PI * 30.0 / 0.0536);
        let oracle = 3.75 + 2.69 * 10.0 * inner.log10();
        let got = nlos_loss_db(&params(false), &geom(30.0)).unwrap();
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 106.3).abs() < 0.1, "{got}");
    }

    #[test]
    fn suburban_offset() {
        let a = nlos_loss_db(&params(false), &geom(80.0)).unwrap();
        let b = nlos_loss_db(&params(true), &geom(80.0)).unwrap();
        assert!(((b - a) - 2.94).abs() < 1e-12);
    }

    #[test]
    fn branches_meet_at_breakpoint() {
        let p = params(false);
        let g = geom(p.db_m);
        let street = g.dt_m.powf(0.957) / (g.xt_m * g.wr_m).powf(0.81);
        let near = 10.0 * p.n_nlos * (street * 4.0 * std::f64::consts::PI * g.dr_m / p.lambda_m).log10();
        let far =
            10.0 * p.n_nlos * (street * 4.0 * std::f64::consts::PI * g.dr_m * g.dr_m / (p.lambda_m * p.db_m)).log10();
        assert!((near - far).abs() < 1e-9);
        let just_after = nlos_loss_db(&p, &geom(p.db_m * (1.0 + 1e-12))).unwrap();
        let at = nlos_loss_db(&p, &g).unwrap();
        assert!((just_after - at).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut g = geom(30.0);
        g.xt_m = 0.0;
        assert!(nlos_loss_db(&params(false), &g).is_err());
        let mut p = params(false);
        p.lambda_m = 0.0;
        assert!(nlos_loss_db(&p, &geom(30.0)).is_err());
    }

    #[test]
    fn default_breakpoint_is_flat_earth() {
        let p = NlosParams::default();
        assert!((p.db_m - 161.0).abs() < 1.0);
        assert_eq!(p.n_nlos, 2.69);
        assert_eq!(p.sigma_db, 4.1);
    }

    proptest! {
        #[test]
        fn non_decreasing_in_rx_distance(a in 1.0f64..1000.0, b in 1.0f64..1000.0, suburban: bool) {
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            let p = params(suburban);
            prop_assert!(nlos_loss_db(&p, &geom(near)).unwrap() <= nlos_loss_db(&p, &geom(far)).unwrap() + 1e-12);
        }
    }
}
