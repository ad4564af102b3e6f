use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::LinkClass;

/// Reference distance of the measured tables; below it the model is not valid.
pub const DEFAULT_D0_M: f64 = 10.0;
/// Breakpoint used for the measured tables.
pub const FITTED_BREAKPOINT_M: f64 = 104.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Highway,
    Urban,
}

/// One row of the dual-slope model.
///
/// Values are stored as tabulated: slopes and `pl0_db` are negative and the
/// evaluated quantity is a channel gain in dB. When `n1` is absent the row has
/// no short-range slope and `n2` is used from `d0_m` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    pub n2: f64,
    pub pl0_db: f64,
    pub sigma_db: f64,
    #[serde(default = "default_d0")]
    pub d0_m: f64,
    #[serde(default = "default_db")]
    pub db_m: f64,
}

fn default_d0() -> f64 {
    DEFAULT_D0_M
}

fn default_db() -> f64 {
    FITTED_BREAKPOINT_M
}

impl PathLossParams {
    pub fn new(n1: Option<f64>, n2: f64, pl0_db: f64, sigma_db: f64, d0_m: f64, db_m: f64) -> Result<Self> {
        let p = Self {
            n1,
            n2,
            pl0_db,
            sigma_db,
            d0_m,
            db_m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.n2, self.pl0_db, self.sigma_db, self.d0_m, self.db_m]
            .iter()
            .chain(self.n1.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(domain("path-loss parameters must be finite"));
        }
        if self.d0_m <= 0.0 {
            return Err(domain(format!("d0 must be positive, got {}", self.d0_m)));
        }
        if self.db_m <= self.d0_m {
            return Err(domain(format!(
                "breakpoint {} m must exceed the reference distance {} m",
                self.db_m, self.d0_m
            )));
        }
        if self.sigma_db <= 0.0 {
            return Err(domain(format!("sigma must be positive, got {}", self.sigma_db)));
        }
        Ok(())
    }

    /// True when the row lacks a short-range slope.
    pub fn is_single_slope(&self) -> bool {
        self.n1.is_none()
    }

    /// Slope in effect below the breakpoint.
    pub fn near_slope(&self) -> f64 {
        self.n1.unwrap_or(self.n2)
    }

    /// `PL0 + 10 n1 log10(d/d0)`, without range checks.
    pub fn branch_before(&self, d: f64) -> f64 {
        self.pl0_db + 10.0 * self.near_slope() * (d / self.d0_m).log10()
    }

    /// `PL0 + 10 n1 log10(db/d0) + 10 n2 log10(d/db)`, without range checks.
    pub fn branch_after(&self, d: f64) -> f64 {
        self.branch_before(self.db_m) + 10.0 * self.n2 * (d / self.db_m).log10()
    }

    /// Mean channel gain at distance `d` (no shadowing).
    pub fn gain_db(&self, d: f64) -> Result<f64> {
        if !(d >= self.d0_m) {
            return Err(Error::OutOfValidityRange {
                distance_m: d,
                d0_m: self.d0_m,
            });
        }
        Ok(self.gain_db_unchecked(d))
    }

    /// Mean gain with distances below `d0` clamped to `d0`.
    pub fn gain_db_clamped(&self, d: f64) -> f64 {
        self.gain_db_unchecked(d.max(self.d0_m))
    }

    fn gain_db_unchecked(&self, d: f64) -> f64 {
        if self.n1.is_none() {
            // no breakpoint: one slope from d0
            self.pl0_db + 10.0 * self.n2 * (d / self.d0_m).log10()
        } else if d <= self.db_m {
            self.branch_before(d)
        } else {
            self.branch_after(d)
        }
    }
}

/// Measured dual-slope parameters for a scenario and link class.
///
/// Only LOS and OLOS rows exist; NLOS links use the intersection model.
pub fn table_params(scenario: Scenario, class: LinkClass) -> Option<PathLossParams> {
    let (n1, n2, pl0, sigma) = match (scenario, class) {
        (Scenario::Highway, LinkClass::Los) => (Some(-1.66), -2.88, -66.1, 3.95),
        (Scenario::Urban, LinkClass::Los) => (Some(-1.81), -2.85, -63.9, 4.15),
        (Scenario::Highway, LinkClass::Olos) => (None, -3.18, -76.1, 6.12),
        (Scenario::Urban, LinkClass::Olos) => (Some(-1.93), -2.74, -72.3, 6.67),
        _ => return None,
    };
    Some(PathLossParams {
        n1,
        n2,
        pl0_db: pl0,
        sigma_db: sigma,
        d0_m: DEFAULT_D0_M,
        db_m: FITTED_BREAKPOINT_M,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn highway_los() -> PathLossParams {
        table_params(Scenario::Highway, LinkClass::Los).unwrap()
    }

    #[test]
    fn reference_distance_returns_pl0() {
        for scenario in [Scenario::Highway, Scenario::Urban] {
            for class in [LinkClass::Los, LinkClass::Olos] {
                let p = table_params(scenario, class).unwrap();
                assert_eq!(p.gain_db(p.d0_m).unwrap(), p.pl0_db);
            }
        }
        assert_eq!(highway_los().gain_db(10.0).unwrap(), -66.1);
    }

    #[test]
    fn golden_values() {
        // independent scalar evaluation
        let at_db = -66.1 + 10.0 * -1.66 * (104.0f64 / 10.0).log10();
        let at_2db = at_db + 10.0 * -2.88 * 2.0f64.log10();
        let p = highway_los();
        assert!((p.gain_db(104.0).unwrap() - at_db).abs() < 1e-12);
        assert!((p.gain_db(208.0).unwrap() - at_2db).abs() < 1e-12);
        assert!((at_db - -82.98).abs() < 0.01, "{at_db}");
        assert!((at_2db - -91.65).abs() < 0.01, "{at_2db}");
        assert_eq!(p.branch_before(p.db_m), p.branch_after(p.db_m));
    }

    #[test]
    fn offsets_between_classes() {
        for (scenario, delta) in [(Scenario::Highway, 10.0), (Scenario::Urban, 8.4)] {
            let los = table_params(scenario, LinkClass::Los).unwrap();
            let olos = table_params(scenario, LinkClass::Olos).unwrap();
            assert!((los.pl0_db - olos.pl0_db - delta).abs() < 1e-9);
        }
    }

    #[test]
    fn single_slope_fallback() {
        let p = table_params(Scenario::Highway, LinkClass::Olos).unwrap();
        assert!(p.is_single_slope());
        let d = 50.0;
        assert!((p.gain_db(d).unwrap() - (-76.1 - 31.8 * 5.0f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn below_reference_distance() {
        let p = highway_los();
        assert!(matches!(p.gain_db(9.99), Err(Error::OutOfValidityRange { .. })));
        assert!(p.gain_db(f64::NAN).is_err());
        assert_eq!(p.gain_db_clamped(3.0), p.pl0_db);
        assert!(table_params(Scenario::Urban, LinkClass::Nlos).is_none());
    }

    #[test]
    fn validation() {
        assert!(PathLossParams::new(Some(-2.0), -3.0, -60.0, 4.0, 10.0, 10.0).is_err());
        assert!(PathLossParams::new(Some(-2.0), -3.0, -60.0, 0.0, 10.0, 100.0).is_err());
        assert!(PathLossParams::new(Some(-2.0), -3.0, -60.0, 4.0, 0.0, 100.0).is_err());
        assert!(PathLossParams::new(None, -3.0, -60.0, 4.0, 10.0, 100.0).is_ok());
    }

    proptest! {
        #[test]
        fn strictly_decreasing(a in 10.0f64..3000.0, b in 10.0f64..3000.0) {
            prop_assume!((a - b).abs() > 1e-6);
            for class in [LinkClass::Los, LinkClass::Olos] {
                for scenario in [Scenario::Highway, Scenario::Urban] {
                    let p = table_params(scenario, class).unwrap();
                    let (near, far) = if a < b { (a, b) } else { (b, a) };
                    prop_assert!(p.gain_db(near).unwrap() > p.gain_db(far).unwrap());
                }
            }
        }

        #[test]
        fn continuous_at_breakpoint(n1 in -4.0f64..-0.5, n2 in -5.0f64..-0.5, pl0 in -90.0f64..-40.0, db in 20.0f64..400.0) {
            let p = PathLossParams::new(Some(n1), n2, pl0, 4.0, 10.0, db).unwrap();
            prop_assert_eq!(p.branch_before(db), p.branch_after(db));
            let eps = db * 1e-9;
            prop_assert!((p.gain_db(db + eps).unwrap() - p.gain_db(db).unwrap()).abs() < 1e-6);
        }
    }
}
