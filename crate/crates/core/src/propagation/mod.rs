//! Mean channel gain for every link class.
//!
//! Gains are in dB and follow the sign convention of the measured tables:
//! a link at the reference distance has gain `pl0_db` (a negative number),
//! and received power is `PRX_dBm = PTX_dBm + gain_dB`. The street-intersection
//! model is the exception: it is stated as a positive loss, see [`nlos`].

mod dual_slope;
pub mod nakagami;
pub mod nlos;

pub use dual_slope::{table_params, PathLossParams, Scenario, DEFAULT_D0_M, FITTED_BREAKPOINT_M};
pub use nakagami::{MInterval, NakagamiParams};
pub use nlos::{nlos_loss_db, NlosGeometry, NlosParams, DEFAULT_NLOS_SIGMA_DB, N_NLOS};

use crate::error::{domain, Result};

/// Distance at which the first Fresnel zone touches a flat ground,
/// `(4 h_tx h_rx - λ²/4) / λ`.
pub fn flat_earth_breakpoint(h_tx_m: f64, h_rx_m: f64, lambda_m: f64) -> Result<f64> {
    if !(h_tx_m > 0.0 && h_rx_m > 0.0 && lambda_m > 0.0) {
        return Err(domain(format!(
            "breakpoint needs positive heights and wavelength, got h_tx={h_tx_m}, h_rx={h_rx_m}, lambda={lambda_m}"
        )));
    }
    Ok((4.0 * h_tx_m * h_rx_m - lambda_m * lambda_m / 4.0) / lambda_m)
}

/// Free-space wavelength for a carrier frequency.
pub fn wavelength_m(carrier_hz: f64) -> f64 {
    299_792_458.0 / carrier_hz
}

/// Loss assigned to links between vehicles on parallel streets separated by
/// buildings. Such links carry no usable power and are dropped from every
/// interference sum; infinity makes `PTX - loss` map to exactly zero watts.
pub const PARALLEL_STREET_LOSS_DB: f64 = f64::INFINITY;

/// The documented floor for the parallel-street loss.
pub const PARALLEL_STREET_MIN_LOSS_DB: f64 = 120.0;

pub fn parallel_street_loss() -> f64 {
    PARALLEL_STREET_LOSS_DB
}

/// Probability-weighted received power over the LOS and OLOS states,
/// combined in the linear power domain.
///
/// The residual mass `1 - p_los - p_olos` contributes nothing.
pub fn mix_received_power(p_los: f64, p_olos: f64, prx_los_w: f64, prx_olos_w: f64) -> Result<f64> {
    const EPS: f64 = 1e-9;
    if !(0.0..=1.0).contains(&p_los) || !(0.0..=1.0).contains(&p_olos) || p_los + p_olos > 1.0 + EPS {
        return Err(domain(format!(
            "state probabilities must lie in [0,1] and sum to at most 1, got {p_los} and {p_olos}"
        )));
    }
    if !(prx_los_w >= 0.0 && prx_olos_w >= 0.0) {
        return Err(domain(format!(
            "received powers must be non-negative, got {prx_los_w} W and {prx_olos_w} W"
        )));
    }
    Ok(p_los * prx_los_w + p_olos * prx_olos_w)
}
