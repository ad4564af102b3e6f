//! Parameter estimation from channel measurements: averaged power-delay
//! profiles, noise-thresholded channel gain, dual-slope least-squares fits,
//! EM for censored log-normal samples and decorrelation distance.

mod apdp;
mod decorrelation;
mod em;
mod fit;
mod io;

pub use apdp::{
    channel_gain, compute_apdp, pathloss_from_gain, Apdp, CirTrace, GainValue, DEFAULT_ANTENNA_GAIN_DBI,
    DEFAULT_MARGIN_DB,
};
pub use decorrelation::{estimate_decorrelation, fit_exponential_acf, DecorrelationEstimate};
pub use em::{em_censored_lognormal, EmResult, EM_MAX_ITERATIONS, EM_TOLERANCE_DB};
pub use fit::{fit_dual_slope, BinSummary, FitOptions, FitResult};
pub use io::{read_cir, read_gain_series, write_cir, write_gain_series, GainSample, GainSeries};

/// Median of a non-empty slice (mean of the middle pair for even length).
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
