use serde::Serialize;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecorrelationEstimate {
    /// Least-squares fit of `exp(-Δd/dc)` to the empirical autocorrelation.
    pub dc_m: f64,
    /// Lag where the autocorrelation first drops to `1/e`, if it does.
    pub dc_crossing_m: Option<f64>,
    pub grid_step_m: f64,
    /// The estimate is shorter than one grid step and not resolved.
    pub below_resolution: bool,
    pub acf: Vec<f64>,
}

/// Least-squares `dc` for `acf[k] ≈ exp(-k·step/dc)` over the given lags.
pub fn fit_exponential_acf(step_m: f64, acf: &[f64]) -> Result<f64> {
    if !(step_m > 0.0) || acf.len() < 2 {
        return Err(domain("need a positive step and at least two lags"));
    }
    let sse = |log_dc: f64| -> f64 {
        let dc = log_dc.exp();
        acf.iter()
            .enumerate()
            .map(|(k, r)| (r - (-(k as f64) * step_m / dc).exp()).powi(2))
            .sum()
    };
    // golden-section search over log(dc)
    let span = step_m * acf.len() as f64;
    let (mut a, mut b) = ((step_m * 1e-3).ln(), (span * 1e3).ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sse(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}

fn resample(series: &[(f64, f64)], step: f64) -> Vec<f64> {
    let start = series[0].0;
    let end = series[series.len() - 1].0;
    let n = ((end - start) / step).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let d = start + k as f64 * step;
        while j + 2 < series.len() && series[j + 1].0 < d {
            j += 1;
        }
        let (d0, x0) = series[j];
        let (d1, x1) = series[(j + 1).min(series.len() - 1)];
        let x = if d1 > d0 {
            x0 + (x1 - x0) * ((d - d0) / (d1 - d0)).clamp(0.0, 1.0)
        } else {
            x0
        };
        out.push(x);
    }
    out
}

/// Decorrelation distance of a shadowing series given as (distance,
/// value) pairs with the distance-dependent mean already removed.
///
/// The series is resampled onto a grid of `grid_step_m` (default: the
/// median spacing), its biased autocorrelation is computed, and
/// `exp(-Δd/dc)` is fitted over the lags up to the first one where the
/// autocorrelation falls below `e^-2`.
pub fn estimate_decorrelation(series: &[(f64, f64)], grid_step_m: Option<f64>) -> Result<DecorrelationEstimate> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(
            "decorrelation needs at least two samples".into(),
        ));
    }
    if series.iter().any(|(d, x)| !d.is_finite() || !x.is_finite()) {
        return Err(domain("series must be finite"));
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(domain("distances must be strictly increasing"));
    }
    let step = match grid_step_m {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(domain(format!("grid step must be positive, got {s}"))),
        None => {
            let mut gaps: Vec<f64> = series.windows(2).map(|w| w[1].0 - w[0].0).collect();
            super::median(&mut gaps)
        }
    };
    let span = series[series.len() - 1].0 - series[0].0;
    if span < 10.0 * step {
        return Err(Error::InsufficientData(format!(
            "series spans {span} m, need at least ten grid steps ({} m)",
            10.0 * step
        )));
    }
    let mut x = resample(series, step);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let n = x.len();
    let c0: f64 = x.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(Error::InsufficientData("series has zero variance".into()));
    }
    let max_lag = (n - 1).min(n / 2).max(1);
    let e2 = (-2f64).exp();
    let mut acf = vec![1.0];
    for k in 1..=max_lag {
        let ck: f64 = x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum();
        let r = ck / c0;
        acf.push(r);
        if r < e2 {
            break;
        }
    }
    let dc = fit_exponential_acf(step, &acf)?;
    let inv_e = (-1f64).exp();
    let crossing = acf.windows(2).position(|w| w[1] <= inv_e).map(|k| {
        let (r0, r1) = (acf[k], acf[k + 1]);
        step * (k as f64 + (r0 - inv_e) / (r0 - r1))
    });
    Ok(DecorrelationEstimate {
        dc_m: dc,
        dc_crossing_m: crossing,
        grid_step_m: step,
        below_resolution: dc < step,
        acf,
    })
}
