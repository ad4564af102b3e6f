use num_complex::Complex64;

use crate::error::{domain, Result};

/// Antenna gain of the measurement setup, dBi.
pub const DEFAULT_ANTENNA_GAIN_DBI: f64 = 3.7;

/// Margin above the noise floor below which taps are discarded, dB.
pub const DEFAULT_MARGIN_DB: f64 = 3.0;

/// Time-variant channel impulse response sampled on a time × delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CirTrace {
    pub n_time: usize,
    pub n_delay: usize,
    /// Time step between snapshots, s.
    pub dt: f64,
    /// Delay resolution, s.
    pub dtau: f64,
    /// Row-major: `h[t * n_delay + tau]`.
    pub h: Vec<Complex64>,
}

impl CirTrace {
    pub fn new(n_time: usize, n_delay: usize, dt: f64, dtau: f64, h: Vec<Complex64>) -> Result<Self> {
        let c = Self {
            n_time,
            n_delay,
            dt,
            dtau,
            h,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dtau > 0.0) {
            return Err(domain("CIR time and delay steps must be positive"));
        }
        if self.h.len() != self.n_time * self.n_delay {
            return Err(domain(format!(
                "CIR holds {} samples, expected {} x {}",
                self.h.len(),
                self.n_time,
                self.n_delay
            )));
        }
        if self.h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("CIR contains non-finite samples"));
        }
        Ok(())
    }

    pub fn snapshot(&self, t: usize) -> &[Complex64] {
        &self.h[t * self.n_delay..(t + 1) * self.n_delay]
    }
}

/// Block-averaged power-delay profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Apdp {
    pub n_blocks: usize,
    pub n_delay: usize,
    /// Time between consecutive profiles, `n_avg · dt`.
    pub dt: f64,
    pub dtau: f64,
    pub p: Vec<f64>,
}

impl Apdp {
    pub fn profile(&self, k: usize) -> &[f64] {
        &self.p[k * self.n_delay..(k + 1) * self.n_delay]
    }

    pub fn profiles(&self) -> impl Iterator<Item = &[f64]> {
        self.p.chunks(self.n_delay.max(1))
    }
}

/// Average `|h|²` over consecutive blocks of `n_avg` snapshots. A trailing
/// partial block is dropped.
pub fn compute_apdp(cir: &CirTrace, n_avg: usize) -> Result<Apdp> {
    cir.validate()?;
    if cir.n_time == 0 || cir.n_delay == 0 {
        return Err(domain("empty CIR trace"));
    }
    if n_avg == 0 || n_avg > cir.n_time {
        return Err(domain(format!("n_avg must lie in 1..={}, got {n_avg}", cir.n_time)));
    }
    let n_blocks = cir.n_time / n_avg;
    let mut p = vec![0.0; n_blocks * cir.n_delay];
    for k in 0..n_blocks {
        let out = &mut p[k * cir.n_delay..(k + 1) * cir.n_delay];
        for t in k * n_avg..(k + 1) * n_avg {
            for (o, z) in out.iter_mut().zip(cir.snapshot(t)) {
                *o += z.norm_sqr();
            }
        }
        for o in out.iter_mut() {
            *o /= n_avg as f64;
        }
    }
    Ok(Apdp {
        n_blocks,
        n_delay: cir.n_delay,
        dt: cir.dt * n_avg as f64,
        dtau: cir.dtau,
        p,
    })
}

/// Channel gain of one profile, or a marker when nothing clears the
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainValue {
    Db(f64),
    Censored,
}

impl GainValue {
    pub fn db(self) -> Option<f64> {
        match self {
            GainValue::Db(g) => Some(g),
            GainValue::Censored => None,
        }
    }
}

/// Sum of the taps at or above `noise_floor_db + margin_db`, in dB.
pub fn channel_gain(pdp: &[f64], noise_floor_db: f64, margin_db: f64) -> Result<GainValue> {
    if !noise_floor_db.is_finite() || !margin_db.is_finite() {
        return Err(domain("noise floor and margin must be finite"));
    }
    if pdp.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(domain("power-delay profile must be finite and non-negative"));
    }
    let threshold = 10f64.powf((noise_floor_db + margin_db) / 10.0);
    let sum: f64 = pdp.iter().filter(|p| **p >= threshold).sum();
    Ok(if sum > 0.0 {
        GainValue::Db(10.0 * sum.log10())
    } else {
        GainValue::Censored
    })
}

/// Path loss in dB from a measured gain with antenna gains and the
/// implementation loss removed.
pub fn pathloss_from_gain(gain_db: f64, ga_dbi: f64, pil_db: f64) -> f64 {
    2.0 * ga_dbi - pil_db - gain_db
}
