use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::{em_censored_lognormal, median, GainSeries};
use crate::error::{domain, Error, Result};
use crate::propagation::PathLossParams;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Number of log-spaced bins between `d0` and the largest distance; the
    /// breakpoint is added as an extra edge.
    pub n_bins: usize,
    pub max_distance_m: Option<f64>,
    /// Bins with fewer samples are ignored.
    pub min_samples_per_bin: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_bins: 25,
            max_distance_m: None,
            min_samples_per_bin: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSummary {
    pub lo_m: f64,
    pub hi_m: f64,
    pub samples: usize,
    pub censored: usize,
    /// Median of `log10(d/d0)` over the bin.
    pub log_distance: f64,
    /// Median gain, or the EM location when the bin has censored samples.
    pub gain_db: Option<f64>,
    pub em_sigma_db: Option<f64>,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: PathLossParams,
    pub se_n1: f64,
    pub se_n2: f64,
    pub se_pl0_db: f64,
    /// Whether σ was pooled from per-bin EM estimates.
    pub sigma_from_em: bool,
    pub bins: Vec<BinSummary>,
}

fn log_edges(d0: f64, dmax: f64, n: usize, db: f64) -> Vec<f64> {
    let (a, b) = (d0.ln(), dmax.ln());
    let mut edges: Vec<f64> = (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect();
    edges[0] = d0;
    edges[n] = dmax;
    if db < dmax && edges.iter().all(|e| ((e - db) / db).abs() > 1e-9) {
        edges.push(db);
        edges.sort_by(f64::total_cmp);
    }
    edges
}

/// Continuity-constrained dual-slope least-squares fit to binned medians.
///
/// Samples closer than `d0` are ignored. Censored samples carry the
/// censoring threshold as their gain; bins containing any are summarised by
/// an EM fit instead of the median.
pub fn fit_dual_slope(series: &GainSeries, d0_m: f64, db_m: f64, opts: &FitOptions) -> Result<FitResult> {
    if !(d0_m > 0.0 && db_m > d0_m) {
        return Err(domain("need 0 < d0 < db"));
    }
    if opts.n_bins < 2 {
        return Err(domain("need at least two bins"));
    }
    series.validate()?;
    let dmax = opts
        .max_distance_m
        .unwrap_or_else(|| series.samples.iter().map(|s| s.distance_m).fold(0.0, f64::max));
    if !(dmax > d0_m) {
        return Err(Error::InsufficientData("no samples beyond d0".into()));
    }
    let edges = log_edges(d0_m, dmax, opts.n_bins, db_m);
    let n_bins = edges.len() - 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (i, s) in series.samples.iter().enumerate() {
        if s.distance_m < d0_m || s.distance_m > dmax {
            continue;
        }
        let b = edges
            .partition_point(|e| *e <= s.distance_m)
            .saturating_sub(1)
            .min(n_bins - 1);
        members[b].push(i);
    }
    let mut bins = Vec::with_capacity(n_bins);
    for (b, idx) in members.iter().enumerate() {
        let mut logd: Vec<f64> = idx
            .iter()
            .map(|&i| (series.samples[i].distance_m / d0_m).log10())
            .collect();
        let observed: Vec<f64> = idx
            .iter()
            .filter(|&&i| !series.samples[i].censored)
            .map(|&i| series.samples[i].gain_db)
            .collect();
        let censored = idx.len() - observed.len();
        let mut summary = BinSummary {
            lo_m: edges[b],
            hi_m: edges[b + 1],
            samples: idx.len(),
            censored,
            log_distance: if logd.is_empty() { f64::NAN } else { median(&mut logd) },
            gain_db: None,
            em_sigma_db: None,
            used: false,
        };
        if idx.len() >= opts.min_samples_per_bin && observed.len() >= 2 {
            if censored == 0 {
                summary.gain_db = Some(median(&mut observed.clone()));
            } else {
                let threshold = idx
                    .iter()
                    .filter(|&&i| series.samples[i].censored)
                    .map(|&i| series.samples[i].gain_db)
                    .fold(f64::NEG_INFINITY, f64::max);
                if let Ok(em) = em_censored_lognormal(&observed, censored, threshold) {
                    summary.gain_db = Some(em.mu_db);
                    summary.em_sigma_db = Some(em.sigma_db);
                }
            }
            summary.used = summary.gain_db.is_some();
        }
        bins.push(summary);
    }
    let near = bins.iter().filter(|b| b.used && b.hi_m <= db_m * (1.0 + 1e-12)).count();
    let far = bins.iter().filter(|b| b.used && b.lo_m >= db_m * (1.0 - 1e-12)).count();
    if near < 2 {
        return Err(Error::InsufficientBins {
            side: "near",
            found: near,
            needed: 2,
        });
    }
    if far < 2 {
        return Err(Error::InsufficientBins {
            side: "far",
            found: far,
            needed: 2,
        });
    }

    let xb = (db_m / d0_m).log10();
    let row = |x: f64| Vector3::new(1.0, 10.0 * x.min(xb), 10.0 * (x - xb).max(0.0));
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    let used: Vec<&BinSummary> = bins.iter().filter(|b| b.used).collect();
    for b in &used {
        let r = row(b.log_distance);
        let y = b.gain_db.expect("used bin has a value");
        ata += r * r.transpose();
        aty += r * y;
    }
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::InsufficientData("singular fit design".into()))?;
    let beta = inv * aty;
    let (pl0, n1, n2) = (beta[0], beta[1], beta[2]);
    let predict = |d: f64| row((d / d0_m).log10()).dot(&beta);

    let m = used.len();
    let rss: f64 = used
        .iter()
        .map(|b| (b.gain_db.unwrap() - row(b.log_distance).dot(&beta)).powi(2))
        .sum();
    let s2 = if m > 3 { rss / (m - 3) as f64 } else { 0.0 };
    let se = |i: usize| (s2 * inv[(i, i)]).max(0.0).sqrt();

    let sigma_from_em = used.iter().any(|b| b.censored > 0);
    let sigma = if !sigma_from_em {
        let res: Vec<f64> = members
            .iter()
            .flatten()
            .map(|&i| series.samples[i].gain_db - predict(series.samples[i].distance_m))
            .collect();
        let mean = res.iter().sum::<f64>() / res.len() as f64;
        (res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (res.len().max(2) - 1) as f64).sqrt()
    } else {
        // pooled: EM spread for censored bins, residual spread otherwise
        let mut num = 0.0;
        let mut den = 0.0;
        for (b, idx) in bins.iter().zip(&members) {
            if !b.used {
                continue;
            }
            let var = match b.em_sigma_db {
                Some(s) => s * s,
                None => {
                    idx.iter()
                        .map(|&i| (series.samples[i].gain_db - predict(series.samples[i].distance_m)).powi(2))
                        .sum::<f64>()
                        / idx.len() as f64
                }
            };
            num += b.samples as f64 * var;
            den += b.samples as f64;
        }
        (num / den).sqrt()
    };
    let params = PathLossParams::new(Some(n1), n2, pl0, sigma.max(f64::MIN_POSITIVE), d0_m, db_m)?;
    Ok(FitResult {
        params,
        se_n1: se(1),
        se_n2: se(2),
        se_pl0_db: se(0),
        sigma_from_em,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::GainSample;
    use crate::propagation::{table_params, Scenario};
    use crate::rng::{keyed, Stream};
    use crate::LinkClass;
    use rand_distr::{Distribution, Normal};

    fn synthetic(p: &PathLossParams, n: usize, noise_db: f64, seed: u64) -> GainSeries {
        let mut rng = keyed(seed, Stream::Channel, 1);
        let noise = Normal::new(0.0, noise_db.max(1e-300)).unwrap();
        let (a, b) = (10f64.ln(), 1000f64.ln());
        let samples = (0..n)
            .map(|i| {
                let d = (a + (b - a) * (i as f64 + 0.5) / n as f64).exp();
                let e = if noise_db > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                GainSample {
                    distance_m: d,
                    gain_db: p.gain_db(d).unwrap() + e,
                    censored: false,
                }
            })
            .collect();
        GainSeries {
            samples,
            noise_floor_db: None,
        }
    }

    fn hw_los() -> PathLossParams {
        table_params(Scenario::Highway, LinkClass::Los).unwrap()
    }

    #[test]
    fn noiseless_round_trip_is_exact() {
        let p = hw_los();
        let fit = fit_dual_slope(&synthetic(&p, 5000, 0.0, 1), 10.0, 104.0, &FitOptions::default()).unwrap();
        assert!((fit.params.n1.unwrap() - p.n1.unwrap()).abs() < 1e-9);
        assert!((fit.params.n2 - p.n2).abs() < 1e-9);
        assert!((fit.params.pl0_db - p.pl0_db).abs() < 1e-9);
    }

    #[test]
    fn noisy_fit_within_three_standard_errors() {
        let p = hw_los();
        let fit = fit_dual_slope(&synthetic(&p, 10_000, 4.0, 2), 10.0, 104.0, &FitOptions::default()).unwrap();
        assert!(
            (fit.params.n1.unwrap() - p.n1.unwrap()).abs() < 3.0 * fit.se_n1,
            "{fit:?}"
        );
        assert!((fit.params.n2 - p.n2).abs() < 3.0 * fit.se_n2);
        assert!((fit.params.pl0_db - p.pl0_db).abs() < 3.0 * fit.se_pl0_db);
        assert!((fit.params.sigma_db - 4.0).abs() < 0.15);
        assert!(!fit.sigma_from_em);
    }

    #[test]
    fn single_slope_data_gives_equal_slopes() {
        let p = PathLossParams::new(Some(-2.5), -2.5, -70.0, 1.0, 10.0, 104.0).unwrap();
        let fit = fit_dual_slope(&synthetic(&p, 4000, 0.0, 3), 10.0, 104.0, &FitOptions::default()).unwrap();
        assert!((fit.params.n1.unwrap() - fit.params.n2).abs() < 1e-9);
    }

    #[test]
    fn missing_far_side_is_named() {
        let p = hw_los();
        let mut s = synthetic(&p, 2000, 0.0, 4);
        s.samples.retain(|x| x.distance_m < 90.0);
        match fit_dual_slope(&s, 10.0, 104.0, &FitOptions::default()) {
            Err(Error::InsufficientBins { side, .. }) => assert_eq!(side, "far"),
            other => panic!("{other:?}"),
        }
        let mut s = synthetic(&p, 2000, 0.0, 4);
        s.samples.retain(|x| x.distance_m > 100.0);
        match fit_dual_slope(&s, 10.0, 104.0, &FitOptions::default()) {
            Err(Error::InsufficientBins { side, .. }) => assert_eq!(side, "near"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn censored_bins_use_em() {
        let p = hw_los();
        let mut s = synthetic(&p, 20_000, 4.0, 5);
        let threshold = -98.0;
        for x in &mut s.samples {
            if x.gain_db < threshold {
                x.gain_db = threshold;
                x.censored = true;
            }
        }
        let fit = fit_dual_slope(&s, 10.0, 104.0, &FitOptions::default()).unwrap();
        assert!(fit.sigma_from_em);
        assert!((fit.params.n2 - p.n2).abs() < 0.15, "{}", fit.params.n2);
        assert!((fit.params.sigma_db - 4.0).abs() < 0.3, "{}", fit.params.sigma_db);
    }

    #[test]
    fn breakpoint_is_a_bin_edge() {
        let e = log_edges(10.0, 1000.0, 25, 104.0);
        assert_eq!(e.len(), 27);
        assert!(e.contains(&104.0));
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }
}
