use statrs::function::erf::erfc;

use crate::error::{domain, Error, Result};

/// Convergence threshold on the change of μ and σ, dB.
pub const EM_TOLERANCE_DB: f64 = 1e-6;
pub const EM_MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub mu_db: f64,
    pub sigma_db: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood before the first and after every
    /// iteration.
    pub loglik: Vec<f64>,
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_logpdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-likelihood of `values` plus `censored` samples known only to lie
/// below `threshold`.
fn loglik(values: &[f64], censored: usize, threshold: f64, mu: f64, sigma: f64) -> f64 {
    let obs: f64 = values.iter().map(|x| norm_logpdf((x - mu) / sigma) - sigma.ln()).sum();
    obs + censored as f64 * norm_cdf((threshold - mu) / sigma).ln()
}

/// Maximum-likelihood normal fit (in dB) of a left-censored sample.
///
/// `values` are the observed samples; `censored_count` further samples fell
/// below `threshold_db`. Starts from the observed mean and standard deviation.
pub fn em_censored_lognormal(values: &[f64], censored_count: usize, threshold_db: f64) -> Result<EmResult> {
    if values.is_empty() {
        return Err(Error::NonIdentifiable);
    }
    if values.len() < 2 {
        return Err(Error::InsufficientData("EM needs at least two observed values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(domain("observed values must be finite"));
    }
    let n_obs = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    let mut mu = sum / n_obs;
    let mut sigma = (sum_sq / n_obs - mu * mu).max(0.0).sqrt();
    if censored_count == 0 {
        return Ok(EmResult {
            mu_db: mu,
            sigma_db: sigma,
            iterations: 0,
            converged: true,
            loglik: if sigma > 0.0 {
                vec![loglik(values, 0, threshold_db, mu, sigma)]
            } else {
                vec![]
            },
        });
    }
    if !threshold_db.is_finite() {
        return Err(domain("censoring threshold must be finite"));
    }
    if !(sigma > 0.0) {
        return Err(domain("observed values are all equal; spread is not identifiable"));
    }
    let k = censored_count as f64;
    let n = n_obs + k;
    let mut trace = vec![loglik(values, censored_count, threshold_db, mu, sigma)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < EM_MAX_ITERATIONS {
        iterations += 1;
        // moments of N(mu, sigma²) truncated to (-inf, threshold)
        let alpha = (threshold_db - mu) / sigma;
        let cdf = norm_cdf(alpha);
        let lambda = if cdf > 0.0 {
            norm_logpdf(alpha).exp() / cdf
        } else {
            -alpha
        };
        let e1 = mu - sigma * lambda;
        let var = sigma * sigma * (1.0 - alpha * lambda - lambda * lambda).max(0.0);
        let e2 = var + e1 * e1;
        let new_mu = (sum + k * e1) / n;
        let new_sigma = ((sum_sq + k * e2) / n - new_mu * new_mu).max(0.0).sqrt();
        let change = (new_mu - mu).abs().max((new_sigma - sigma).abs());
        let ll = loglik(values, censored_count, threshold_db, new_mu, new_sigma);
        let prev = *trace.last().expect("non-empty");
        if ll < prev {
            // Only rounding can lower the likelihood; the previous step is the optimum.
            debug_assert!(
                prev - ll <= 1e-9 * prev.abs().max(1.0),
                "EM log-likelihood decreased: {prev} -> {ll}"
            );
            converged = true;
            break;
        }
        mu = new_mu;
        sigma = new_sigma;
        trace.push(ll);
        if change < EM_TOLERANCE_DB {
            converged = true;
            break;
        }
    }
    Ok(EmResult {
        mu_db: mu,
        sigma_db: sigma,
        iterations,
        converged,
        loglik: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed, Stream};
    use rand_distr::{Distribution, Normal};

    fn censored_sample(seed: u64, n: usize, mu: f64, sigma: f64, threshold: f64) -> (Vec<f64>, usize) {
        let mut rng = keyed(seed, Stream::Bootstrap, 99);
        let dist = Normal::new(mu, sigma).unwrap();
        let all: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let observed: Vec<f64> = all.iter().copied().filter(|x| *x >= threshold).collect();
        let c = n - observed.len();
        (observed, c)
    }

    #[test]
    fn no_censoring_is_sample_mle() {
        let v = [1.0, 2.0, 4.0, 7.0];
        let r = em_censored_lognormal(&v, 0, -100.0).unwrap();
        assert_eq!(r.mu_db, 3.5);
        let var = v.iter().map(|x| (x - 3.5f64).powi(2)).sum::<f64>() / 4.0;
        assert!((r.sigma_db - var.sqrt()).abs() < 1e-12);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn recovers_censored_normal() {
        let (obs, c) = censored_sample(1, 10_000, -90.0, 6.0, -100.0);
        let frac = c as f64 / 10_000.0;
        assert!((0.03..0.07).contains(&frac), "{frac}");
        let r = em_censored_lognormal(&obs, c, -100.0).unwrap();
        assert!(r.converged);
        assert!((r.mu_db + 90.0).abs() <= 0.3, "{}", r.mu_db);
        assert!((r.sigma_db - 6.0).abs() <= 0.3, "{}", r.sigma_db);
        assert!(r.loglik.windows(2).all(|w| w[1] >= w[0]));
        // the naive estimate is biased upward
        let naive = obs.iter().sum::<f64>() / obs.len() as f64;
        assert!(naive > r.mu_db);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            em_censored_lognormal(&[], 5, -100.0),
            Err(Error::NonIdentifiable)
        ));
        assert!(matches!(
            em_censored_lognormal(&[1.0], 5, -100.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(em_censored_lognormal(&[1.0, 1.0], 5, 0.0).is_err());
    }

    #[test]
    fn more_censoring_more_variance() {
        let spread = |threshold: f64| {
            let mus: Vec<f64> = (0..100)
                .map(|s| {
                    let (obs, c) = censored_sample(1000 + s, 400, -90.0, 6.0, threshold);
                    em_censored_lognormal(&obs, c, threshold).unwrap().mu_db
                })
                .collect();
            let m = mus.iter().sum::<f64>() / mus.len() as f64;
            mus.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (mus.len() - 1) as f64
        };
        let v = [spread(-110.0), spread(-92.0), spread(-86.0)];
        assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
    }
}
