use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use v2v_shadow::estimation::{fit_dual_slope, read_gain_series, write_gain_series, FitOptions, GainSample, GainSeries};
use v2v_shadow::propagation::table_params;
use v2v_shadow::{LinkClass, Scenario};

fn log_spaced(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
}

#[test]
fn fit_through_csv_round_trip() {
    let truth = table_params(Scenario::Urban, LinkClass::Los).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, truth.sigma_db).unwrap();
    let samples = log_spaced(20_000, 10.0, 800.0)
        .map(|d| GainSample {
            distance_m: d,
            gain_db: truth.gain_db(d).unwrap() + noise.sample(&mut rng),
            censored: false,
        })
        .collect();
    let series = GainSeries {
        samples,
        noise_floor_db: None,
    };
    let mut buf = Vec::new();
    write_gain_series(&series, &mut buf).unwrap();
    let back = read_gain_series(buf.as_slice()).unwrap();
    assert_eq!(back.samples.len(), series.samples.len());

    let fit = fit_dual_slope(&back, truth.d0_m, truth.db_m, &FitOptions::default()).unwrap();
    assert!(
        (fit.params.n1.unwrap() - truth.n1.unwrap()).abs() < 0.1,
        "{:?}",
        fit.params
    );
    assert!((fit.params.n2 - truth.n2).abs() < 0.1, "{:?}", fit.params);
    assert!((fit.params.pl0_db - truth.pl0_db).abs() < 0.5, "{:?}", fit.params);
    assert!(!fit.sigma_from_em);
    assert!((fit.params.sigma_db - truth.sigma_db).abs() < 0.2);
}

#[test]
fn censored_far_bins_use_em() {
    let truth = table_params(Scenario::Highway, LinkClass::Los).unwrap();
    let floor = -120.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let noise = Normal::new(0.0, truth.sigma_db).unwrap();
    let samples: Vec<GainSample> = log_spaced(30_000, 10.0, 1500.0)
        .map(|d| {
            let g = truth.gain_db(d).unwrap() + noise.sample(&mut rng);
            GainSample {
                distance_m: d,
                gain_db: g.max(floor),
                censored: g < floor,
            }
        })
        .collect();
    assert!(samples.iter().any(|s| s.censored));
    let series = GainSeries {
        samples,
        noise_floor_db: Some(floor),
    };
    let fit = fit_dual_slope(&series, truth.d0_m, truth.db_m, &FitOptions::default()).unwrap();
    assert!(fit.sigma_from_em);
    assert!((fit.params.n2 - truth.n2).abs() < 0.1, "{:?}", fit.params);
    assert!((fit.params.sigma_db - truth.sigma_db).abs() < 0.3, "{:?}", fit.params);
}
