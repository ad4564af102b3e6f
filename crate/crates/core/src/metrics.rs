//! Distance-binned metrics computed from the packet-record stream.
//!
//! Everything here is a function of the records (plus the tracked-pair list
//! and the model parameters for the analytic curves), so metrics can be
//! recomputed from a stored event log.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::geometry::LinkClass;
use crate::netsim::{ChannelConfig, Outcome, PacketRecord, SimObserver};
use crate::propagation::{mix_received_power, NakagamiParams};
use crate::rng::{keyed, Stream};
use crate::{dbm_to_mw, mw_to_dbm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub bin_m: f64,
    pub max_distance_m: f64,
    /// Inter-arrival histogram range; longer gaps land in an overflow bucket.
    pub iat_max_ms: u32,
    pub bootstrap_replicates: u32,
    pub tracked_pairs: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            bin_m: 100.0,
            max_distance_m: 1500.0,
            iat_max_ms: 2000,
            bootstrap_replicates: 1000,
            tracked_pairs: 6,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_m > 0.0 && self.max_distance_m >= self.bin_m) {
            return Err(config("metrics needs 0 < bin_m <= max_distance_m"));
        }
        if self.iat_max_ms == 0 {
            return Err(config("metrics.iat_max_ms must be positive"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.max_distance_m / self.bin_m).ceil() as usize
    }

    fn bin_of(&self, d: f64) -> Option<usize> {
        let b = (d / self.bin_m).floor();
        (b >= 0.0 && (b as usize) < self.n_bins()).then_some(b as usize)
    }

    fn edges(&self, b: usize) -> (f64, f64) {
        (
            b as f64 * self.bin_m,
            ((b + 1) as f64 * self.bin_m).min(self.max_distance_m),
        )
    }
}

fn class_index(c: LinkClass) -> usize {
    match c {
        LinkClass::Los => 0,
        LinkClass::Olos => 1,
        LinkClass::Nlos => 2,
        LinkClass::NlosParallel => 3,
    }
}

#[derive(Debug, Clone, Default)]
struct BinAcc {
    received: u64,
    total: u64,
    class_counts: [u64; 4],
    power_mw: [f64; 4],
}

#[derive(Debug, Clone)]
struct IatHist {
    /// Index k counts gaps in (k-1, k] ms.
    counts: Vec<u64>,
    overflow: u64,
}

impl IatHist {
    fn new(max_ms: u32) -> Self {
        Self {
            counts: vec![0; max_ms as usize + 1],
            overflow: 0,
        }
    }

    fn add(&mut self, gap_ns: u64) {
        let k = gap_ns.div_ceil(1_000_000) as usize;
        match self.counts.get_mut(k) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

/// Streaming accumulator over packet records.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    cfg: MetricsConfig,
    bins: Vec<BinAcc>,
    last_rx: HashMap<(u32, u32), u64>,
    tracked: HashSet<(u32, u32)>,
    iat_all: Vec<IatHist>,
    iat_tracked: Vec<IatHist>,
    records: u64,
}

impl MetricsAccumulator {
    pub fn new(cfg: MetricsConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_bins();
        Ok(Self {
            bins: vec![BinAcc::default(); n],
            last_rx: HashMap::new(),
            tracked: HashSet::new(),
            iat_all: vec![IatHist::new(cfg.iat_max_ms); n],
            iat_tracked: vec![IatHist::new(cfg.iat_max_ms); n],
            records: 0,
            cfg,
        })
    }

    pub fn set_tracked_pairs(&mut self, pairs: &[(u32, u32)]) {
        self.tracked = pairs.iter().copied().collect();
    }

    pub fn add(&mut self, r: &PacketRecord) {
        self.records += 1;
        let Some(b) = self.cfg.bin_of(r.distance_m) else {
            return;
        };
        let bin = &mut self.bins[b];
        bin.total += 1;
        let c = class_index(r.class);
        bin.class_counts[c] += 1;
        bin.power_mw[c] += dbm_to_mw(r.prx_dbm);
        if r.outcome != Outcome::Received {
            return;
        }
        bin.received += 1;
        let key = (r.tx, r.rx);
        if let Some(prev) = self.last_rx.insert(key, r.timestamp_ns) {
            let gap = r.timestamp_ns.saturating_sub(prev);
            self.iat_all[b].add(gap);
            if self.tracked.contains(&key) {
                self.iat_tracked[b].add(gap);
            }
        }
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    /// Turn the counts into curves. `seed` keys the bootstrap.
    pub fn finish(&self, seed: u64, models: &CurveModels) -> MetricsBundle {
        let cfg = &self.cfg;
        let mut prp = Vec::new();
        let mut class_prob = Vec::new();
        let mut rx_power = Vec::new();
        let mut iat = Vec::new();
        for (b, acc) in self.bins.iter().enumerate() {
            let (start, end) = cfg.edges(b);
            let p = (acc.total > 0).then(|| acc.received as f64 / acc.total as f64);
            let band = p.map(|p| bootstrap_band(p, acc.total, cfg.bootstrap_replicates, seed, b as u64));
            prp.push(PrpRow {
                bin_start_m: start,
                bin_end_m: end,
                received: acc.received,
                total: acc.total,
                prp: p,
                ci_low: band.map(|x| x.0),
                ci_high: band.map(|x| x.1),
            });
            let samples: u64 = acc.class_counts.iter().sum();
            let probs = acc
                .class_counts
                .map(|c| (samples > 0).then(|| c as f64 / samples as f64));
            class_prob.push(ClassProbRow {
                bin_start_m: start,
                bin_end_m: end,
                samples,
                p: probs,
            });
            rx_power.push(models.power_row(start, end, acc, probs));
        }
        for (label, hists) in [("all", &self.iat_all), ("tracked", &self.iat_tracked)] {
            for (b, h) in hists.iter().enumerate() {
                let total = h.total();
                if total == 0 {
                    continue;
                }
                let (start, end) = cfg.edges(b);
                let mut points = Vec::new();
                let mut cum = 0u64;
                for (ms, c) in h.counts.iter().enumerate() {
                    if *c > 0 {
                        cum += c;
                        points.push((ms as u32, cum as f64 / total as f64));
                    }
                }
                iat.push(IatCurve {
                    pairs: label,
                    bin_start_m: start,
                    bin_end_m: end,
                    count: total,
                    points,
                    overflow: h.overflow,
                });
            }
        }
        MetricsBundle {
            prp,
            class_prob,
            iat,
            rx_power,
        }
    }
}

impl SimObserver for MetricsAccumulator {
    fn on_record(&mut self, rec: &PacketRecord) -> Result<()> {
        self.add(rec);
        Ok(())
    }

    fn on_tracked_pairs(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        self.set_tracked_pairs(pairs);
        Ok(())
    }
}

/// Percentile band of a parametric Binomial bootstrap around `p`.
fn bootstrap_band(p: f64, n: u64, replicates: u32, seed: u64, key: u64) -> (f64, f64) {
    if replicates == 0 {
        return (p, p);
    }
    let mut rng = keyed(seed, Stream::Bootstrap, key);
    let binom = Binomial::new(n, p).expect("valid binomial");
    let mut draws: Vec<f64> = (0..replicates)
        .map(|_| binom.sample(&mut rng) as f64 / n as f64)
        .collect();
    draws.sort_by(f64::total_cmp);
    let q = |f: f64| draws[((f * (replicates - 1) as f64).round() as usize).min(draws.len() - 1)];
    (q(0.025), q(0.975))
}

/// Model parameters for the analytic received-power curves.
#[derive(Debug, Clone)]
pub struct CurveModels {
    pub channel: ChannelConfig,
    pub tx_power_dbm: f64,
    pub nakagami: NakagamiParams,
}

impl CurveModels {
    fn power_row(&self, start: f64, end: f64, acc: &BinAcc, probs: [Option<f64>; 4]) -> PowerRow {
        let d = 0.5 * (start + end);
        let model = |class| {
            self.channel.params(class).map(|p| {
                let median = self.tx_power_dbm + p.gain_db_clamped(d);
                (median, median + lognormal_mean_offset_db(p.sigma_db))
            })
        };
        let los = model(LinkClass::Los);
        let olos = model(LinkClass::Olos);
        let mixed = match (probs[0], probs[1], los, olos) {
            (Some(pl), Some(po), Some(l), Some(o)) => mix_received_power(pl, po, dbm_to_mw(l.1), dbm_to_mw(o.1))
                .ok()
                .map(mw_to_dbm),
            _ => None,
        };
        let empirical =
            |i: usize| (acc.class_counts[i] > 0).then(|| mw_to_dbm(acc.power_mw[i] / acc.class_counts[i] as f64));
        let all_mw: f64 = acc.power_mw.iter().sum();
        PowerRow {
            bin_start_m: start,
            bin_end_m: end,
            distance_m: d,
            samples_los: acc.class_counts[0],
            samples_olos: acc.class_counts[1],
            mean_los_dbm: empirical(0),
            mean_olos_dbm: empirical(1),
            mean_all_dbm: (acc.total > 0).then(|| mw_to_dbm(all_mw / acc.total as f64)),
            p_los: probs[0],
            p_olos: probs[1],
            median_los_dbm: los.map(|x| x.0),
            median_olos_dbm: olos.map(|x| x.0),
            model_mean_los_dbm: los.map(|x| x.1),
            model_mean_olos_dbm: olos.map(|x| x.1),
            model_mixed_dbm: mixed,
            nakagami_mean_dbm: Some(mw_to_dbm(
                self.nakagami.mean_power_w(d, 1e-3 * dbm_to_mw(self.tx_power_dbm)) * 1e3,
            )),
        }
    }
}

/// Ratio of mean to median power of zero-mean log-normal shadowing with
/// spread `sigma_db`, in dB.
pub fn lognormal_mean_offset_db(sigma_db: f64) -> f64 {
    sigma_db * sigma_db * std::f64::consts::LN_10 / 20.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrpRow {
    pub bin_start_m: f64,
    pub bin_end_m: f64,
    pub received: u64,
    pub total: u64,
    pub prp: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbRow {
    pub bin_start_m: f64,
    pub bin_end_m: f64,
    pub samples: u64,
    /// LOS, OLOS, NLOS, NLOS_PARALLEL.
    pub p: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct IatCurve {
    pub pairs: &'static str,
    pub bin_start_m: f64,
    pub bin_end_m: f64,
    pub count: u64,
    /// (gap upper edge in ms, CDF) at every populated millisecond.
    pub points: Vec<(u32, f64)>,
    pub overflow: u64,
}

impl IatCurve {
    /// P(gap <= ms).
    pub fn cdf_at(&self, ms: u32) -> f64 {
        self.points
            .iter()
            .take_while(|(m, _)| *m <= ms)
            .last()
            .map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub bin_start_m: f64,
    pub bin_end_m: f64,
    pub distance_m: f64,
    pub samples_los: u64,
    pub samples_olos: u64,
    pub mean_los_dbm: Option<f64>,
    pub mean_olos_dbm: Option<f64>,
    pub mean_all_dbm: Option<f64>,
    pub p_los: Option<f64>,
    pub p_olos: Option<f64>,
    pub median_los_dbm: Option<f64>,
    pub median_olos_dbm: Option<f64>,
    pub model_mean_los_dbm: Option<f64>,
    pub model_mean_olos_dbm: Option<f64>,
    pub model_mixed_dbm: Option<f64>,
    pub nakagami_mean_dbm: Option<f64>,
}

/// All curves of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBundle {
    pub prp: Vec<PrpRow>,
    pub class_prob: Vec<ClassProbRow>,
    pub iat: Vec<IatCurve>,
    pub rx_power: Vec<PowerRow>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub const PRP_FILE: &str = "prp.csv";
pub const CLASS_PROB_FILE: &str = "class_prob.csv";
pub const IAT_FILE: &str = "iat_cdf.csv";
pub const RX_POWER_FILE: &str = "rx_power.csv";

impl MetricsBundle {
    pub fn prp_in(&self, start_m: f64) -> Option<&PrpRow> {
        self.prp.iter().find(|r| r.bin_start_m == start_m)
    }

    pub fn iat_in(&self, pairs: &str, start_m: f64) -> Option<&IatCurve> {
        self.iat.iter().find(|c| c.pairs == pairs && c.bin_start_m == start_m)
    }

    /// Write the four curve files into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_csv(
            &dir.join(PRP_FILE),
            &[
                "bin_start_m",
                "bin_end_m",
                "received",
                "total",
                "prp",
                "ci_low",
                "ci_high",
            ],
            self.prp.iter().map(|r| {
                vec![
                    num(r.bin_start_m),
                    num(r.bin_end_m),
                    r.received.to_string(),
                    r.total.to_string(),
                    opt(r.prp),
                    opt(r.ci_low),
                    opt(r.ci_high),
                ]
            }),
        )?;
        write_csv(
            &dir.join(CLASS_PROB_FILE),
            &[
                "bin_start_m",
                "bin_end_m",
                "samples",
                "p_los",
                "p_olos",
                "p_nlos",
                "p_nlos_parallel",
            ],
            self.class_prob.iter().map(|r| {
                let mut row = vec![num(r.bin_start_m), num(r.bin_end_m), r.samples.to_string()];
                row.extend(r.p.iter().map(|p| opt(*p)));
                row
            }),
        )?;
        write_csv(
            &dir.join(IAT_FILE),
            &["pairs", "bin_start_m", "bin_end_m", "count", "iat_ms", "cdf"],
            self.iat.iter().flat_map(|c| {
                let head = vec![
                    c.pairs.to_string(),
                    num(c.bin_start_m),
                    num(c.bin_end_m),
                    c.count.to_string(),
                ];
                let mut rows: Vec<Vec<String>> = c
                    .points
                    .iter()
                    .map(|(ms, cdf)| {
                        let mut r = head.clone();
                        r.extend([ms.to_string(), num(*cdf)]);
                        r
                    })
                    .collect();
                if c.overflow > 0 {
                    let mut r = head.clone();
                    r.extend(["inf".to_string(), num(1.0)]);
                    rows.push(r);
                }
                rows
            }),
        )?;
        write_csv(
            &dir.join(RX_POWER_FILE),
            &[
                "bin_start_m",
                "bin_end_m",
                "distance_m",
                "samples_los",
                "samples_olos",
                "mean_los_dbm",
                "mean_olos_dbm",
                "mean_all_dbm",
                "p_los",
                "p_olos",
                "median_los_dbm",
                "median_olos_dbm",
                "model_mean_los_dbm",
                "model_mean_olos_dbm",
                "model_mixed_dbm",
                "nakagami_mean_dbm",
            ],
            self.rx_power.iter().map(|r| {
                vec![
                    num(r.bin_start_m),
                    num(r.bin_end_m),
                    num(r.distance_m),
                    r.samples_los.to_string(),
                    r.samples_olos.to_string(),
                    opt(r.mean_los_dbm),
                    opt(r.mean_olos_dbm),
                    opt(r.mean_all_dbm),
                    opt(r.p_los),
                    opt(r.p_olos),
                    opt(r.median_los_dbm),
                    opt(r.median_olos_dbm),
                    opt(r.model_mean_los_dbm),
                    opt(r.model_mean_olos_dbm),
                    opt(r.model_mixed_dbm),
                    opt(r.nakagami_mean_dbm),
                ]
            }),
        )?;
        Ok(())
    }
}

/// Metrics over a finished record list.
pub fn compute_metrics(
    records: &[PacketRecord],
    tracked_pairs: &[(u32, u32)],
    cfg: &MetricsConfig,
    seed: u64,
    models: &CurveModels,
) -> Result<MetricsBundle> {
    let mut acc = MetricsAccumulator::new(cfg.clone())?;
    acc.set_tracked_pairs(tracked_pairs);
    for r in records {
        acc.add(r);
    }
    Ok(acc.finish(seed, models))
}

/// Packet reception probability per distance bin.
pub fn compute_prp(records: &[PacketRecord], bin_m: f64) -> Result<Vec<PrpRow>> {
    let cfg = binned(records, bin_m);
    Ok(compute_metrics(records, &[], &cfg, 0, &CurveModels::default())?.prp)
}

/// Fraction of link samples in each class per distance bin.
pub fn compute_los_probability(records: &[PacketRecord], bin_m: f64) -> Result<Vec<ClassProbRow>> {
    if records.is_empty() {
        return Err(crate::error::Error::InsufficientData(
            "classification log is empty".into(),
        ));
    }
    let cfg = binned(records, bin_m);
    Ok(compute_metrics(records, &[], &cfg, 0, &CurveModels::default())?.class_prob)
}

/// Inter-arrival CDFs over all TX-RX pairs per distance bin.
pub fn compute_iat_cdf(records: &[PacketRecord], bin_m: f64) -> Result<Vec<IatCurve>> {
    let cfg = binned(records, bin_m);
    let all = compute_metrics(records, &[], &cfg, 0, &CurveModels::default())?.iat;
    Ok(all.into_iter().filter(|c| c.pairs == "all").collect())
}

fn binned(records: &[PacketRecord], bin_m: f64) -> MetricsConfig {
    let far = records.iter().map(|r| r.distance_m).fold(0.0, f64::max);
    MetricsConfig {
        bin_m,
        max_distance_m: ((far / bin_m).floor() + 1.0) * bin_m,
        bootstrap_replicates: 200,
        ..MetricsConfig::default()
    }
}

impl Default for CurveModels {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::default(),
            tx_power_dbm: 20.0,
            nakagami: NakagamiParams::default(),
        }
    }
}
