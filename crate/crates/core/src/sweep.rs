//! Executes the model × density × seed grid and writes the output tree:
//!
//! ```text
//! {out}/config.toml                       effective configuration
//! {out}/summary.json                      scalar results of every run
//! {out}/{model}/density_{d}/seed_{s}/     prp.csv, class_prob.csv,
//!                                         iat_cdf.csv, rx_power.csv,
//!                                         run.json, events.csv (optional)
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::ClassifyOptions;
use crate::metrics::{CurveModels, MetricsAccumulator, MetricsBundle};
use crate::mobility::Highway;
use crate::netsim::{
    read_event_log, ChannelModel, EventLogWriter, LosOlosChannel, NakagamiChannel, NetConfig, PacketRecord, PowerModel,
    SimObserver, SimStats, Simulation, Traffic,
};

pub const EVENT_LOG_FILE: &str = "events.csv";
pub const RUN_META_FILE: &str = "run.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub model: ChannelModel,
    pub density_per_km: f64,
    pub seed: u64,
}

impl RunKey {
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join(self.model.dir_name())
            .join(format!("density_{}", self.density_per_km))
            .join(format!("seed_{}", self.seed))
    }
}

/// Everything needed to recompute the metrics of a run from its event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub key: RunKey,
    /// Selected as the first eligible overtaking pairs after warm-up.
    pub tracked_pairs: Vec<(u32, u32)>,
    pub stats: SimStats,
    pub config: RunConfig,
}

/// Scalar results of a run for the merged summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub key: RunKey,
    pub dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SimStats>,
    /// PRP per distance bin (bin start m, PRP); missing bins omitted.
    #[serde(default)]
    pub prp: Vec<(f64, f64)>,
}

pub fn grid(cfg: &RunConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for &model in &cfg.models {
        for &density_per_km in &cfg.densities_per_km {
            for &seed in &cfg.seeds {
                keys.push(RunKey {
                    model,
                    density_per_km,
                    seed,
                });
            }
        }
    }
    keys
}

impl<T: SimObserver> SimObserver for Option<T> {
    fn on_record(&mut self, rec: &PacketRecord) -> Result<()> {
        match self {
            Some(o) => o.on_record(rec),
            None => Ok(()),
        }
    }

    fn on_tracked_pairs(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        match self {
            Some(o) => o.on_tracked_pairs(pairs),
            None => Ok(()),
        }
    }
}

pub fn curve_models(cfg: &RunConfig) -> CurveModels {
    CurveModels {
        channel: cfg.channel.clone(),
        tx_power_dbm: cfg.radio.tx_power_dbm,
        nakagami: cfg.nakagami.clone(),
    }
}

/// Output of a single simulation.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub stats: SimStats,
    pub tracked_pairs: Vec<(u32, u32)>,
    pub metrics: MetricsBundle,
}

fn simulate_with<P: PowerModel, O: SimObserver>(
    cfg: &RunConfig,
    key: &RunKey,
    power: P,
    obs: &mut O,
) -> Result<SimStats> {
    let scenario = cfg.scenario_for(key.density_per_km, key.seed);
    let net = NetConfig::from_scenario(&scenario, cfg.metrics.tracked_pairs);
    let classify = ClassifyOptions {
        fresnel_lambda_m: cfg.channel.fresnel.then(|| cfg.radio.wavelength_m()),
    };
    let traffic = Traffic::Highway(Box::new(Highway::new(scenario)?));
    Simulation::new(cfg.radio.clone(), net, traffic, power, classify)?.run(obs)
}

/// Run one grid cell, feeding records to `extra` as well as to the metrics.
pub fn run_one<O: SimObserver>(cfg: &RunConfig, key: &RunKey, extra: &mut O) -> Result<RunOutput> {
    let mut acc = MetricsAccumulator::new(cfg.metrics.clone())?;
    let mut tracked = TrackedPairs::default();
    let stats = {
        let mut obs = (&mut acc, (&mut tracked, extra));
        match key.model {
            ChannelModel::LosOlos => simulate_with(
                cfg,
                key,
                LosOlosChannel::new(cfg.channel.clone(), cfg.radio.tx_power_dbm, key.seed)?,
                &mut obs,
            )?,
            ChannelModel::Nakagami => simulate_with(
                cfg,
                key,
                NakagamiChannel::new(cfg.nakagami.clone(), cfg.radio.tx_power_dbm, key.seed)?,
                &mut obs,
            )?,
        }
    };
    Ok(RunOutput {
        stats,
        tracked_pairs: tracked.0,
        metrics: acc.finish(key.seed, &curve_models(cfg)),
    })
}

#[derive(Default)]
struct TrackedPairs(Vec<(u32, u32)>);

impl SimObserver for TrackedPairs {
    fn on_tracked_pairs(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        self.0 = pairs.to_vec();
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Run one grid cell and write its directory.
pub fn run_to_dir(cfg: &RunConfig, key: &RunKey, dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(dir)?;
    let out = if cfg.event_log {
        let file = BufWriter::new(File::create(dir.join(EVENT_LOG_FILE))?);
        let mut log = Some(EventLogWriter::new(file)?);
        let out = run_one(cfg, key, &mut log)?;
        log.take().expect("log").finish()?.flush()?;
        out
    } else {
        run_one(cfg, key, &mut None::<EventLogWriter<File>>)?
    };
    out.metrics.write_csvs(dir)?;
    write_json(
        &dir.join(RUN_META_FILE),
        &RunMeta {
            key: *key,
            tracked_pairs: out.tracked_pairs.clone(),
            stats: out.stats.clone(),
            config: cfg.clone(),
        },
    )?;
    Ok(out)
}

/// Execute the whole grid with up to `cfg.parallelism` concurrent runs.
/// Every run is attempted; the first failure is returned after the summary
/// has been written.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let root = &cfg.output_dir;
    fs::create_dir_all(root)?;
    fs::write(root.join(CONFIG_ECHO_FILE), cfg.to_toml_string()?)?;
    let keys = grid(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InsufficientData(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(RunKey, Result<RunOutput>)> = pool.install(|| {
        keys.par_iter()
            .map(|k| (*k, run_to_dir(cfg, k, &k.dir(root))))
            .collect()
    });
    let mut first_error = None;
    let summaries: Vec<RunSummary> = results
        .into_iter()
        .map(|(key, res)| match res {
            Ok(out) => RunSummary {
                key,
                dir: key.dir(Path::new("")),
                error: None,
                prp: out
                    .metrics
                    .prp
                    .iter()
                    .filter_map(|r| r.prp.map(|p| (r.bin_start_m, p)))
                    .collect(),
                stats: Some(out.stats),
            },
            Err(e) => {
                let msg = e.to_string();
                first_error.get_or_insert(e);
                RunSummary {
                    key,
                    dir: key.dir(Path::new("")),
                    error: Some(msg),
                    stats: None,
                    prp: Vec::new(),
                }
            }
        })
        .collect();
    write_json(&root.join(SUMMARY_FILE), &summaries)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(summaries),
    }
}

/// Recompute the curve files of a run directory from its event log into
/// `out_dir`.
pub fn recompute_metrics(run_dir: &Path, out_dir: &Path) -> Result<MetricsBundle> {
    let meta: RunMeta = serde_json::from_reader(File::open(run_dir.join(RUN_META_FILE))?)?;
    let log = run_dir.join(EVENT_LOG_FILE);
    let records = read_event_log(
        File::open(&log).map_err(|e| Error::InsufficientData(format!("no event log at {}: {e}", log.display())))?,
    )?;
    let mut acc = MetricsAccumulator::new(meta.config.metrics.clone())?;
    acc.set_tracked_pairs(&meta.tracked_pairs);
    for r in &records {
        acc.add(r);
    }
    let bundle = acc.finish(meta.key.seed, &curve_models(&meta.config));
    bundle.write_csvs(out_dir)?;
    Ok(bundle)
}
