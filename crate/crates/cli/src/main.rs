//! `v2vsim`: run simulation sweeps, fit path-loss parameters, classify
//! links of a scene and recompute metrics from event logs.
//!
//! Exit status: 0 on success, 1 for configuration or input errors, 2 for
//! runtime failures.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use v2v_shadow::config::{load_scene, RunConfig};
use v2v_shadow::estimation::{fit_dual_slope, read_gain_series, FitOptions};
use v2v_shadow::geometry::{nlos_geometry, ClassifyOptions};
use v2v_shadow::netsim::ChannelModel;
use v2v_shadow::propagation::{DEFAULT_D0_M, FITTED_BREAKPOINT_M};
use v2v_shadow::sweep::{recompute_metrics, run_sweep};
use v2v_shadow::{Error, LinkClass};

#[derive(Parser)]
#[command(name = "v2vsim", version, about = "Vehicle-to-vehicle shadowing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model x density x seed grid.
    Simulate {
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replace the seed list (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the model list: LOS_OLOS or NAKAGAMI (repeatable).
        #[arg(long)]
        model: Vec<String>,
        /// Replace the density list, vehicles/km (repeatable).
        #[arg(long)]
        density: Vec<f64>,
        /// Quick profile: 2 km road, 100 s.
        #[arg(long)]
        desk_scale: bool,
        /// Write per-run event logs.
        #[arg(long)]
        event_log: bool,
        /// Concurrent runs.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Fit dual-slope parameters to a gain series CSV
    /// (distance_m,gain_db,censored).
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_D0_M)]
        d0: f64,
        #[arg(long, default_value_t = FITTED_BREAKPOINT_M)]
        db: f64,
        #[arg(long, default_value_t = 25)]
        bins: usize,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify one link of a scene file (TOML or JSON).
    Classify {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        tx: u32,
        #[arg(long)]
        rx: u32,
        /// Also test first-Fresnel-zone clearance at this wavelength (m).
        #[arg(long)]
        fresnel_lambda: Option<f64>,
    },
    /// Recompute the curve files of a run directory from its event log.
    Metrics {
        /// Run directory containing run.json and events.csv.
        #[arg(long)]
        run: PathBuf,
        /// Where to write the CSVs; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => {
            let mut f = File::create(p)?;
            writeln!(f, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate {
            config,
            seed,
            out,
            model,
            density,
            desk_scale,
            event_log,
            parallelism,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            if !model.is_empty() {
                cfg.models = model
                    .iter()
                    .map(|m| m.parse::<ChannelModel>())
                    .collect::<Result<_, _>>()?;
            }
            if !density.is_empty() {
                cfg.densities_per_km = density;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            cfg.event_log |= event_log;
            if desk_scale {
                cfg.apply_desk_scale();
            }
            cfg.validate()?;
            let summaries = run_sweep(&cfg)?;
            eprintln!("{} runs written to {}", summaries.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Fit {
            input,
            d0,
            db,
            bins,
            out,
        } => {
            let file =
                File::open(&input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
            let series = read_gain_series(file)?;
            let opts = FitOptions {
                n_bins: bins,
                ..FitOptions::default()
            };
            let fit = fit_dual_slope(&series, d0, db, &opts)?;
            emit(&serde_json::to_value(&fit)?, out.as_ref())
        }
        Command::Classify {
            scene,
            tx,
            rx,
            fresnel_lambda,
        } => {
            let scene = load_scene(&scene)?;
            let opts = ClassifyOptions {
                fresnel_lambda_m: fresnel_lambda,
            };
            let class = scene.classify(tx, rx, &opts).map_err(|e| match e {
                Error::Domain(m) => Error::Config(m),
                other => other,
            })?;
            let (a, b) = (scene.vehicle(tx).unwrap().antenna, scene.vehicle(rx).unwrap().antenna);
            let mut value = json!({
                "tx": tx,
                "rx": rx,
                "distance_m": a.distance(b),
                "class": class.as_str(),
            });
            if class == LinkClass::Nlos {
                value["nlos_geometry"] = serde_json::to_value(nlos_geometry(a, b, &scene.roads)?)?;
            }
            emit(&value, None)
        }
        Command::Metrics { run, out } => {
            let out = out.unwrap_or_else(|| run.clone());
            recompute_metrics(&run, &out)?;
            eprintln!("metrics written to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
