use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::LinkClass;
use crate::propagation::{
    nlos_loss_db, table_params, NakagamiParams, NlosGeometry, NlosParams, PathLossParams, Scenario,
};
use crate::rng::{stream, SimRng, Stream};
use crate::shadowing::{decorrelation_distance, link_key, ShadowConfig, ShadowMode, ShadowProcess};
use crate::{dbm_to_watts, watts_to_dbm};

/// Which power model the simulator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelModel {
    LosOlos,
    Nakagami,
}

impl ChannelModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModel::LosOlos => "LOS_OLOS",
            ChannelModel::Nakagami => "NAKAGAMI",
        }
    }

    /// Lower-case name used for output directories.
    pub fn dir_name(self) -> &'static str {
        match self {
            ChannelModel::LosOlos => "los_olos",
            ChannelModel::Nakagami => "nakagami",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "LOS_OLOS" => Ok(ChannelModel::LosOlos),
            "NAKAGAMI" => Ok(ChannelModel::Nakagami),
            _ => Err(config(format!(
                "unknown channel model {s:?}; expected LOS_OLOS or NAKAGAMI"
            ))),
        }
    }
}

/// Parameters of the class-based channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub scenario: Scenario,
    pub shadow_mode: ShadowMode,
    /// Override the tabulated LOS row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub los: Option<PathLossParams>,
    /// Override the tabulated OLOS row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub olos: Option<PathLossParams>,
    pub nlos: NlosParams,
    /// Decorrelation distance for NLOS links, which have no tabulated value.
    pub nlos_dc_m: f64,
    /// Treat obstacles inside the first Fresnel zone as obstructing.
    pub fresnel: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Highway,
            shadow_mode: ShadowMode::Ar,
            los: None,
            olos: None,
            nlos: NlosParams::default(),
            nlos_dc_m: 4.5,
            fresnel: false,
        }
    }
}

impl ChannelConfig {
    pub fn params(&self, class: LinkClass) -> Option<PathLossParams> {
        match class {
            LinkClass::Los => self.los.or_else(|| table_params(self.scenario, class)),
            LinkClass::Olos => self.olos.or_else(|| table_params(self.scenario, class)),
            _ => None,
        }
    }

    pub fn shadow_config(&self, class: LinkClass) -> Option<ShadowConfig> {
        let (sigma, dc) = match class {
            LinkClass::Los | LinkClass::Olos => (
                self.params(class)?.sigma_db,
                decorrelation_distance(self.scenario, class)?,
            ),
            LinkClass::Nlos => (self.nlos.sigma_db, self.nlos_dc_m),
            LinkClass::NlosParallel => return None,
        };
        Some(ShadowConfig {
            sigma_db: sigma,
            dc_m: dc,
            mode: self.shadow_mode,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.los, &self.olos].into_iter().flatten() {
            p.validate()?;
        }
        self.nlos.validate()?;
        if !(self.nlos_dc_m > 0.0) {
            return Err(config("channel.nlos_dc_m must be positive"));
        }
        Ok(())
    }
}

/// One link evaluation request.
#[derive(Debug, Clone, Copy)]
pub struct LinkQuery<'a> {
    pub tx: u32,
    pub rx: u32,
    pub distance_m: f64,
    pub class: LinkClass,
    pub nlos: Option<&'a NlosGeometry>,
}

/// Received power for a link at the current instant.
pub trait PowerModel {
    /// Received power in dBm; `-inf` stands for zero power.
    fn received_power_dbm(&mut self, q: &LinkQuery<'_>) -> Result<f64>;

    /// Forget per-link state of a vehicle that left.
    fn vehicle_removed(&mut self, _id: u32) {}
}

struct LinkShadow {
    process: ShadowProcess,
    last_distance_m: f64,
    class: LinkClass,
}

/// Dual-slope mean gain per class plus correlated log-normal shadowing per
/// link. Both directions of a link share one shadowing process.
pub struct LosOlosChannel {
    cfg: ChannelConfig,
    params: [Option<PathLossParams>; 2],
    tx_power_dbm: f64,
    seed: u64,
    links: HashMap<u64, LinkShadow>,
    by_vehicle: HashMap<u32, Vec<u64>>,
}

impl LosOlosChannel {
    pub fn new(cfg: ChannelConfig, tx_power_dbm: f64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let params = [cfg.params(LinkClass::Los), cfg.params(LinkClass::Olos)];
        Ok(Self {
            cfg,
            params,
            tx_power_dbm,
            seed,
            links: HashMap::new(),
            by_vehicle: HashMap::new(),
        })
    }

    /// Deterministic part: transmit power plus the class gain.
    pub fn median_power_dbm(&self, class: LinkClass, distance_m: f64, nlos: Option<&NlosGeometry>) -> Result<f64> {
        let missing = || config(format!("no path-loss parameters for {class} links"));
        match class {
            LinkClass::Los => {
                Ok(self.tx_power_dbm + self.params[0].as_ref().ok_or_else(missing)?.gain_db_clamped(distance_m))
            }
            LinkClass::Olos => {
                Ok(self.tx_power_dbm + self.params[1].as_ref().ok_or_else(missing)?.gain_db_clamped(distance_m))
            }
            LinkClass::Nlos => {
                let g = nlos.ok_or_else(|| config("NLOS link without street geometry"))?;
                Ok(self.tx_power_dbm - nlos_loss_db(&self.cfg.nlos, g)?)
            }
            LinkClass::NlosParallel => Ok(f64::NEG_INFINITY),
        }
    }

    fn shadow_db(&mut self, q: &LinkQuery<'_>) -> Result<f64> {
        let Some(shadow_cfg) = self.cfg.shadow_config(q.class) else {
            return Ok(0.0);
        };
        let key = link_key(q.tx, q.rx);
        match self.links.get_mut(&key) {
            Some(link) => {
                if link.class != q.class {
                    link.process.switch_config(shadow_cfg);
                    link.class = q.class;
                }
                let delta = (q.distance_m - link.last_distance_m).abs();
                link.last_distance_m = q.distance_m;
                Ok(link.process.advance(delta))
            }
            None => {
                let process = ShadowProcess::new(shadow_cfg, self.seed, key)?;
                let value = process.value_db();
                self.links.insert(
                    key,
                    LinkShadow {
                        process,
                        last_distance_m: q.distance_m,
                        class: q.class,
                    },
                );
                self.by_vehicle.entry(q.tx).or_default().push(key);
                self.by_vehicle.entry(q.rx).or_default().push(key);
                Ok(value)
            }
        }
    }
}

impl PowerModel for LosOlosChannel {
    fn received_power_dbm(&mut self, q: &LinkQuery<'_>) -> Result<f64> {
        let median = self.median_power_dbm(q.class, q.distance_m, q.nlos)?;
        if median == f64::NEG_INFINITY {
            return Ok(median);
        }
        Ok(median + self.shadow_db(q)?)
    }

    fn vehicle_removed(&mut self, id: u32) {
        if let Some(keys) = self.by_vehicle.remove(&id) {
            for k in keys {
                self.links.remove(&k);
            }
        }
    }
}

/// Distance-dependent Nakagami-m fading around a dual-slope mean; the link
/// class is ignored.
pub struct NakagamiChannel {
    params: NakagamiParams,
    tx_power_w: f64,
    rng: SimRng,
}

impl NakagamiChannel {
    pub fn new(params: NakagamiParams, tx_power_dbm: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            tx_power_w: dbm_to_watts(tx_power_dbm),
            rng: stream(seed, Stream::Channel),
        })
    }

    pub fn params(&self) -> &NakagamiParams {
        &self.params
    }
}

impl PowerModel for NakagamiChannel {
    fn received_power_dbm(&mut self, q: &LinkQuery<'_>) -> Result<f64> {
        let d = q.distance_m.max(self.params.mean.d0_m);
        Ok(watts_to_dbm(self.params.sample(d, self.tx_power_w, &mut self.rng)?))
    }
}
