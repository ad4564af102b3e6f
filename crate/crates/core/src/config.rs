//! Run configuration: a TOML document describing a model × density × seed
//! sweep.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::Scene;
use crate::metrics::MetricsConfig;
use crate::mobility::{ArrivalSpec, ScenarioConfig};
use crate::netsim::{ChannelConfig, ChannelModel, RadioConfig};
use crate::propagation::NakagamiParams;

/// Vehicle count the quick profile stays under.
pub const DESK_SCALE_MAX_VEHICLES: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub models: Vec<ChannelModel>,
    pub densities_per_km: Vec<f64>,
    pub output_dir: PathBuf,
    /// Concurrent runs.
    pub parallelism: usize,
    /// Write every packet record to `events.csv` in each run directory.
    pub event_log: bool,
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub channel: ChannelConfig,
    pub nakagami: NakagamiParams,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            models: vec![ChannelModel::LosOlos, ChannelModel::Nakagami],
            densities_per_km: vec![40.0, 60.0, 100.0],
            output_dir: PathBuf::from("out"),
            parallelism: 1,
            event_log: false,
            scenario: ScenarioConfig::default(),
            radio: RadioConfig::default(),
            channel: ChannelConfig::default(),
            nakagami: NakagamiParams::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(config("seed list is empty"));
        }
        if self.models.is_empty() {
            return Err(config("model list is empty"));
        }
        if self.densities_per_km.is_empty() {
            return Err(config("density list is empty"));
        }
        if let Some(d) = self.densities_per_km.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(config(format!("densities must be non-negative, got {d}")));
        }
        if self.parallelism == 0 {
            return Err(config("parallelism must be at least 1"));
        }
        self.scenario.validate()?;
        self.radio.validate()?;
        self.channel.validate()?;
        self.metrics.validate()?;
        if self.models.contains(&ChannelModel::Nakagami) {
            self.nakagami.validate()?;
            if self.radio.interference_range_m > self.nakagami.max_distance_m() {
                return Err(config(format!(
                    "radio.interference_range_m ({}) exceeds the Nakagami table ({} m)",
                    self.radio.interference_range_m,
                    self.nakagami.max_distance_m()
                )));
            }
        }
        if self.metrics.max_distance_m > self.radio.record_range_m {
            return Err(config("metrics.max_distance_m must not exceed radio.record_range_m"));
        }
        if !self.metrics.tracked_pairs.is_multiple_of(2) {
            return Err(config("metrics.tracked_pairs must be even"));
        }
        Ok(())
    }

    /// Shrink to the quick profile: 2 km, 100 s, and densities capped so
    /// that at most 200 vehicles are on the road.
    pub fn apply_desk_scale(&mut self) {
        let desk = ScenarioConfig::desk_scale();
        self.scenario.road_length_m = desk.road_length_m;
        self.scenario.duration_s = desk.duration_s;
        let cap = DESK_SCALE_MAX_VEHICLES / (desk.road_length_m / 1000.0);
        for d in &mut self.densities_per_km {
            *d = d.min(cap);
        }
    }

    /// Scenario for one run of the grid.
    pub fn scenario_for(&self, density_per_km: f64, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            arrival: ArrivalSpec::DensityPerKm(density_per_km),
            seed,
            ..self.scenario.clone()
        }
    }
}

/// Read a scene from TOML, or JSON when the file name ends in `.json`.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    let scene: Scene = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| config(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| config(e.to_string()))?
    };
    scene.validate().map_err(|e| config(e.to_string()))?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = RunConfig::from_toml_str(
            r#"
            seeds = [3, 4]
            models = ["LOS_OLOS"]
            densities_per_km = [40]
            [scenario]
            road_length_m = 2000.0
            [radio]
            tx_power_dbm = 23.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.scenario.road_length_m, 2000.0);
        assert_eq!(cfg.scenario.lanes_per_direction, 2);
        assert_eq!(cfg.radio.tx_power_dbm, 23.0);
        assert_eq!(cfg.radio.payload_bytes, 400);
    }

    #[test]
    fn schema_violations() {
        for bad in [
            "seeds = []",
            "models = []",
            "densities_per_km = [-1.0]",
            "bogus = 1",
            "[radio]\nbogus = 1",
            "[scenario]\nstep_s = 0.5",
            "models = [\"RAYLEIGH\"]",
            "[radio]\ncca_threshold_dbm = -120.0",
        ] {
            let err = RunConfig::from_toml_str(bad).unwrap_err();
            assert!(err.is_config(), "{bad}: {err}");
        }
    }

    #[test]
    fn scene_from_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.toml");
        std::fs::write(
            &path,
            r#"
            [[vehicles]]
            id = 1
            antenna = { x = 0.0, y = 0.0 }
            footprint = { center = { x = 0.0, y = 0.0 }, length = 4.8, width = 1.8, kind = "vehicle" }

            [[vehicles]]
            id = 2
            antenna = { x = 50.0, y = 0.0 }
            footprint = { center = { x = 50.0, y = 0.0 }, length = 4.8, width = 1.8, kind = "vehicle" }

            [[buildings]]
            center = { x = 25.0, y = 0.0 }
            length = 10.0
            width = 10.0
            kind = "building"
            "#,
        )
        .unwrap();
        let scene = load_scene(&path).unwrap();
        assert_eq!(scene.vehicles.len(), 2);
        assert_eq!(
            scene.classify(1, 2, &Default::default()).unwrap(),
            crate::LinkClass::NlosParallel
        );
        std::fs::write(&path, "[[vehicles]]\nid = 1\n").unwrap();
        assert!(load_scene(&path).unwrap_err().is_config());
    }

    #[test]
    fn desk_scale_caps_vehicle_count() {
        let mut cfg = RunConfig {
            densities_per_km: vec![40.0, 150.0],
            ..RunConfig::default()
        };
        cfg.apply_desk_scale();
        assert_eq!(cfg.scenario.road_length_m, 2000.0);
        assert_eq!(cfg.scenario.duration_s, 100.0);
        assert_eq!(cfg.densities_per_km, vec![40.0, 100.0]);
    }
}
