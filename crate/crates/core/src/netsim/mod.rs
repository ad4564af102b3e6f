//! Discrete-event broadcast simulation: periodic beacons, CSMA access,
//! per-link received power and SINR-based reception.

mod channel;
mod log;
mod sim;

pub use channel::{ChannelConfig, ChannelModel, LinkQuery, LosOlosChannel, NakagamiChannel, PowerModel};
pub use log::{read_event_log, EventLogWriter, RecordCollector};
pub use sim::{NetConfig, SimObserver, SimStats, Simulation, Traffic};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::LinkClass;
use crate::propagation::wavelength_m;

/// Radio and MAC parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub bitrate_bps: f64,
    pub payload_bytes: u32,
    /// MAC and PHY overhead added to every frame.
    pub overhead_bytes: u32,
    pub beacon_rate_hz: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub cca_threshold_dbm: f64,
    pub sensitivity_dbm: f64,
    pub sinr_threshold_db: f64,
    pub slot_us: f64,
    pub aifs_us: f64,
    /// Backoff counters are drawn uniformly from `0..=cw_slots`.
    pub cw_slots: u32,
    /// Frames from farther away are neither sensed nor counted as interference.
    pub interference_range_m: f64,
    /// Packet records are written for receivers up to this distance.
    pub record_range_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            bitrate_bps: 6e6,
            payload_bytes: 400,
            overhead_bytes: 78,
            beacon_rate_hz: 10.0,
            carrier_freq_hz: 5.6e9,
            bandwidth_hz: 10e6,
            noise_figure_db: 6.0,
            cca_threshold_dbm: -85.0,
            sensitivity_dbm: -94.0,
            sinr_threshold_db: 8.0,
            slot_us: 13.0,
            aifs_us: 58.0,
            cw_slots: 15,
            interference_range_m: 3000.0,
            record_range_m: 1500.0,
        }
    }
}

impl RadioConfig {
    pub fn noise_floor_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    pub fn wavelength_m(&self) -> f64 {
        wavelength_m(self.carrier_freq_hz)
    }

    /// Frame airtime in seconds.
    pub fn airtime_s(&self) -> f64 {
        f64::from(self.payload_bytes + self.overhead_bytes) * 8.0 / self.bitrate_bps
    }

    pub(crate) fn airtime_ns(&self) -> u64 {
        secs_to_ns(self.airtime_s())
    }

    pub(crate) fn beacon_period_ns(&self) -> u64 {
        secs_to_ns(1.0 / self.beacon_rate_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bitrate_bps", self.bitrate_bps),
            ("beacon_rate_hz", self.beacon_rate_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("slot_us", self.slot_us),
            ("aifs_us", self.aifs_us),
            ("interference_range_m", self.interference_range_m),
            ("record_range_m", self.record_range_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("radio.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("cca_threshold_dbm", self.cca_threshold_dbm),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("sinr_threshold_db", self.sinr_threshold_db),
        ] {
            if !v.is_finite() {
                return Err(config(format!("radio.{name} must be finite")));
            }
        }
        if self.payload_bytes == 0 {
            return Err(config("radio.payload_bytes must be positive"));
        }
        if self.noise_figure_db < 0.0 {
            return Err(config("radio.noise_figure_db must be non-negative"));
        }
        if self.cca_threshold_dbm <= self.noise_floor_dbm() {
            return Err(config(format!(
                "radio.cca_threshold_dbm ({}) must lie above the noise floor ({:.2} dBm)",
                self.cca_threshold_dbm,
                self.noise_floor_dbm()
            )));
        }
        if self.record_range_m > self.interference_range_m {
            return Err(config(
                "radio.record_range_m must not exceed radio.interference_range_m",
            ));
        }
        if self.airtime_s() >= 1.0 / self.beacon_rate_hz {
            return Err(config("frame airtime must be shorter than the beacon period"));
        }
        Ok(())
    }
}

pub(crate) fn secs_to_ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}

/// Reception outcome of one (transmission, receiver) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Received,
    /// Too weak against the noise floor or below sensitivity.
    ChannelLoss,
    /// Lost to overlapping frames.
    Collision,
    /// The receiver was transmitting.
    BusyDrop,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Received => "RECEIVED",
            Outcome::ChannelLoss => "CHANNEL_LOSS",
            Outcome::Collision => "COLLISION",
            Outcome::BusyDrop => "BUSY_DROP",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RECEIVED" => Ok(Outcome::Received),
            "CHANNEL_LOSS" => Ok(Outcome::ChannelLoss),
            "COLLISION" => Ok(Outcome::Collision),
            "BUSY_DROP" => Ok(Outcome::BusyDrop),
            _ => Err(Error::Format(format!("unknown outcome {s:?}"))),
        }
    }
}

/// One (transmission, receiver) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    /// Transmission start.
    pub timestamp_ns: u64,
    pub tx: u32,
    pub rx: u32,
    pub distance_m: f64,
    pub class: LinkClass,
    pub prx_dbm: f64,
    pub outcome: Outcome,
}

impl PacketRecord {
    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_ns as f64 * 1e-9
    }
}
