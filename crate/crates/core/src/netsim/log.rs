use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Outcome, PacketRecord, SimObserver};
use crate::error::{Error, Result};
use crate::geometry::LinkClass;

/// Header of the event log.
pub const EVENT_LOG_COLUMNS: [&str; 7] = ["timestamp_s", "tx", "rx", "distance_m", "class", "prx_dbm", "outcome"];

#[derive(Serialize, Deserialize)]
struct Row {
    timestamp_s: String,
    tx: u32,
    rx: u32,
    distance_m: f64,
    class: LinkClass,
    prx_dbm: f64,
    outcome: Outcome,
}

fn format_ns(ns: u64) -> String {
    format!("{}.{:09}", ns / 1_000_000_000, ns % 1_000_000_000)
}

fn parse_ns(s: &str) -> Result<u64> {
    let bad = || Error::Format(format!("bad timestamp {s:?}"));
    let (secs, frac) = s.split_once('.').unwrap_or((s, "0"));
    if frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let secs: u64 = secs.parse().map_err(|_| bad())?;
    let frac_ns: u64 = format!("{frac:0<9}").parse().map_err(|_| bad())?;
    Ok(secs * 1_000_000_000 + frac_ns)
}

/// Writes packet records as CSV, one row per record.
pub struct EventLogWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> EventLogWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record(EVENT_LOG_COLUMNS)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &PacketRecord) -> Result<()> {
        self.inner.serialize(Row {
            timestamp_s: format_ns(r.timestamp_ns),
            tx: r.tx,
            rx: r.rx,
            distance_m: r.distance_m,
            class: r.class,
            prx_dbm: r.prx_dbm,
            outcome: r.outcome,
        })?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<W: Write> SimObserver for EventLogWriter<W> {
    fn on_record(&mut self, rec: &PacketRecord) -> Result<()> {
        self.write(rec)
    }
}

/// Read an event log written by [`EventLogWriter`].
pub fn read_event_log<R: Read>(r: R) -> Result<Vec<PacketRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(EVENT_LOG_COLUMNS) {
        return Err(Error::Format(format!(
            "event log header must be {}, got {}",
            EVENT_LOG_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        out.push(PacketRecord {
            timestamp_ns: parse_ns(&row.timestamp_s)?,
            tx: row.tx,
            rx: row.rx,
            distance_m: row.distance_m,
            class: row.class,
            prx_dbm: row.prx_dbm,
            outcome: row.outcome,
        });
    }
    Ok(out)
}

/// Keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct RecordCollector {
    pub records: Vec<PacketRecord>,
    pub tracked_pairs: Vec<(u32, u32)>,
}

impl SimObserver for RecordCollector {
    fn on_record(&mut self, rec: &PacketRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }

    fn on_tracked_pairs(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        self.tracked_pairs = pairs.to_vec();
        Ok(())
    }
}
