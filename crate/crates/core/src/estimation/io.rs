use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CirTrace;
use crate::error::{domain, Error, Result};

/// One gain observation. A censored sample carries the censoring threshold
/// in `gain_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub distance_m: f64,
    pub gain_db: f64,
    #[serde(with = "flag")]
    pub censored: bool,
}

mod flag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            x => Err(de::Error::custom(format!("censored must be 0 or 1, got {x}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainSeries {
    pub samples: Vec<GainSample>,
    pub noise_floor_db: Option<f64>,
}

impl GainSeries {
    pub fn validate(&self) -> Result<()> {
        for s in &self.samples {
            if !(s.distance_m > 0.0 && s.distance_m.is_finite()) {
                return Err(domain(format!("distance must be positive, got {}", s.distance_m)));
            }
            if !s.gain_db.is_finite() {
                return Err(domain("gain values must be finite"));
            }
        }
        Ok(())
    }

    pub fn censored_count(&self) -> usize {
        self.samples.iter().filter(|s| s.censored).count()
    }
}

/// Read `distance_m,gain_db,censored` rows.
pub fn read_gain_series<R: Read>(r: R) -> Result<GainSeries> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(["distance_m", "gain_db", "censored"]) {
        return Err(Error::Format(
            "gain series header must be distance_m,gain_db,censored".into(),
        ));
    }
    let samples = rdr.deserialize().collect::<std::result::Result<Vec<GainSample>, _>>()?;
    let series = GainSeries {
        samples,
        noise_floor_db: None,
    };
    series.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(series)
}

pub fn write_gain_series<W: Write>(series: &GainSeries, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if series.samples.is_empty() {
        wtr.write_record(["distance_m", "gain_db", "censored"])?;
    }
    for s in &series.samples {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Binary CIR layout, little-endian: `u64 n_time`, `u64 n_delay`, `f64 dt`,
/// `f64 dtau`, then `n_time · n_delay` samples as interleaved `f64` real and
/// imaginary parts, time-major.
pub fn read_cir<R: Read>(mut r: R) -> Result<CirTrace> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("truncated CIR header".into()))?;
    let word = |i: usize| <[u8; 8]>::try_from(&head[8 * i..8 * i + 8]).expect("8 bytes");
    let n_time = u64::from_le_bytes(word(0)) as usize;
    let n_delay = u64::from_le_bytes(word(1)) as usize;
    let dt = f64::from_le_bytes(word(2));
    let dtau = f64::from_le_bytes(word(3));
    let count = n_time
        .checked_mul(n_delay)
        .filter(|c| *c <= (1 << 32))
        .ok_or_else(|| Error::Format("CIR dimensions too large".into()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 16 {
        return Err(Error::Format(format!(
            "CIR body has {} bytes, expected {}",
            body.len(),
            count * 16
        )));
    }
    let h = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    CirTrace::new(n_time, n_delay, dt, dtau, h).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_cir<W: Write>(cir: &CirTrace, mut w: W) -> Result<()> {
    w.write_all(&(cir.n_time as u64).to_le_bytes())?;
    w.write_all(&(cir.n_delay as u64).to_le_bytes())?;
    w.write_all(&cir.dt.to_le_bytes())?;
    w.write_all(&cir.dtau.to_le_bytes())?;
    for z in &cir.h {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}
