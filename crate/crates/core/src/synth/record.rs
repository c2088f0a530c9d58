use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::model::{HomodyneAngles, Mode};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"MECHREC1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Signal,
    ShotNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub data: Vec<f64>,
}

/// Sampled photocurrents of both detectors.
///
/// Records are band-shifted: sample frequency f corresponds to the physical
/// frequency `band_offset_hz + f`, so a narrow band around the mechanical
/// resonance can be represented without sampling at the full detector rate.
/// An offset of zero is an ordinary baseband record.
///
/// Values are in shot-noise units with a two-sided spectral density of 1/2
/// for vacuum, so the raw sample variance of a shot-noise record is
/// `sample_rate_hz / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub sample_rate_hz: f64,
    pub band_offset_hz: f64,
    pub angles: HomodyneAngles,
    pub kind: RecordKind,
    pub seed: u64,
    pub channels: Vec<Channel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    sample_rate_hz: f64,
    band_offset_hz: f64,
    n_samples: usize,
    channels: Vec<String>,
    angles: HomodyneAngles,
    seed: u64,
    kind: RecordKind,
    encoding: String,
}

impl TimeSeriesRecord {
    pub fn new(
        sample_rate_hz: f64,
        band_offset_hz: f64,
        angles: HomodyneAngles,
        kind: RecordKind,
        seed: u64,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        let r = Self {
            sample_rate_hz,
            band_offset_hz,
            angles,
            kind,
            seed,
            channels,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if !(self.band_offset_hz >= 0.0 && self.band_offset_hz.is_finite()) {
            return Err(Error::param("band_offset_hz", "must be non-negative"));
        }
        let n = self.len();
        if self.channels.iter().any(|c| c.data.len() != n) {
            return Err(Error::input("record channels differ in length"));
        }
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::input(format!(
                "record length {n} is not a power of two"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.data.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.data.as_slice())
            .ok_or_else(|| Error::input(format!("record has no channel `{name}`")))
    }

    pub fn mode(&self, m: Mode) -> Result<&[f64]> {
        self.channel(&m.to_string())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = Header {
            sample_rate_hz: self.sample_rate_hz,
            band_offset_hz: self.band_offset_hz,
            n_samples: self.len(),
            channels: self.channels.iter().map(|c| c.name.clone()).collect(),
            angles: self.angles,
            seed: self.seed,
            kind: self.kind,
            encoding: "f64le,channel-major".into(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        let mut buf = Vec::with_capacity(8 * self.len());
        for c in &self.channels {
            buf.clear();
            for x in &c.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > 1 << 20 {
            return Err(Error::Format(format!("header length {len} is implausible")));
        }
        let mut json = vec![0u8; len];
        r.read_exact(&mut json)?;
        let h: Header = serde_json::from_slice(&json)?;
        if h.encoding != "f64le,channel-major" {
            return Err(Error::Format(format!(
                "unsupported encoding `{}`",
                h.encoding
            )));
        }
        let mut channels = Vec::with_capacity(h.channels.len());
        let mut bytes = vec![0u8; 8 * h.n_samples];
        for name in h.channels {
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            channels.push(Channel { name, data });
        }
        Self::new(
            h.sample_rate_hz,
            h.band_offset_hz,
            h.angles,
            h.kind,
            h.seed,
            channels,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    /// CSV with `#` metadata lines, a `t_s` column and one column per channel.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# sample_rate_hz: {}", self.sample_rate_hz)?;
        writeln!(w, "# band_offset_hz: {}", self.band_offset_hz)?;
        writeln!(w, "# theta_a: {}", self.angles.theta_a())?;
        writeln!(w, "# theta_b: {}", self.angles.theta_b())?;
        writeln!(
            w,
            "# kind: {}",
            serde_json::to_string(&self.kind)?.trim_matches('"')
        )?;
        writeln!(w, "# seed: {}", self.seed)?;
        let names: Vec<&str> = self.channels.iter().map(|c| c.name.as_str()).collect();
        writeln!(w, "t_s,{}", names.join(","))?;
        for i in 0..self.len() {
            write!(w, "{}", i as f64 / self.sample_rate_hz)?;
            for c in &self.channels {
                write!(w, ",{}", c.data[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TimeSeriesRecord {
        TimeSeriesRecord::new(
            1024.0,
            10.0,
            HomodyneAngles::new(0.1, 0.2),
            RecordKind::Signal,
            42,
            vec![
                Channel {
                    name: "A".into(),
                    data: (0..8).map(|i| i as f64 * 0.1).collect(),
                },
                Channel {
                    name: "B".into(),
                    data: (0..8).map(|i| -1.0 / (i as f64 + 1.0)).collect(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let r = sample();
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        let back = TimeSeriesRecord::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, r);
        buf[0] = b'X';
        assert!(matches!(
            TimeSeriesRecord::read_from(buf.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn rejects_bad_lengths() {
        let mut r = sample();
        r.channels[1].data.pop();
        assert!(r.validate().is_err());
        r.channels[0].data.pop();
        assert!(r.validate().is_err(), "7 is not a power of two");
    }

    #[test]
    fn csv_has_metadata() {
        let mut out = Vec::new();
        sample().write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("# sample_rate_hz: 1024"));
        assert!(s.contains("t_s,A,B\n0,0,-1\n"));
        assert_eq!(s.lines().count(), 7 + 8);
    }
}
