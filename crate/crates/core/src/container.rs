//! `CSMT` track container: named frame-major `f32` matrices sharing one
//! frame count, used for vocoder parameters and model features alike.
//!
//! Layout, all little endian: magic `CSMT`, `u32` version, `u32` sample
//! rate, `f64` frame hop (seconds), `u32` channel count; then per channel a
//! `u32` name length, the UTF-8 name, `u32` rows, `u32` cols and
//! `rows * cols` `f32` values in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::{ParameterTrack, NOISE_ENV_POINTS};
use crate::contf0::F0Track;
use crate::error::{shape, Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"CSMT";
pub const CONTAINER_VERSION: u32 = 1;

pub const CH_F0: &str = "f0";
pub const CH_MVF: &str = "mvf";
pub const CH_VOICING: &str = "voicing";
pub const CH_ENVELOPE: &str = "envelope";
pub const CH_NOISE_ENV: &str = "noise_env";
pub const CH_FEATURES: &str = "features";

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Channel {
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| *v as f64).collect())
            .collect()
    }

    /// First column as `f64`.
    pub fn column0(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.data[r * self.cols] as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackContainer {
    sample_rate: u32,
    frame_hop: f64,
    channels: Vec<Channel>,
}

impl TrackContainer {
    pub fn new(sample_rate: u32, frame_hop: f64) -> Result<Self> {
        if sample_rate == 0 || !(frame_hop > 0.0 && frame_hop.is_finite()) {
            return Err(crate::error::domain(
                "container needs a positive rate and frame hop",
            ));
        }
        Ok(Self {
            sample_rate,
            frame_hop,
            channels: Vec::new(),
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frame_hop(&self) -> f64 {
        self.frame_hop
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn n_frames(&self) -> Option<usize> {
        self.channels.first().map(|c| c.rows)
    }

    /// Adds or replaces a channel. Every channel must share the frame count.
    pub fn insert(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f32>) -> Result<()> {
        if data.len() != rows * cols {
            return Err(shape(format!(
                "channel {name}: {} values for {rows}x{cols}",
                data.len()
            )));
        }
        if name.is_empty() || name.len() > u16::MAX as usize {
            return Err(Error::Format("channel names must be 1..65535 bytes".into()));
        }
        let others = self.channels.iter().filter(|c| c.name != name);
        if let Some(c) = others.clone().find(|c| c.rows != rows) {
            return Err(shape(format!(
                "channel {name} has {rows} frames but {} has {}",
                c.name, c.rows
            )));
        }
        let ch = Channel {
            name: name.to_string(),
            rows,
            cols,
            data,
        };
        match self.channels.iter_mut().find(|c| c.name == name) {
            Some(slot) => *slot = ch,
            None => self.channels.push(ch),
        }
        Ok(())
    }

    /// Adds a channel from `f64` rows of equal width.
    pub fn insert_rows(&mut self, name: &str, rows: &[Vec<f64>]) -> Result<()> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(shape(format!("channel {name} has ragged rows")));
        }
        let data = rows.iter().flatten().map(|v| *v as f32).collect();
        self.insert(name, rows.len(), cols, data)
    }

    pub fn insert_column(&mut self, name: &str, values: &[f64]) -> Result<()> {
        self.insert(
            name,
            values.len(),
            1,
            values.iter().map(|v| *v as f32).collect(),
        )
    }

    pub fn get(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Like [`get`](Self::get) but a missing channel is an error naming it.
    pub fn require(&self, name: &str) -> Result<&Channel> {
        self.get(name)
            .ok_or_else(|| Error::Format(format!("container has no `{name}` channel")))
    }

    pub fn from_track(track: &ParameterTrack) -> Result<Self> {
        let mut c = Self::new(track.sample_rate(), track.frame_hop())?;
        c.insert_column(CH_F0, track.f0().values())?;
        c.insert_column(CH_MVF, track.mvf())?;
        let voicing: Vec<f64> = track
            .f0()
            .voicing()
            .iter()
            .map(|v| f64::from(u8::from(*v)))
            .collect();
        c.insert_column(CH_VOICING, &voicing)?;
        c.insert(
            CH_ENVELOPE,
            track.n_frames(),
            track.n_bins(),
            track
                .envelope()
                .iter()
                .flatten()
                .map(|v| *v as f32)
                .collect(),
        )?;
        if let Some(env) = track.noise_env() {
            c.insert(
                CH_NOISE_ENV,
                env.len(),
                NOISE_ENV_POINTS,
                env.iter().flatten().map(|v| *v as f32).collect(),
            )?;
        }
        Ok(c)
    }

    /// Rebuilds a parameter track from the `f0`, `mvf` and `envelope`
    /// channels; `voicing` defaults to all voiced and `noise_env` is optional.
    pub fn to_track(&self) -> Result<ParameterTrack> {
        let f0 = self.require(CH_F0)?.column0();
        let mvf = self.require(CH_MVF)?.column0();
        let envelope = self.require(CH_ENVELOPE)?.rows_f64();
        let voicing = match self.get(CH_VOICING) {
            Some(v) => v.column0().iter().map(|x| *x > 0.5).collect(),
            None => vec![true; f0.len()],
        };
        let noise_env = match self.get(CH_NOISE_ENV) {
            Some(ch) if ch.cols == NOISE_ENV_POINTS => Some(
                (0..ch.rows)
                    .map(|r| {
                        let mut a = [0.0; NOISE_ENV_POINTS];
                        for (d, s) in a.iter_mut().zip(ch.row(r)) {
                            *d = *s as f64;
                        }
                        a
                    })
                    .collect(),
            ),
            Some(ch) => {
                return Err(shape(format!(
                    "noise_env channel has {} columns, expected {NOISE_ENV_POINTS}",
                    ch.cols
                )))
            }
            None => None,
        };
        ParameterTrack::new(
            F0Track::new(f0, self.frame_hop, voicing)?,
            mvf,
            envelope,
            noise_env,
            self.sample_rate,
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTAINER_MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&self.frame_hop.to_le_bytes());
        out.extend_from_slice(&(self.channels.len() as u32).to_le_bytes());
        for c in &self.channels {
            out.extend_from_slice(&(c.name.len() as u32).to_le_bytes());
            out.extend_from_slice(c.name.as_bytes());
            out.extend_from_slice(&(c.rows as u32).to_le_bytes());
            out.extend_from_slice(&(c.cols as u32).to_le_bytes());
            for v in &c.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CONTAINER_MAGIC {
            return Err(Error::Format("not a track container (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version}"
            )));
        }
        let sample_rate = r.u32()?;
        let frame_hop = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let mut c = Self::new(sample_rate, frame_hop).map_err(|e| Error::Format(e.to_string()))?;
        let n = r.u32()?;
        for _ in 0..n {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Format("channel name is not UTF-8".into()))?
                .to_string();
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let count = rows
                .checked_mul(cols)
                .and_then(|v| v.checked_mul(4))
                .ok_or_else(|| Error::Format("channel size overflows".into()))?;
            let data = r
                .take(count)?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            if c.get(&name).is_some() {
                return Err(Error::Format(format!("duplicate channel `{name}`")));
            }
            c.insert(&name, rows, cols, data)
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(
                "trailing bytes after the last channel".into(),
            ));
        }
        Ok(c)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Format("container is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
