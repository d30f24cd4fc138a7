use serde::{Deserialize, Serialize};

use super::track::{fill_gaps, F0Track, F0_CEIL, F0_FLOOR};
use crate::error::{domain, Error, Result};
use crate::signal::{frame_count, SpeechBuffer};

/// Shortest waveform the analysis accepts (seconds).
pub const MIN_DURATION: f64 = 0.1;

/// Framing and voicing parameters of the baseline pitch estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PitchConfig {
    /// Frame hop in seconds.
    pub frame_hop: f64,
    /// Correlation window in seconds.
    pub window: f64,
    pub min_f0: f64,
    pub max_f0: f64,
    /// Value used when no frame is voiced.
    pub default_f0: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Frames quieter than this RMS are unvoiced.
    pub silence_rms: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            frame_hop: 0.005,
            window: 0.025,
            min_f0: F0_FLOOR,
            max_f0: F0_CEIL,
            default_f0: 100.0,
            voicing_threshold: 0.5,
            silence_rms: 1e-4,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.frame_hop > 0.0
            && self.window >= self.frame_hop
            && F0_FLOOR <= self.min_f0
            && self.min_f0 < self.max_f0
            && self.max_f0 <= F0_CEIL
            && (self.min_f0..=self.max_f0).contains(&self.default_f0)
            && (0.0..1.0).contains(&self.voicing_threshold)
            && self.silence_rms >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid pitch settings: {self:?}")))
        }
    }

    pub fn hop_samples(&self, fs: u32) -> usize {
        ((self.frame_hop * fs as f64).round() as usize).max(1)
    }
}

/// Normalized cross-correlation at integer `lag`, using a window of `len`
/// samples centred on `center` (the two segments straddle the centre
/// symmetrically). Returns the correlation and the geometric-mean energy.
fn nccf(x: &[f64], center: isize, len: usize, lag: usize) -> (f64, f64) {
    let start = center - (len / 2) as isize - (lag / 2) as isize;
    let at = |i: isize| {
        if i >= 0 && (i as usize) < x.len() {
            x[i as usize]
        } else {
            0.0
        }
    };
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for j in 0..len as isize {
        let a = at(start + j);
        let b = at(start + j + lag as isize);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let energy = (xx * yy).sqrt();
    if energy <= 0.0 {
        (0.0, 0.0)
    } else {
        (xy / energy, energy)
    }
}

/// Per-frame F0 from the normalized autocorrelation with parabolic peak
/// interpolation; returns `None` for frames judged unvoiced.
fn frame_pitch(x: &[f64], center: isize, cfg: &PitchConfig, fs: f64) -> Option<f64> {
    let len = (cfg.window * fs).round() as usize;
    let lag_min = (fs / cfg.max_f0).floor().max(2.0) as usize;
    let lag_max = (fs / cfg.min_f0).ceil() as usize;

    let (_, e0) = nccf(x, center, len, 0);
    if (e0 / len as f64).sqrt() < cfg.silence_rms {
        return None;
    }
    let r: Vec<f64> = (lag_min - 1..=lag_max + 1)
        .map(|lag| nccf(x, center, len, lag).0)
        .collect();
    // r[j] corresponds to lag_min - 1 + j
    let inner = 1..r.len() - 1;
    let best = inner
        .clone()
        .map(|j| r[j])
        .fold(f64::NEG_INFINITY, f64::max);
    if best < cfg.voicing_threshold {
        return None;
    }
    // first local maximum close to the global one avoids sub-octave picks
    let j = inner
        .clone()
        .find(|&j| r[j] >= 0.9 * best && r[j] >= r[j - 1] && r[j] >= r[j + 1])?;
    let (a, b, c) = (r[j - 1], r[j], r[j + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (lag_min - 1 + j) as f64 + offset;
    Some(fs / lag)
}

/// Baseline continuous F0: autocorrelation pitch on voiced frames, linear
/// interpolation across unvoiced frames, clamped to `[F0_FLOOR, F0_CEIL]`.
pub fn estimate_baseline_contf0(wave: &SpeechBuffer, cfg: &PitchConfig) -> Result<F0Track> {
    cfg.validate()?;
    if wave.duration() < MIN_DURATION - 1e-12 {
        return Err(domain(format!(
            "waveform of {:.3} s is shorter than the {MIN_DURATION} s minimum",
            wave.duration()
        )));
    }
    let fs = wave.fs();
    let hop = cfg.hop_samples(wave.sample_rate());
    let n = frame_count(wave.len(), hop);
    let raw: Vec<Option<f64>> = (0..n)
        .map(|i| frame_pitch(wave.samples(), (i * hop) as isize, cfg, fs))
        .collect();
    let voicing: Vec<bool> = raw.iter().map(Option::is_some).collect();
    let values: Vec<f64> = raw.iter().map(|v| v.unwrap_or(0.0)).collect();
    let filled = fill_gaps(&values, &voicing).unwrap_or_else(|| vec![cfg.default_f0; n]);
    let clamped = filled
        .into_iter()
        .map(|v| v.clamp(F0_FLOOR, F0_CEIL))
        .collect();
    F0Track::new(clamped, hop as f64 / fs, voicing)
}
