use serde::{Deserialize, Serialize};

use super::envelope::hann_symmetric;
use crate::contf0::F0Track;
use crate::error::{Error, Result};
use crate::signal::{centered_segment, next_pow2, power_spectrum, SpeechBuffer};

/// MVF used when no frame of the utterance is voiced.
pub const DEFAULT_MVF: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MvfConfig {
    /// Minimum peak-to-valley contrast of a voiced harmonic (dB).
    pub threshold_db: f64,
    /// Length of the median smoother (frames, odd).
    pub median_frames: usize,
    /// Analysis window in pitch periods.
    pub periods: f64,
    /// Half-width of the peak and valley regions, as a fraction of F0.
    pub region: f64,
}

impl Default for MvfConfig {
    fn default() -> Self {
        Self {
            threshold_db: 6.0,
            median_frames: 5,
            periods: 5.0,
            region: 0.15,
        }
    }
}

impl MvfConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.threshold_db > 0.0
            && self.median_frames % 2 == 1
            && self.periods >= 2.0
            && self.region > 0.0
            && self.region < 0.25;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid MVF settings: {self:?}")))
        }
    }
}

fn region_mean(power: &[f64], center_hz: f64, half_hz: f64, bin_hz: f64) -> f64 {
    let lo = ((center_hz - half_hz) / bin_hz).ceil().max(0.0) as usize;
    let hi = (((center_hz + half_hz) / bin_hz).floor() as usize).min(power.len() - 1);
    if hi < lo {
        let b = ((center_hz / bin_hz).round() as usize).min(power.len() - 1);
        return power[b];
    }
    power[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
}

/// Raw MVF of one voiced frame: `(k - 0.5) * f0` for the first harmonic `k`
/// whose peak-to-valley contrast falls below the threshold, or the Nyquist
/// frequency when every harmonic that fits passes.
fn frame_mvf(power: &[f64], f0: f64, bin_hz: f64, nyquist: f64, cfg: &MvfConfig) -> f64 {
    let floor = 1e-20 + 1e-12 * power.iter().cloned().fold(0.0, f64::max);
    let half = cfg.region * f0;
    let ratio = 10f64.powf(cfg.threshold_db / 10.0);
    let mut k = 1;
    while (k as f64 + 0.5) * f0 + half <= nyquist {
        let kf = k as f64 * f0;
        let peak = region_mean(power, kf, half, bin_hz);
        let valley = 0.5
            * (region_mean(power, kf - 0.5 * f0, half, bin_hz)
                + region_mean(power, kf + 0.5 * f0, half, bin_hz));
        if peak + floor < ratio * (valley + floor) {
            return (k as f64 - 0.5) * f0;
        }
        k += 1;
    }
    nyquist
}

/// Odd-length running median; the window shrinks symmetrically at the ends.
fn median_filter(x: &[f64], len: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let r = (len / 2).min(i).min(x.len() - 1 - i);
            let (lo, hi) = (i - r, i + r);
            let mut w = x[lo..=hi].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            w[w.len() / 2]
        })
        .collect()
}

/// Maximum voiced frequency per frame.
///
/// Voiced frames get a harmonic-contrast estimate from a pitch-adaptive Hann
/// spectrum averaged over the frame and its two neighbours; unvoiced frames
/// take values interpolated from voiced ones. The sequence is then median
/// smoothed and clamped to `[2 * f0, fs / 2]`.
pub fn estimate_mvf(wave: &SpeechBuffer, f0: &F0Track, cfg: &MvfConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let fs = wave.fs();
    let nyquist = wave.nyquist();
    let hop = f0.frame_hop() * fs;
    let raw: Vec<f64> = f0
        .values()
        .iter()
        .zip(f0.voicing())
        .enumerate()
        .map(|(i, (&f, &voiced))| {
            if !voiced {
                return 0.0;
            }
            let len = ((cfg.periods * fs / f).round() as usize) | 1;
            let nfft = 4 * next_pow2(len);
            let window = hann_symmetric(len);
            let mut power = vec![0.0; nfft / 2 + 1];
            for d in -1isize..=1 {
                let center = ((i as isize + d) as f64 * hop).round() as isize;
                let seg: Vec<f64> = centered_segment(wave.samples(), center, len)
                    .iter()
                    .zip(&window)
                    .map(|(x, w)| x * w)
                    .collect();
                for (acc, p) in power.iter_mut().zip(power_spectrum(&seg, nfft)) {
                    *acc += p;
                }
            }
            frame_mvf(&power, f, fs / nfft as f64, nyquist, cfg)
        })
        .collect();

    let filled = crate::contf0::fill_gaps(&raw, f0.voicing())
        .unwrap_or_else(|| vec![DEFAULT_MVF; raw.len()]);
    Ok(median_filter(&filled, cfg.median_frames)
        .into_iter()
        .zip(f0.values())
        .map(|(m, &f)| m.clamp((2.0 * f).min(nyquist), nyquist))
        .collect())
}
