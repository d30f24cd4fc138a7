use serde::{Deserialize, Serialize};

use crate::contf0::F0Track;
use crate::error::{shape, Error, Result};
use crate::signal::{
    centered_segment, lifter_log_spectrum, next_pow2, power_spectrum, SpeechBuffer,
};

/// Power floor added before taking logs; the envelope of silence sits at
/// `0.5 * ln(ENVELOPE_FLOOR)`, i.e. -120 dB re full-scale noise.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Mean of `0.5 * ln(smoothed power / sigma^2)` for white noise of variance
/// `sigma^2` under the default pitch-adaptive settings (three-period window,
/// one-F0 box). Harmonic peaks carry no such bias, so only the noise path
/// corrects for it.
pub const NOISE_LOG_BIAS: f64 = -0.125;

/// Envelope settings shared by analysis and the spectral-distance metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConfig {
    /// Analysis window length in pitch periods.
    pub periods: f64,
    /// Width (standard deviation) of the Gaussian cepstral lifter, in pitch
    /// periods.
    pub lifter_periods: f64,
    pub n_bins: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            periods: 3.0,
            lifter_periods: 0.5,
            n_bins: 257,
        }
    }
}

impl EnvelopeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.periods >= 3.0 && self.lifter_periods > 0.0 && self.n_bins >= 2 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid envelope settings: {self:?}"
            )))
        }
    }
}

/// Symmetric Hann window without zero end points.
pub(crate) fn hann_symmetric(len: usize) -> Vec<f64> {
    let d = (len + 1) as f64;
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (n + 1) as f64 / d).cos())
        .collect()
}

/// Running mean over `width` bins (fractional widths allowed), with the
/// spectrum mirrored at both ends.
pub(crate) fn box_smooth(p: &[f64], width: f64) -> Vec<f64> {
    let n = p.len();
    if n < 2 || width <= 1e-9 {
        return p.to_vec();
    }
    let width = width.min((n - 1) as f64);
    let pad = (width / 2.0).ceil() as usize + 2;
    let reflect = |j: isize| -> f64 {
        let last = (n - 1) as isize;
        let mut j = j.abs();
        if j > last {
            j = 2 * last - j;
        }
        p[j.clamp(0, last) as usize]
    };
    // cum[m] integrates the extended spectrum from -pad - 0.5 to -pad - 0.5 + m
    let mut cum = vec![0.0; n + 2 * pad + 1];
    for m in 0..n + 2 * pad {
        cum[m + 1] = cum[m] + reflect(m as isize - pad as isize);
    }
    let integral = |x: f64| {
        let u = x + pad as f64 + 0.5;
        let i = (u.floor() as usize).min(cum.len() - 2);
        let frac = u - i as f64;
        cum[i] + frac * (cum[i + 1] - cum[i])
    };
    (0..n)
        .map(|b| {
            let c = b as f64;
            (integral(c + width / 2.0) - integral(c - width / 2.0)) / width
        })
        .collect()
}

/// Linear resampling of a spectrum on `0..=nyquist` to `n_bins` points.
pub(crate) fn resample_bins(x: &[f64], n_bins: usize) -> Vec<f64> {
    if x.len() == n_bins {
        return x.to_vec();
    }
    let scale = (x.len() - 1) as f64 / (n_bins - 1) as f64;
    (0..n_bins)
        .map(|j| {
            let u = j as f64 * scale;
            let i = (u.floor() as usize).min(x.len() - 2);
            let frac = u - i as f64;
            x[i] + frac * (x[i + 1] - x[i])
        })
        .collect()
}

/// Natural-log amplitude envelope of one segment.
///
/// The segment is windowed, its power spectrum normalized by the window
/// energy (so white noise of variance `s^2` has expected level `s^2`),
/// smoothed with a box `box_width_hz` wide, converted to `0.5 * ln`, liftered
/// with a Gaussian of width `lifter_seconds` and resampled to `n_bins` over `[0, fs / 2]`.
pub fn segment_log_envelope(
    segment: &[f64],
    window: &[f64],
    fs: f64,
    box_width_hz: f64,
    lifter_seconds: f64,
    n_bins: usize,
) -> Result<Vec<f64>> {
    if segment.len() != window.len() || segment.is_empty() {
        return Err(shape(format!(
            "segment of {} samples with window of {}",
            segment.len(),
            window.len()
        )));
    }
    if n_bins < 2 {
        return Err(shape("an envelope needs at least two bins"));
    }
    let nfft = next_pow2(segment.len()).max(2 * (n_bins - 1));
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let windowed: Vec<f64> = segment.iter().zip(window).map(|(x, w)| x * w).collect();
    let power: Vec<f64> = power_spectrum(&windowed, nfft)
        .into_iter()
        .map(|p| p / energy)
        .collect();
    let smoothed = box_smooth(&power, box_width_hz * nfft as f64 / fs);
    let log_amp: Vec<f64> = smoothed
        .iter()
        .map(|p| 0.5 * (p + ENVELOPE_FLOOR).ln())
        .collect();
    // Gaussian lifter: a positive smoothing kernel, so an isolated peak is
    // not dragged off its bin by ringing against its own mirror image at DC
    let sigma = lifter_seconds * fs;
    let liftered = lifter_log_spectrum(&log_amp, |q| (-0.5 * (q as f64 / sigma).powi(2)).exp());
    Ok(resample_bins(&liftered, n_bins))
}

/// Pitch-adaptive envelope of every frame of `f0`.
pub fn extract_envelope(
    wave: &SpeechBuffer,
    f0: &F0Track,
    cfg: &EnvelopeConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let fs = wave.fs();
    let hop = f0.frame_hop() * fs;
    f0.values()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let len = ((cfg.periods * fs / f).round() as usize) | 1;
            let center = (i as f64 * hop).round() as isize;
            let seg = centered_segment(wave.samples(), center, len);
            segment_log_envelope(
                &seg,
                &hann_symmetric(len),
                fs,
                f,
                cfg.lifter_periods / f,
                cfg.n_bins,
            )
        })
        .collect()
}
