//! Shared DSP primitives: sample buffers, frame grids, windows, overlap-add,
//! linear-phase FIR filtering, FFT convolution, time-axis warping and WAV I/O.

mod cepstrum;
mod fft;
mod fir;
mod ola;
mod warp;
pub mod wav;
mod window;

pub use cepstrum::{lifter_log_spectrum, minimum_phase, real_cepstrum};
pub use fft::{convolve_centered, convolve_centered_complex, next_pow2, power_spectrum};
pub use fir::{design_highpass, highpass_fir};
pub use ola::overlap_add;
pub use warp::{resample_by_warp, WarpDirection, WarpMap, INTERP_HALF_TAPS};
pub use window::{hann_periodic, kaiser, nuttall_value, nuttall_window, NUTTALL_COEFFS};

use crate::error::{domain, Error, Result};

/// Mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SpeechBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(domain("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn fs(&self) -> f64 {
        self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs()
    }

    pub fn nyquist(&self) -> f64 {
        self.fs() / 2.0
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }
}

/// Regular framing of a sample sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    frame_length: usize,
    hop: usize,
    n_frames: usize,
}

impl FrameGrid {
    pub fn new(frame_length: usize, hop: usize, n_frames: usize) -> Result<Self> {
        if hop == 0 || hop > frame_length {
            return Err(domain(format!("hop {hop} must be in 1..={frame_length}")));
        }
        if n_frames == 0 {
            return Err(domain("frame grid needs at least one frame"));
        }
        Ok(Self {
            frame_length,
            hop,
            n_frames,
        })
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// Length of the overlap-added output.
    pub fn output_len(&self) -> usize {
        (self.n_frames - 1) * self.hop + self.frame_length
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Frame centers (in samples) for a signal of `len` samples at `hop` spacing.
///
/// Frame `i` is centred on sample `i * hop`; the last frame lies at or beyond the
/// final sample so that every sample is covered.
pub fn frame_count(len: usize, hop: usize) -> usize {
    if hop == 0 {
        return 0;
    }
    len / hop + 1
}

/// Extract `length` samples centred on `center`, zero-padding outside the signal.
pub fn centered_segment(x: &[f64], center: isize, length: usize) -> Vec<f64> {
    let start = center - (length / 2) as isize;
    (0..length)
        .map(|j| {
            let idx = start + j as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                x[idx as usize]
            } else {
                0.0
            }
        })
        .collect()
}

pub(crate) fn check_band_frequency(f: f64, fs: f64, what: &str) -> Result<()> {
    if !(f > 0.0 && f < fs / 2.0) || !f.is_finite() {
        return Err(Error::Domain(format!(
            "{what} {f} Hz must lie in (0, {})",
            fs / 2.0
        )));
    }
    Ok(())
}
