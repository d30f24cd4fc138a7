//! Objective distances between a natural and a synthesized waveform: LPC
//! log-likelihood ratio, frequency-weighted segmental SNR and log-spectral
//! distortion, plus the periodogram of an F0 track.

mod bands;
mod lpc;
mod psd;
mod report;

pub use bands::{critical_band_filters, CRITICAL_BANDS};
pub use lpc::{autocorrelation, lpc_analyze, toeplitz_quadratic, LpcModel};
pub use psd::{track_psd, MIN_PSD_FRAMES};
pub use report::write_report;

use crate::analysis::segment_log_envelope;
use crate::error::{domain, Error, Result};
use crate::signal::{hann_periodic, next_pow2, power_spectrum, SpeechBuffer};

/// Analysis frame of every metric (seconds).
pub const METRIC_FRAME: f64 = 0.025;
/// Hop between metric frames (seconds).
pub const METRIC_HOP: f64 = 0.010;
pub const LPC_ORDER: usize = 10;
/// Per-frame LLR ceiling.
pub const LLR_CAP: f64 = 2.0;
/// Frames of the natural signal whose mean square is below this are skipped
/// by the LLR.
pub const SILENT_FRAME_POWER: f64 = 1e-10;
pub const FWSNR_FLOOR: f64 = -10.0;
pub const FWSNR_CEIL: f64 = 35.0;
/// Exponent of the band weights `W = X^gamma`.
pub const FWSNR_GAMMA: f64 = 0.2;
/// Box smoothing (Hz) of the spectral envelope behind the LSD.
pub const LSD_BOX_HZ: f64 = 400.0;
/// Gaussian lifter width (seconds) of the spectral envelope behind the LSD.
pub const LSD_LIFTER: f64 = 0.001;
pub const LSD_BINS: usize = 257;

/// Per-frame values behind a [`MetricReport`]; `None` in `llr` marks a
/// skipped silent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub llr: Vec<Option<f64>>,
    pub fwsnrseg: Vec<f64>,
    pub lsd: Vec<f64>,
}

/// The three distances for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub llr: f64,
    pub fwsnrseg: f64,
    pub lsd: f64,
    pub n_frames: usize,
    pub per_frame: Option<FrameMetrics>,
}

/// Equal-rate, equal-length views of the two signals framed at
/// [`METRIC_FRAME`] / [`METRIC_HOP`].
struct Aligned<'a> {
    x: &'a [f64],
    y: &'a [f64],
    fs: f64,
    len: usize,
    hop: usize,
}

impl<'a> Aligned<'a> {
    fn new(natural: &'a SpeechBuffer, synth: &'a SpeechBuffer) -> Result<Self> {
        if natural.sample_rate() != synth.sample_rate() {
            return Err(domain(format!(
                "sample rates differ: {} vs {}",
                natural.sample_rate(),
                synth.sample_rate()
            )));
        }
        let fs = natural.fs();
        let n = natural.len().min(synth.len());
        let len = (METRIC_FRAME * fs).round() as usize;
        let hop = (METRIC_HOP * fs).round() as usize;
        if n < len {
            return Err(Error::Degenerate(format!(
                "signals overlap by {n} samples, less than one {len}-sample frame"
            )));
        }
        Ok(Self {
            x: &natural.samples()[..n],
            y: &synth.samples()[..n],
            fs,
            len,
            hop,
        })
    }

    fn n_frames(&self) -> usize {
        (self.x.len() - self.len) / self.hop + 1
    }

    fn frames(&self) -> impl Iterator<Item = (&'a [f64], &'a [f64])> + '_ {
        (0..self.n_frames()).map(move |i| {
            let s = i * self.hop;
            (&self.x[s..s + self.len], &self.y[s..s + self.len])
        })
    }
}

fn windowed(frame: &[f64], window: &[f64]) -> Vec<f64> {
    frame.iter().zip(window).map(|(a, b)| a * b).collect()
}

/// Per-frame LLR values; `None` marks silent natural frames.
pub fn llr_frames(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<Vec<Option<f64>>> {
    let al = Aligned::new(natural, synth)?;
    let window = hann_periodic(al.len);
    al.frames()
        .map(|(x, y)| {
            let xw = windowed(x, &window);
            if xw.iter().map(|v| v * v).sum::<f64>() / (al.len as f64) < SILENT_FRAME_POWER {
                return Ok(None);
            }
            let mx = lpc_analyze(&xw, LPC_ORDER)?;
            let ay = match lpc_analyze(&windowed(y, &window), LPC_ORDER) {
                Ok(m) => m.coefficients,
                Err(Error::Degenerate(_)) => {
                    let mut a = vec![0.0; LPC_ORDER + 1];
                    a[0] = 1.0;
                    a
                }
                Err(e) => return Err(e),
            };
            let r = &mx.autocorrelation;
            let num = toeplitz_quadratic(&ay, r);
            let den = toeplitz_quadratic(&mx.coefficients, r);
            Ok(Some((num / den).ln().clamp(0.0, LLR_CAP)))
        })
        .collect()
}

/// Mean per-frame log-likelihood ratio between LPC models of the two
/// signals, measured through the natural signal's autocorrelation. Silent
/// natural frames are skipped; with none left the result is 0.
pub fn llr(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<f64> {
    let valid: Vec<f64> = llr_frames(natural, synth)?.into_iter().flatten().collect();
    Ok(if valid.is_empty() { 0.0 } else { mean(&valid) })
}

/// Per-frame frequency-weighted SNR (dB), each clamped to
/// `[FWSNR_FLOOR, FWSNR_CEIL]`.
pub fn fwsnrseg_frames(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<Vec<f64>> {
    let al = Aligned::new(natural, synth)?;
    let window = hann_periodic(al.len);
    let nfft = next_pow2(2 * al.len);
    let filters = critical_band_filters(nfft, al.fs);
    let band_magnitudes = |frame: &[f64]| -> Vec<f64> {
        let mag: Vec<f64> = power_spectrum(&windowed(frame, &window), nfft)
            .iter()
            .map(|p| p.sqrt())
            .collect();
        filters
            .iter()
            .map(|f| f.iter().zip(&mag).map(|(a, b)| a * b).sum())
            .collect()
    };
    Ok(al
        .frames()
        .map(|(x, y)| {
            let bx = band_magnitudes(x);
            let by = band_magnitudes(y);
            let (mut num, mut den) = (0.0, 0.0);
            for (cx, cy) in bx.iter().zip(&by) {
                let err = ((cx - cy) * (cx - cy)).max(f64::MIN_POSITIVE);
                let snr = (10.0 * (cx * cx / err).log10()).clamp(FWSNR_FLOOR, FWSNR_CEIL);
                let w = cx.powf(FWSNR_GAMMA);
                // accumulated as an offset from the ceiling so a perfect
                // frame lands on it exactly
                let snr = if cx * cx > 0.0 { snr } else { FWSNR_CEIL };
                num += w * (snr - FWSNR_CEIL);
                den += w;
            }
            // a silent natural frame has no weight anywhere; call it a match
            // when the synthetic frame is silent too, a total miss otherwise
            let v = if den > 0.0 {
                FWSNR_CEIL + num / den
            } else if by.iter().all(|v| *v == 0.0) {
                FWSNR_CEIL
            } else {
                FWSNR_FLOOR
            };
            v.clamp(FWSNR_FLOOR, FWSNR_CEIL)
        })
        .collect())
}

/// Frequency-weighted segmental SNR over 25 critical bands (dB). Band SNR
/// is `10 log10(X^2 / (X - Y)^2)` on critical-band magnitudes, weighted by
/// `X^0.2` and clamped per band and per frame to `[-10, 35]`.
pub fn fwsnrseg(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<f64> {
    Ok(mean(&fwsnrseg_frames(natural, synth)?))
}

/// Log envelope (dB) of one metric frame.
fn metric_envelope_db(frame: &[f64], window: &[f64], fs: f64) -> Result<Vec<f64>> {
    let e = segment_log_envelope(frame, window, fs, LSD_BOX_HZ, LSD_LIFTER, LSD_BINS)?;
    Ok(e.into_iter()
        .map(|v| 20.0 * v / std::f64::consts::LN_10)
        .collect())
}

/// Per-frame RMS difference (dB) of the two log envelopes.
pub fn lsd_frames(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<Vec<f64>> {
    let al = Aligned::new(natural, synth)?;
    let window = hann_periodic(al.len);
    al.frames()
        .map(|(x, y)| {
            let ex = metric_envelope_db(x, &window, al.fs)?;
            let ey = metric_envelope_db(y, &window, al.fs)?;
            let ms = ex
                .iter()
                .zip(&ey)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / ex.len() as f64;
            Ok(ms.sqrt())
        })
        .collect()
}

/// Log-spectral distortion (dB): mean over frames of the RMS difference of
/// the smoothed log envelopes, in `20 log10` units.
pub fn lsd(natural: &SpeechBuffer, synth: &SpeechBuffer) -> Result<f64> {
    Ok(mean(&lsd_frames(natural, synth)?))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// All three metrics; `keep_frames` retains the per-frame values.
pub fn evaluate(
    natural: &SpeechBuffer,
    synth: &SpeechBuffer,
    keep_frames: bool,
) -> Result<MetricReport> {
    let frames = FrameMetrics {
        llr: llr_frames(natural, synth)?,
        fwsnrseg: fwsnrseg_frames(natural, synth)?,
        lsd: lsd_frames(natural, synth)?,
    };
    let valid: Vec<f64> = frames.llr.iter().flatten().copied().collect();
    Ok(MetricReport {
        llr: if valid.is_empty() { 0.0 } else { mean(&valid) },
        fwsnrseg: mean(&frames.fwsnrseg),
        lsd: mean(&frames.lsd),
        n_frames: frames.lsd.len(),
        per_frame: keep_frames.then_some(frames),
    })
}
