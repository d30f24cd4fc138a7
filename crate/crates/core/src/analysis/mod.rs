//! Analysis half of the vocoder: continuous F0, maximum voiced frequency,
//! spectral envelope and the optional high-band time envelope.

mod envelope;
mod mvf;
mod noise_env;

pub use envelope::{
    extract_envelope, segment_log_envelope, EnvelopeConfig, ENVELOPE_FLOOR, NOISE_LOG_BIAS,
};
pub use mvf::{estimate_mvf, MvfConfig, DEFAULT_MVF};
pub use noise_env::{estimate_noise_envelope, noise_env_point_time, NOISE_ENV_POINTS};

use serde::{Deserialize, Serialize};

use crate::contf0::{estimate_baseline_contf0, refine_contf0, F0Track, PitchConfig, RefineConfig};
use crate::error::{shape, Error, Result};
use crate::signal::SpeechBuffer;

/// The full per-frame parameter set of the vocoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTrack {
    f0: F0Track,
    mvf: Vec<f64>,
    envelope: Vec<Vec<f64>>,
    noise_env: Option<Vec<[f64; NOISE_ENV_POINTS]>>,
    sample_rate: u32,
}

impl ParameterTrack {
    /// `envelope` holds one natural-log amplitude spectrum per frame, sampled
    /// uniformly over `[0, sample_rate / 2]`.
    pub fn new(
        f0: F0Track,
        mvf: Vec<f64>,
        envelope: Vec<Vec<f64>>,
        noise_env: Option<Vec<[f64; NOISE_ENV_POINTS]>>,
        sample_rate: u32,
    ) -> Result<Self> {
        let n = f0.len();
        if sample_rate == 0 {
            return Err(crate::error::domain("sample rate must be positive"));
        }
        if mvf.len() != n || envelope.len() != n {
            return Err(shape(format!(
                "{n} F0 frames but {} MVF and {} envelope frames",
                mvf.len(),
                envelope.len()
            )));
        }
        let nyquist = sample_rate as f64 / 2.0;
        if let Some(bad) = mvf.iter().find(|m| !(**m > 0.0 && **m <= nyquist)) {
            return Err(crate::error::domain(format!(
                "MVF {bad} outside (0, {nyquist}]"
            )));
        }
        let n_bins = envelope.first().map_or(2, Vec::len);
        if n_bins < 2 || envelope.iter().any(|e| e.len() != n_bins) {
            return Err(shape(
                "envelope frames must share a bin count of at least 2",
            ));
        }
        if envelope.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite envelope value".into()));
        }
        if let Some(env) = &noise_env {
            if env.len() != n {
                return Err(shape(format!(
                    "{n} frames but {} noise envelope frames",
                    env.len()
                )));
            }
            if env.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Numerical(
                    "noise envelope must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self {
            f0,
            mvf,
            envelope,
            noise_env,
            sample_rate,
        })
    }

    pub fn f0(&self) -> &F0Track {
        &self.f0
    }

    pub fn mvf(&self) -> &[f64] {
        &self.mvf
    }

    pub fn envelope(&self) -> &[Vec<f64>] {
        &self.envelope
    }

    pub fn noise_env(&self) -> Option<&[[f64; NOISE_ENV_POINTS]]> {
        self.noise_env.as_deref()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frame_hop(&self) -> f64 {
        self.f0.frame_hop()
    }

    pub fn n_frames(&self) -> usize {
        self.f0.len()
    }

    pub fn n_bins(&self) -> usize {
        self.envelope.first().map_or(0, Vec::len)
    }

    pub fn without_noise_env(mut self) -> Self {
        self.noise_env = None;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub pitch: PitchConfig,
    pub refine: RefineConfig,
    pub mvf: MvfConfig,
    pub envelope: EnvelopeConfig,
    /// Store the high-band time envelope alongside the spectral parameters.
    pub noise_envelope: bool,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        self.refine.validate()?;
        self.mvf.validate()?;
        self.envelope.validate()
    }
}

/// Baseline F0, time-warping refinement, MVF and envelope in one pass.
pub fn analyze(wave: &SpeechBuffer, cfg: &AnalysisConfig) -> Result<ParameterTrack> {
    cfg.validate()?;
    let baseline = estimate_baseline_contf0(wave, &cfg.pitch)?;
    // a signal with no measurable harmonic energy keeps its baseline track
    let f0 = match refine_contf0(wave, &baseline, &cfg.refine) {
        Err(Error::Degenerate(_)) => baseline,
        other => other?,
    };
    let mvf = estimate_mvf(wave, &f0, &cfg.mvf)?;
    let envelope = extract_envelope(wave, &f0, &cfg.envelope)?;
    let noise_env = if cfg.noise_envelope {
        Some(estimate_noise_envelope(wave, &mvf, f0.frame_hop())?)
    } else {
        None
    };
    ParameterTrack::new(f0, mvf, envelope, noise_env, wave.sample_rate())
}
