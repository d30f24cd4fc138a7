//! Synthesis half of the vocoder: harmonics below the maximum voiced
//! frequency plus high-passed, envelope-shaped noise above it, assembled by
//! overlap-add of frames two hops long.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::analysis::{noise_env_point_time, ParameterTrack, NOISE_LOG_BIAS};
use crate::error::{domain, shape, Result};
use crate::signal::{
    design_highpass, hann_periodic, minimum_phase, next_pow2, overlap_add, FrameGrid, SpeechBuffer,
};

/// Number of harmonics below the maximum voiced frequency:
/// `round(mvf / f0) - 1` (rounding half away from zero, floored at 0) for
/// voiced frames, 0 for unvoiced ones.
pub fn harmonic_count(f0: f64, mvf: f64, voiced: bool) -> Result<usize> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(domain(format!("f0 must be positive, got {f0}")));
    }
    if !(mvf > 0.0 && mvf.is_finite()) {
        return Err(domain(format!("MVF must be positive, got {mvf}")));
    }
    if !voiced {
        return Ok(0);
    }
    Ok(((mvf / f0).round() - 1.0).max(0.0) as usize)
}

/// Constant-parameter harmonic content of one synthesis frame. Phases are
/// referenced to the first sample of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFrame {
    f0: f64,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl HarmonicFrame {
    pub fn new(f0: f64, amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(domain(format!("f0 must be positive, got {f0}")));
        }
        if amplitudes.len() != phases.len() {
            return Err(shape(format!(
                "{} amplitudes but {} phases",
                amplitudes.len(),
                phases.len()
            )));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(domain("harmonic amplitudes must be finite and nonnegative"));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(domain("harmonic phases must be finite"));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self {
            f0,
            amplitudes,
            phases,
        })
    }

    pub fn k_max(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Wrap to `(-pi, pi]`.
fn wrap_phase(p: f64) -> f64 {
    let w = (p + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// `sum_k A_k cos(2 pi k f0 t / fs + phi_k)` for `t = 0..length`, multiplied
/// by the periodic Hann synthesis window.
pub fn synth_voiced_frame(
    frame: &HarmonicFrame,
    length: usize,
    sample_rate: u32,
) -> Result<Vec<f64>> {
    let fs = sample_rate as f64;
    if frame.k_max() as f64 * frame.f0 >= fs / 2.0 {
        return Err(domain(format!(
            "{} harmonics of {} Hz reach the Nyquist frequency",
            frame.k_max(),
            frame.f0
        )));
    }
    let window = hann_periodic(length);
    let w0 = 2.0 * PI * frame.f0 / fs;
    Ok((0..length)
        .map(|t| {
            let s: f64 = frame
                .amplitudes
                .iter()
                .zip(&frame.phases)
                .enumerate()
                .map(|(k, (a, p))| a * ((k + 1) as f64 * w0 * t as f64 + p).cos())
                .sum();
            s * window[t]
        })
        .collect())
}

/// Linear interpolation of a log envelope (bins spanning `[0, nyquist]`).
fn envelope_at(envelope: &[f64], freq: f64, nyquist: f64) -> f64 {
    let u = (freq / nyquist * (envelope.len() - 1) as f64).clamp(0.0, (envelope.len() - 1) as f64);
    let i = (u.floor() as usize).min(envelope.len() - 2);
    let frac = u - i as f64;
    envelope[i] + frac * (envelope[i + 1] - envelope[i])
}

/// Noise component of one frame.
///
/// Seeded white Gaussian noise is high-passed at `mvf`, shaped by
/// `exp(envelope)` (corrected for the noise bias of the envelope estimator),
/// multiplied by the time envelope `time_env` (flat when `None`) and windowed
/// by the square root of the periodic Hann window, so independent noise
/// frames at 50% overlap keep a constant expected power.
pub fn synth_noise_frame(
    envelope: &[f64],
    mvf: f64,
    time_env: Option<&[f64]>,
    length: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let fs = sample_rate as f64;
    if envelope.len() < 2 {
        return Err(shape("an envelope needs at least two bins"));
    }
    if let Some(e) = time_env {
        if e.len() != length {
            return Err(shape(format!(
                "time envelope of {} samples for a {length}-sample frame",
                e.len()
            )));
        }
    }
    let h = design_highpass(mvf, fs)?;
    if time_env.is_some_and(|e| e.iter().all(|v| *v == 0.0)) {
        return Ok(vec![0.0; length]);
    }
    let pad = h.len() / 2 + 64;
    let total = length + 2 * pad;
    let nfft = next_pow2(total + h.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<Complex64> = (0..nfft)
        .map(|i| {
            let v = if i < total {
                StandardNormal.sample(&mut rng)
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); nfft];
    for (k, v) in kernel.iter_mut().zip(&h) {
        *k = Complex64::new(*v, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nfft);
    fwd.process(&mut noise);
    fwd.process(&mut kernel);
    let nyquist = fs / 2.0;
    for (b, (x, k)) in noise.iter_mut().zip(&kernel).enumerate() {
        let bin = b.min(nfft - b);
        let freq = bin as f64 * fs / nfft as f64;
        let gain = (envelope_at(envelope, freq, nyquist) - NOISE_LOG_BIAS).exp();
        *x *= k * gain;
    }
    planner.plan_fft_inverse(nfft).process(&mut noise);
    // the kernel's centre tap sits at h.len() / 2, which pad absorbs
    let start = pad + h.len() / 2;
    let window = hann_periodic(length);
    Ok((0..length)
        .map(|t| {
            let e = time_env.map_or(1.0, |e| e[t]);
            noise[start + t].re / nfft as f64 * e * window[t].sqrt()
        })
        .collect())
}

/// Seed of frame `index` derived from the utterance seed.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Harmonic content of every frame: amplitudes from the envelope at `k * f0`,
/// phases from the minimum-phase response of the envelope plus the running
/// fundamental phase, integrated across frames with the trapezoid rule.
pub fn harmonic_frames(track: &ParameterTrack) -> Result<Vec<HarmonicFrame>> {
    let fs = track.sample_rate() as f64;
    let nyquist = fs / 2.0;
    let hop = (track.frame_hop() * fs).round();
    let f0 = track.f0().values();
    let mut theta = 0.0;
    let mut frames = Vec::with_capacity(track.n_frames());
    for i in 0..track.n_frames() {
        if i > 0 {
            theta = (theta + PI * (f0[i - 1] + f0[i]) * hop / fs).rem_euclid(2.0 * PI);
        }
        let f = f0[i];
        let mut k_max = harmonic_count(f, track.mvf()[i], track.f0().voicing()[i])?;
        while k_max > 0 && k_max as f64 * f >= nyquist {
            k_max -= 1;
        }
        let env = &track.envelope()[i];
        let min_phase = if k_max > 0 {
            minimum_phase(env)
        } else {
            Vec::new()
        };
        let amp_scale = 2.0 * (f / fs).sqrt();
        let mut amplitudes = Vec::with_capacity(k_max);
        let mut phases = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let kf = k as f64 * f;
            amplitudes.push(amp_scale * envelope_at(env, kf, nyquist).exp());
            // frame starts one hop before its centre
            let at_centre = k as f64 * theta + envelope_at(&min_phase, kf, nyquist);
            phases.push(at_centre - 2.0 * PI * kf * hop / fs);
        }
        frames.push(HarmonicFrame::new(f, amplitudes, phases)?);
    }
    Ok(frames)
}

/// Per-sample time envelope interpolated from the stored per-frame points,
/// covering `[-hop, n_frames * hop)` relative to the first frame centre.
fn time_envelope(points: &[[f64; crate::analysis::NOISE_ENV_POINTS]], hop: usize) -> Vec<f64> {
    let n = points.len();
    let knots: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.iter()
                .enumerate()
                .map(move |(j, v)| (noise_env_point_time(i, j) * hop as f64, *v))
        })
        .collect();
    let len = (n + 1) * hop;
    let mut out = Vec::with_capacity(len);
    let mut k = 0;
    for s in 0..len {
        let t = s as f64 - hop as f64;
        while k + 1 < knots.len() && knots[k + 1].0 <= t {
            k += 1;
        }
        let v = if t <= knots[0].0 {
            knots[0].1
        } else if k + 1 >= knots.len() {
            knots[k].1
        } else {
            let (t0, v0) = knots[k];
            let (t1, v1) = knots[k + 1];
            v0 + (t - t0) / (t1 - t0) * (v1 - v0)
        };
        out.push(v);
    }
    out
}

/// The two synthesis paths, before they are summed.
#[derive(Debug, Clone)]
pub struct SynthesisParts {
    pub voiced: SpeechBuffer,
    pub noise: SpeechBuffer,
}

impl SynthesisParts {
    pub fn combined(&self) -> Result<SpeechBuffer> {
        let s = self
            .voiced
            .samples()
            .iter()
            .zip(self.noise.samples())
            .map(|(a, b)| a + b)
            .collect();
        SpeechBuffer::new(s, self.voiced.sample_rate())
    }
}

/// Render the voiced and noise paths separately. Output has
/// `(n_frames - 1) * hop + 1` samples, frame `i` centred on sample `i * hop`.
pub fn synthesize_parts(track: &ParameterTrack, seed: u64) -> Result<SynthesisParts> {
    let rate = track.sample_rate();
    let fs = rate as f64;
    let n = track.n_frames();
    if n == 0 {
        let empty = SpeechBuffer::new(Vec::new(), rate)?;
        return Ok(SynthesisParts {
            voiced: empty.clone(),
            noise: empty,
        });
    }
    let hop = ((track.frame_hop() * fs).round() as usize).max(1);
    let len = 2 * hop;
    let grid = FrameGrid::new(len, hop, n)?;
    let nyquist = fs / 2.0;
    let time_env = track.noise_env().map(|p| time_envelope(p, hop));

    let harmonics = harmonic_frames(track)?;
    let mut voiced = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for (i, frame) in harmonics.iter().enumerate() {
        voiced.push(synth_voiced_frame(frame, len, rate)?);
        let cutoff = track.mvf()[i];
        if cutoff >= nyquist {
            noise.push(vec![0.0; len]);
            continue;
        }
        let env_slice = time_env.as_ref().map(|e| &e[i * hop..i * hop + len]);
        noise.push(synth_noise_frame(
            &track.envelope()[i],
            cutoff,
            env_slice,
            len,
            rate,
            frame_seed(seed, i),
        )?);
    }
    let trim = |buf: SpeechBuffer| {
        let s = buf.into_samples();
        SpeechBuffer::new(s[hop..hop + (n - 1) * hop + 1].to_vec(), rate)
    };
    Ok(SynthesisParts {
        voiced: trim(overlap_add(&voiced, &grid, rate)?)?,
        noise: trim(overlap_add(&noise, &grid, rate)?)?,
    })
}

/// Waveform from a parameter track: harmonic plus noise component.
pub fn synthesize(track: &ParameterTrack, seed: u64) -> Result<SpeechBuffer> {
    synthesize_parts(track, seed)?.combined()
}

#[cfg(test)]
mod tests;
