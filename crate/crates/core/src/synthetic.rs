//! Synthetic test voices with known generator parameters.
//!
//! These provide ground truth for the pitch, MVF and copy-synthesis checks and
//! back the toy training corpus.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::signal::{highpass_fir, rms, SpeechBuffer};

fn n_samples(duration: f64, fs: u32) -> usize {
    (duration * fs as f64).round() as usize
}

pub fn tone(freq: f64, amplitude: f64, duration: f64, fs: u32) -> SpeechBuffer {
    let w = 2.0 * PI * freq / fs as f64;
    let samples = (0..n_samples(duration, fs))
        .map(|n| amplitude * (w * n as f64).sin())
        .collect();
    SpeechBuffer::new(samples, fs).expect("finite tone")
}

/// Sum of harmonics `k * f0(t)` with amplitudes `amplitudes[k - 1]`, phase
/// integrated sample by sample.
pub fn harmonic_voice<F: Fn(f64) -> f64>(
    f0: F,
    amplitudes: &[f64],
    duration: f64,
    fs: u32,
) -> SpeechBuffer {
    let fsf = fs as f64;
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(n_samples(duration, fs));
    for n in 0..n_samples(duration, fs) {
        let t = n as f64 / fsf;
        let s: f64 = amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * phase).cos())
            .sum();
        out.push(s);
        let f_mid = f0(t + 0.5 / fsf);
        phase = (phase + 2.0 * PI * f_mid / fsf).rem_euclid(2.0 * PI);
    }
    SpeechBuffer::new(out, fs).expect("finite voice")
}

pub fn linear_chirp(f_start: f64, f_end: f64, duration: f64, fs: u32) -> SpeechBuffer {
    let rate = (f_end - f_start) / duration;
    harmonic_voice(move |t| f_start + rate * t, &[0.5], duration, fs)
}

pub fn white_noise(std: f64, duration: f64, fs: u32, seed: u64) -> SpeechBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n_samples(duration, fs))
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect();
    SpeechBuffer::new(samples, fs).expect("finite noise")
}

fn add(a: &SpeechBuffer, b: &SpeechBuffer) -> SpeechBuffer {
    let samples = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| x + y)
        .collect();
    SpeechBuffer::new(samples, a.sample_rate()).expect("finite sum")
}

/// Sinusoidal-vibrato voice with additive white noise at a given SNR.
#[derive(Debug, Clone)]
pub struct VibratoVoice {
    pub mean_f0: f64,
    pub depth: f64,
    pub rate: f64,
    pub harmonics: Vec<f64>,
    pub snr_db: f64,
    pub duration: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for VibratoVoice {
    fn default() -> Self {
        Self {
            mean_f0: 150.0,
            depth: 20.0,
            rate: 5.0,
            harmonics: vec![0.3, 0.3, 0.3],
            snr_db: 20.0,
            duration: 2.0,
            sample_rate: 16000,
            seed: 7,
        }
    }
}

impl VibratoVoice {
    pub fn f0_at(&self, t: f64) -> f64 {
        self.mean_f0 + self.depth * (2.0 * PI * self.rate * t).sin()
    }

    pub fn render(&self) -> SpeechBuffer {
        let clean = harmonic_voice(
            |t| self.f0_at(t),
            &self.harmonics,
            self.duration,
            self.sample_rate,
        );
        if self.snr_db.is_infinite() {
            return clean;
        }
        // scale the realized noise, not its distribution, so the SNR is exact
        let noise = white_noise(1.0, self.duration, self.sample_rate, self.seed);
        let gain = clean.rms() / 10f64.powf(self.snr_db / 20.0) / noise.rms().max(1e-300);
        add(&clean, &noise.scaled(gain).expect("finite noise"))
    }

    /// Generator F0 at frame times `i * hop`.
    pub fn truth(&self, n_frames: usize, hop: f64) -> Vec<f64> {
        (0..n_frames).map(|i| self.f0_at(i as f64 * hop)).collect()
    }
}

/// Harmonics of a constant `f0` plus white noise high-passed at
/// `noise_cutoff`, scaled so its RMS is `noise_rms`.
pub fn mixed_excitation_voice(
    f0: f64,
    harmonics: &[f64],
    noise_cutoff: f64,
    noise_rms: f64,
    duration: f64,
    fs: u32,
    seed: u64,
) -> Result<SpeechBuffer> {
    let voiced = harmonic_voice(|_| f0, harmonics, duration, fs);
    if noise_rms == 0.0 {
        return Ok(voiced);
    }
    let noise = highpass_fir(&white_noise(1.0, duration, fs, seed), noise_cutoff)?;
    let gain = noise_rms / rms(noise.samples()).max(1e-300);
    Ok(add(&voiced, &noise.scaled(gain)?))
}

/// Voice used for copy-synthesis checks: three harmonics of 200 Hz with
/// noise above 700 Hz.
pub fn three_harmonic_test_voice(duration: f64, fs: u32, seed: u64) -> Result<SpeechBuffer> {
    mixed_excitation_voice(200.0, &[0.3, 0.2, 0.12], 700.0, 0.03, duration, fs, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vibrato_voice_has_requested_snr() {
        let v = VibratoVoice {
            duration: 0.5,
            ..Default::default()
        };
        let clean = VibratoVoice {
            snr_db: f64::INFINITY,
            ..v.clone()
        }
        .render();
        let noisy = v.render();
        let noise: Vec<f64> = noisy
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(a, b)| a - b)
            .collect();
        let snr = 20.0 * (clean.rms() / rms(&noise)).log10();
        assert!((snr - 20.0).abs() < 0.01);
    }

    #[test]
    fn noise_is_seeded() {
        assert_eq!(
            white_noise(1.0, 0.01, 16000, 4),
            white_noise(1.0, 0.01, 16000, 4)
        );
        assert_ne!(
            white_noise(1.0, 0.01, 16000, 4),
            white_noise(1.0, 0.01, 16000, 5)
        );
    }
}
