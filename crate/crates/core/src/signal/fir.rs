use std::f64::consts::PI;

use super::{check_band_frequency, convolve_centered, kaiser, SpeechBuffer};
use crate::error::Result;

/// Target stopband attenuation of the high-pass design (dB).
const STOPBAND_DB: f64 = 70.0;
/// Transition band spans `[0.8, 1.2] * cutoff`.
const TRANSITION_FRACTION: f64 = 0.4;

/// Linear-phase (type I) Kaiser-windowed high-pass kernel with its centre tap
/// at `len / 2`.
pub fn design_highpass(cutoff: f64, sample_rate: f64) -> Result<Vec<f64>> {
    check_band_frequency(cutoff, sample_rate, "high-pass cutoff")?;
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let transition = 2.0 * PI * TRANSITION_FRACTION * cutoff / sample_rate;
    let order = ((STOPBAND_DB - 8.0) / (2.285 * transition)).ceil() as usize;
    let half = order.div_ceil(2).max(1);
    let fc = cutoff / sample_rate;

    let mut lowpass: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let m = i as f64 - half as f64;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m).sin() / (PI * m)
            };
            sinc * kaiser(m / half as f64, beta)
        })
        .collect();
    let dc: f64 = lowpass.iter().sum();
    lowpass.iter_mut().for_each(|v| *v /= dc);

    let mut h: Vec<f64> = lowpass.iter().map(|v| -v).collect();
    h[half] += 1.0;
    Ok(h)
}

/// High-pass filter `signal` at `cutoff` Hz with a zero-delay linear-phase FIR.
/// The signal is zero-extended at both ends.
pub fn highpass_fir(signal: &SpeechBuffer, cutoff: f64) -> Result<SpeechBuffer> {
    let h = design_highpass(cutoff, signal.fs())?;
    SpeechBuffer::new(
        convolve_centered(signal.samples(), &h),
        signal.sample_rate(),
    )
}

#[cfg(test)]
mod tests {
    use super::super::rms;
    use super::*;

    const FS: u32 = 16000;

    fn tone(freq: f64, len: usize) -> SpeechBuffer {
        SpeechBuffer::new(
            (0..len)
                .map(|n| (2.0 * PI * freq * n as f64 / FS as f64).sin())
                .collect(),
            FS,
        )
        .unwrap()
    }

    fn interior_rms(x: &SpeechBuffer, margin: usize) -> f64 {
        rms(&x.samples()[margin..x.len() - margin])
    }

    #[test]
    fn dc_is_removed() {
        for cutoff in [300.0, 1000.0, 2500.0] {
            let h = design_highpass(cutoff, FS as f64).unwrap();
            let x = SpeechBuffer::new(vec![1.0; 16000 + h.len()], FS).unwrap();
            let y = highpass_fir(&x, cutoff).unwrap();
            assert!(interior_rms(&y, h.len() / 2 + 1) < 1e-3, "cutoff {cutoff}");
        }
    }

    #[test]
    fn passband_and_stopband_tones() {
        for cutoff in [250.0, 700.0, 2000.0, 3000.0] {
            let h = design_highpass(cutoff, FS as f64).unwrap();
            let len = 16000 + 2 * h.len();
            let margin = h.len() / 2 + 1;

            let x = tone(2.0 * cutoff, len);
            let y = highpass_fir(&x, cutoff).unwrap();
            let gain_db = 20.0 * (interior_rms(&y, margin) / interior_rms(&x, margin)).log10();
            assert!(gain_db.abs() < 1.0, "cutoff {cutoff}: {gain_db} dB");

            let x = tone(0.5 * cutoff, len);
            let y = highpass_fir(&x, cutoff).unwrap();
            let gain_db = 20.0 * (interior_rms(&y, margin) / interior_rms(&x, margin)).log10();
            assert!(gain_db < -60.0, "cutoff {cutoff}: {gain_db} dB");
        }
    }

    #[test]
    fn band_edges_meet_response_mask() {
        let cutoff = 1000.0;
        let h = design_highpass(cutoff, FS as f64).unwrap();
        let response = |f: f64| {
            let w = 2.0 * PI * f / FS as f64;
            let half = (h.len() / 2) as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in h.iter().enumerate() {
                let m = i as f64 - half;
                re += v * (w * m).cos();
                im -= v * (w * m).sin();
            }
            20.0 * (re * re + im * im).sqrt().log10()
        };
        for f in [0.0, 200.0, 500.0, 790.0, 800.0] {
            assert!(response(f) <= -60.0, "{f} Hz: {}", response(f));
        }
        for f in [1200.0, 1500.0, 3000.0, 7000.0] {
            assert!(response(f).abs() <= 1.0, "{f} Hz: {}", response(f));
        }
    }

    #[test]
    fn rejects_cutoff_outside_band() {
        assert!(design_highpass(0.0, 16000.0).is_err());
        assert!(design_highpass(9000.0, 16000.0).is_err());
    }
}
