use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::signal::{
    check_band_frequency, convolve_centered_complex, nuttall_window, SpeechBuffer,
};

/// Analytic band filter: a Nuttall window sized for `bandwidth` (support
/// `4 / bandwidth` seconds) modulated by `exp(i 2 pi center tau)`.
///
/// Output is zero-delay and scaled so a real cosine of amplitude `A` at
/// `center` yields a complex exponential of magnitude `A`.
pub fn band_filter(signal: &SpeechBuffer, center: f64, bandwidth: f64) -> Result<Vec<Complex64>> {
    let fs = signal.fs();
    check_band_frequency(center, fs, "band centre")?;
    let window = nuttall_window(bandwidth, fs)?;
    let half = (window.len() / 2) as f64;
    let gain = 2.0 / window.iter().sum::<f64>();
    let w = 2.0 * PI * center / fs;
    let kernel: Vec<Complex64> = window
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::from_polar(gain * v, w * (i as f64 - half)))
        .collect();
    Ok(convolve_centered_complex(signal.samples(), &kernel))
}

/// Isolate the component near `f_c` with a band whose window is sized for
/// `f_c` itself.
pub fn bandpass_harmonic(warped: &SpeechBuffer, f_c: f64) -> Result<Vec<Complex64>> {
    band_filter(warped, f_c, f_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::tone;

    const FS: u32 = 16000;

    #[test]
    fn tone_at_centre_passes_with_steady_phase() {
        let f = 180.0;
        let x = tone(f, 0.7, 1.0, FS);
        let z = bandpass_harmonic(&x, f).unwrap();
        let edge = (2.0 * FS as f64 / f) as usize + 1;
        let step = 2.0 * PI * f / FS as f64;
        for n in edge..z.len() - edge {
            assert!((z[n].norm() - 0.7).abs() < 1e-3, "{}", z[n].norm());
            let adv = (z[n + 1] * z[n].conj()).arg();
            assert!((adv - step).abs() < 1e-6);
        }
    }

    #[test]
    fn third_harmonic_is_rejected() {
        let f = 150.0;
        let x = tone(3.0 * f, 1.0, 1.0, FS);
        let z = bandpass_harmonic(&x, f).unwrap();
        let edge = (2.0 * FS as f64 / f) as usize + 1;
        let out_rms = (z[edge..z.len() - edge]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            / (z.len() - 2 * edge) as f64)
            .sqrt();
        assert!(out_rms < 0.01 * x.rms(), "{out_rms}");
    }

    #[test]
    fn zero_in_zero_out() {
        let x = SpeechBuffer::silence(4000, FS).unwrap();
        assert!(bandpass_harmonic(&x, 200.0)
            .unwrap()
            .iter()
            .all(|c| c.norm() == 0.0));
    }

    #[test]
    fn rejects_out_of_band_centre() {
        let x = SpeechBuffer::silence(4000, FS).unwrap();
        assert!(bandpass_harmonic(&x, 0.0).is_err());
        assert!(bandpass_harmonic(&x, 8000.0).is_err());
    }
}
