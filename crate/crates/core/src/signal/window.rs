use std::f64::consts::PI;

use super::check_band_frequency;
use crate::error::Result;

/// Four-term Nuttall coefficients (continuous first derivative variant).
pub const NUTTALL_COEFFS: [f64; 4] = [0.338946, 0.481973, 0.161054, 0.018027];

/// Nuttall taper evaluated at time offset `tau` (seconds) for a band centred
/// at `f_c`. The support is `|tau| <= 2 / f_c`; outside it the value is 0.
pub fn nuttall_value(tau: f64, f_c: f64) -> f64 {
    if tau.abs() > 2.0 / f_c {
        return 0.0;
    }
    let x = PI * f_c * tau;
    let [a0, a1, a2, a3] = NUTTALL_COEFFS;
    a0 + a1 * (0.5 * x).cos() + a2 * x.cos() + a3 * (1.5 * x).cos()
}

/// Nuttall window sampled at `sample_rate` over `tau` in `[-2/f_c, 2/f_c]`.
///
/// Returns `2M + 1` samples with the centre sample at index `M`.
pub fn nuttall_window(f_c: f64, sample_rate: f64) -> Result<Vec<f64>> {
    check_band_frequency(f_c, sample_rate, "window frequency")?;
    let half = (2.0 * sample_rate / f_c).floor() as i64;
    Ok((-half..=half)
        .map(|n| nuttall_value(n as f64 / sample_rate, f_c))
        .collect())
}

/// Periodic Hann window; constant-overlap-add at 50% overlap.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Kaiser window shape at normalized position `u` in `[-1, 1]`.
pub fn kaiser(u: f64, beta: f64) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - u * u).sqrt()) / bessel_i0(beta)
}

fn bessel_i0(x: f64) -> f64 {
    // power series; converges quickly for the beta range used here
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nuttall_peak_is_one() {
        assert!((nuttall_value(0.0, 200.0) - 1.0).abs() < 1e-15);
        let w = nuttall_window(200.0, 16000.0).unwrap();
        let mid = w.len() / 2;
        assert!((w[mid] - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&v| v <= w[mid]));
    }

    #[test]
    fn nuttall_is_even_and_tapers() {
        let w = nuttall_window(150.0, 16000.0).unwrap();
        let n = w.len();
        for i in 0..n {
            assert!((w[i] - w[n - 1 - i]).abs() < 1e-15);
        }
        // endpoints approach zero at the edge of the four-period support
        assert!(nuttall_value(2.0 / 150.0, 150.0).abs() < 1e-12);
        assert!(w[0] < 1e-6);
    }

    #[test]
    fn nuttall_at_one_period() {
        // direct evaluation with real cosines: a0 + a1 cos(pi/2) + a2 cos(pi) + a3 cos(3pi/2)
        let expected = 0.338946
            + 0.481973 * (PI / 2.0).cos()
            + 0.161054 * PI.cos()
            + 0.018027 * (1.5 * PI).cos();
        assert!((expected - 0.177892).abs() < 1e-12);
        assert!((nuttall_value(1.0 / 250.0, 250.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn nuttall_rejects_bad_frequency() {
        assert!(nuttall_window(0.0, 16000.0).is_err());
        assert!(nuttall_window(8000.0, 16000.0).is_err());
        assert!(nuttall_window(-5.0, 16000.0).is_err());
    }

    #[test]
    fn hann_cola_at_half_overlap() {
        let w = hann_periodic(64);
        for n in 0..32 {
            assert!((w[n] + w[n + 32] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kaiser_shape() {
        assert!((kaiser(0.0, 8.0) - 1.0).abs() < 1e-15);
        assert!(kaiser(1.0, 8.0) < 0.01);
        assert_eq!(kaiser(1.5, 8.0), 0.0);
        // I0(1) = 1.2660658777520082
        assert!((bessel_i0(1.0) - 1.2660658777520082).abs() < 1e-14);
    }
}
