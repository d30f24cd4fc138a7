use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn fft_convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let full = x.len() + h.len() - 1;
    let n = next_pow2(full);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    a[..x.len()].copy_from_slice(x);
    b[..h.len()].copy_from_slice(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.truncate(full);
    a.iter_mut().for_each(|v| *v *= scale);
    a
}

/// Convolution with a zero-phase kernel: `h` has odd length with its centre
/// tap at `h.len() / 2`; the output is aligned with and as long as `x`.
/// Samples outside `x` are treated as zero.
pub fn convolve_centered_complex(x: &[f64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return vec![Complex64::new(0.0, 0.0); x.len()];
    }
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let full = fft_convolve(&xc, h);
    let delay = h.len() / 2;
    full[delay..delay + x.len()].to_vec()
}

/// Real-valued counterpart of [`convolve_centered_complex`].
pub fn convolve_centered(x: &[f64], h: &[f64]) -> Vec<f64> {
    let hc: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    convolve_centered_complex(x, &hc)
        .into_iter()
        .map(|v| v.re)
        .collect()
}

/// One-sided power spectrum `|X[k]|^2`, `k = 0..=nfft/2`, of `frame` zero-padded
/// (or truncated) to `nfft` samples.
pub fn power_spectrum(frame: &[f64], nfft: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..nfft)
        .map(|i| Complex64::new(frame.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf[..=nfft / 2].iter().map(|c| c.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64], h: &[f64]) -> Vec<f64> {
        let m = (h.len() / 2) as isize;
        (0..x.len() as isize)
            .map(|i| {
                let mut acc = 0.0;
                for (j, hv) in h.iter().enumerate() {
                    let k = i + m - j as isize;
                    if k >= 0 && (k as usize) < x.len() {
                        acc += hv * x[k as usize];
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_direct_convolution() {
        let x: Vec<f64> = (0..97)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0)
            .collect();
        let h = [0.1, -0.4, 1.0, 0.3, -0.2];
        let got = convolve_centered(&x, &h);
        let want = direct(&x, &h);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_spectrum_of_impulse_is_flat() {
        let p = power_spectrum(&[1.0], 16);
        assert_eq!(p.len(), 9);
        assert!(p.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
