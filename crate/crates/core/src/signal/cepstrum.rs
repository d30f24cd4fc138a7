use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Real cepstrum of an even log spectrum given by its `nfft / 2 + 1`
/// non-negative-frequency bins. Returns `nfft` quefrency samples.
pub fn real_cepstrum(log_half: &[f64]) -> Vec<f64> {
    let half = log_half.len() - 1;
    let nfft = 2 * half;
    let mut buf: Vec<Complex64> = (0..nfft)
        .map(|i| Complex64::new(log_half[if i <= half { i } else { nfft - i }], 0.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(nfft).process(&mut buf);
    buf.iter().map(|c| c.re / nfft as f64).collect()
}

fn half_spectrum(cepstrum: Vec<Complex64>) -> Vec<Complex64> {
    let nfft = cepstrum.len();
    let mut buf = cepstrum;
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf.truncate(nfft / 2 + 1);
    buf
}

/// Smooth an even log spectrum by weighting its cepstrum with `lifter(q)`,
/// where `q` is the quefrency in samples (`lifter(0)` should be 1).
pub fn lifter_log_spectrum(log_half: &[f64], lifter: impl Fn(usize) -> f64) -> Vec<f64> {
    if log_half.len() < 2 {
        return log_half.to_vec();
    }
    let c = real_cepstrum(log_half);
    let nfft = c.len();
    let weighted: Vec<Complex64> = c
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::new(v * lifter(i.min(nfft - i)), 0.0))
        .collect();
    half_spectrum(weighted).into_iter().map(|z| z.re).collect()
}

/// Phase (radians, unwrapped) of the minimum-phase filter whose natural-log
/// magnitude is `log_half`, on the same bins.
pub fn minimum_phase(log_half: &[f64]) -> Vec<f64> {
    if log_half.len() < 2 {
        return vec![0.0; log_half.len()];
    }
    let c = real_cepstrum(log_half);
    let nfft = c.len();
    let folded: Vec<Complex64> = (0..nfft)
        .map(|i| {
            let v = match i {
                0 => c[0],
                _ if i < nfft / 2 => 2.0 * c[i],
                _ if i == nfft / 2 => c[i],
                _ => 0.0,
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    half_spectrum(folded).into_iter().map(|z| z.im).collect()
}
