use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples with `a^2 + b^2` below this are treated as phase-less.
pub const IF_POWER_FLOOR: f64 = 1e-12;

/// Instantaneous frequency (Hz) of a complex narrowband signal `a + i b`.
///
/// Flanagan's phase derivative `(a b' - b a') / (a^2 + b^2)` is evaluated in
/// its discrete cross-product form over the neighbours `n - 1` and `n + 1`:
/// the numerator `a[n-1] b[n+1] - b[n-1] a[n+1]` and the matching in-phase
/// term give the phase advance across two samples via `atan2`. This is exact
/// for any complex exponential with a positive real envelope. The end samples
/// use one-sided pairs. Samples whose power (or a neighbour's) is below
/// [`IF_POWER_FLOOR`] are filled by linear interpolation from valid ones.
pub fn instantaneous_frequency(analytic: &[Complex64], sample_rate: f64) -> Result<Vec<f64>> {
    let n = analytic.len();
    if n < 2 {
        return Err(Error::Degenerate(
            "instantaneous frequency needs at least two samples".into(),
        ));
    }
    let valid = |i: usize| analytic[i].norm_sqr() >= IF_POWER_FLOOR;
    let advance = |lo: usize, hi: usize| {
        let (a0, b0) = (analytic[lo].re, analytic[lo].im);
        let (a1, b1) = (analytic[hi].re, analytic[hi].im);
        let cross = a0 * b1 - b0 * a1;
        let dot = a0 * a1 + b0 * b1;
        cross.atan2(dot) / (hi - lo) as f64
    };
    let to_hz = sample_rate / (2.0 * PI);

    let raw: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let (lo, hi) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (valid(i) && valid(lo) && valid(hi)).then(|| advance(lo, hi) * to_hz)
        })
        .collect();

    let known: Vec<bool> = raw.iter().map(Option::is_some).collect();
    let values: Vec<f64> = raw.iter().map(|v| v.unwrap_or(0.0)).collect();
    super::track::fill_gaps(&values, &known).ok_or_else(|| {
        Error::Degenerate("analytic signal has no sample above the power floor".into())
    })
}
