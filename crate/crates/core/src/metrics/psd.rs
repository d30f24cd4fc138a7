use crate::contf0::F0Track;
use crate::error::{Error, Result};
use crate::signal::{hann_periodic, next_pow2, power_spectrum};

/// Shortest track [`track_psd`] accepts.
pub const MIN_PSD_FRAMES: usize = 32;

/// Hann-windowed periodogram of the mean-removed F0 trajectory, as
/// `(frequency Hz, power Hz^2/Hz)` pairs from DC to half the frame rate.
pub fn track_psd(track: &F0Track) -> Result<Vec<(f64, f64)>> {
    let n = track.len();
    if n < MIN_PSD_FRAMES {
        return Err(Error::Degenerate(format!(
            "track has {n} frames, the periodogram needs {MIN_PSD_FRAMES}"
        )));
    }
    let rate = 1.0 / track.frame_hop();
    let values = track.values();
    let mean = values.iter().sum::<f64>() / n as f64;
    let w = hann_periodic(n);
    let x: Vec<f64> = values.iter().zip(&w).map(|(v, w)| (v - mean) * w).collect();
    let norm = rate * w.iter().map(|v| v * v).sum::<f64>();
    let nfft = next_pow2(n);
    Ok(power_spectrum(&x, nfft)
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || 2 * k == nfft { 1.0 } else { 2.0 };
            (k as f64 * rate / nfft as f64, one_sided * p / norm)
        })
        .collect())
}
