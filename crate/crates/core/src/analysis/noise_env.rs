use crate::error::Result;
use crate::signal::{convolve_centered, highpass_fir, SpeechBuffer};

/// Envelope points stored per frame.
pub const NOISE_ENV_POINTS: usize = 4;

/// Cutoff of the amplitude-envelope smoother (Hz).
const SMOOTHING_HZ: f64 = 50.0;

/// Time of envelope point `j` of frame `i`, in hops from the first frame
/// centre. Points split the frame's hop-long cell into equal parts.
pub fn noise_env_point_time(frame: usize, point: usize) -> f64 {
    frame as f64 - 0.5 + (point as f64 + 0.5) / NOISE_ENV_POINTS as f64
}

/// Intra-frame amplitude shape of the high band.
///
/// The waveform is high-passed at the utterance's median MVF, rectified,
/// smoothed with a Hann kernel whose first null is at 50 Hz and sampled at
/// [`NOISE_ENV_POINTS`] instants per frame. Each frame's points are scaled to
/// unit mean square, so overall level stays with the spectral envelope; a
/// frame with no high-band energy gets a flat shape.
pub fn estimate_noise_envelope(
    wave: &SpeechBuffer,
    mvf: &[f64],
    frame_hop: f64,
) -> Result<Vec<[f64; NOISE_ENV_POINTS]>> {
    let fs = wave.fs();
    let mut sorted = mvf.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let cutoff = sorted
        .get(sorted.len() / 2)
        .copied()
        .unwrap_or(wave.nyquist() / 2.0)
        .clamp(0.01 * fs, 0.45 * fs);
    let high = highpass_fir(wave, cutoff)?;
    let rectified: Vec<f64> = high.samples().iter().map(|v| v.abs()).collect();
    let half = (fs / SMOOTHING_HZ).round() as usize;
    let kernel: Vec<f64> = {
        let raw: Vec<f64> = (0..=2 * half)
            .map(|n| 0.5 - 0.5 * (std::f64::consts::PI * n as f64 / half as f64).cos())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    };
    let smooth = convolve_centered(&rectified, &kernel);
    let last = smooth.len().saturating_sub(1);
    let hop = frame_hop * fs;
    Ok((0..mvf.len())
        .map(|i| {
            let mut pts = [0.0; NOISE_ENV_POINTS];
            for (j, p) in pts.iter_mut().enumerate() {
                let n = (noise_env_point_time(i, j) * hop).round().max(0.0) as usize;
                *p = smooth.get(n.min(last)).copied().unwrap_or(0.0);
            }
            let ms = pts.iter().map(|v| v * v).sum::<f64>() / NOISE_ENV_POINTS as f64;
            if ms > 1e-24 {
                pts.iter_mut().for_each(|v| *v /= ms.sqrt());
            } else {
                pts = [1.0; NOISE_ENV_POINTS];
            }
            pts
        })
        .collect())
}
