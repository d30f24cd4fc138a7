use serde::{Deserialize, Serialize};

use super::bandpass::band_filter;
use super::inst_freq::instantaneous_frequency;
use super::track::{F0Track, F0_CEIL, F0_FLOOR};
use crate::error::{shape, Error, Result};
use crate::signal::{resample_by_warp, SpeechBuffer, WarpDirection, WarpMap};

/// Settings of the time-warping refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub n_harmonics: usize,
    pub n_iterations: usize,
    /// Weight of harmonic `k` (index `k - 1`); nonnegative, summing to one.
    pub harmonic_weights: Vec<f64>,
    /// Stop once no frame moves by more than this (Hz).
    pub convergence_tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self::with_harmonics(3)
    }
}

impl RefineConfig {
    /// `n` harmonics weighted proportionally to `1/k`.
    pub fn with_harmonics(n: usize) -> Self {
        let raw: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
        let total: f64 = raw.iter().sum();
        Self {
            n_harmonics: n,
            n_iterations: 3,
            harmonic_weights: raw.into_iter().map(|w| w / total).collect(),
            convergence_tol: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_harmonics == 0 {
            return fail("n_harmonics must be at least 1".into());
        }
        if self.n_iterations == 0 {
            return fail("n_iterations must be at least 1".into());
        }
        if self.harmonic_weights.len() != self.n_harmonics {
            return fail(format!(
                "{} harmonic weights for {} harmonics",
                self.harmonic_weights.len(),
                self.n_harmonics
            ));
        }
        if self
            .harmonic_weights
            .iter()
            .any(|w| !(*w >= 0.0 && w.is_finite()))
        {
            return fail("harmonic weights must be nonnegative".into());
        }
        let sum: f64 = self.harmonic_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("harmonic weights sum to {sum}, expected 1"));
        }
        if !(self.convergence_tol >= 0.0) {
            return fail("convergence_tol must be nonnegative".into());
        }
        Ok(())
    }
}

/// Warp map that makes `track` constant at its geometric mean.
pub fn build_warp_map(track: &F0Track) -> Result<WarpMap> {
    build_warp_map_with_reference(track, track.geometric_mean())
}

/// Warp map with `dtau/dt = f0(t) / f0_ref`, integrated with the trapezoid
/// rule between frames (so each segment's slope is the mean of its two
/// frames). One extra segment past the last frame holds its value.
pub fn build_warp_map_with_reference(track: &F0Track, f0_ref: f64) -> Result<WarpMap> {
    if track.is_empty() {
        return Err(shape("cannot warp with an empty track"));
    }
    let hop = track.frame_hop();
    let v = track.values();
    let mut knots = Vec::with_capacity(v.len() + 1);
    let mut tau = 0.0;
    knots.push((0.0, 0.0));
    for i in 0..v.len() {
        let next = v.get(i + 1).copied().unwrap_or(v[i]);
        tau += 0.5 * (v[i] + next) / f0_ref * hop;
        knots.push(((i + 1) as f64 * hop, tau));
    }
    WarpMap::new(knots)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Harmonic bands this far (power ratio) below the strongest band of a
/// frame are treated as empty and left out of that frame's estimate.
pub const HARMONIC_POWER_GATE: f64 = 1e-3;

/// Per-frame fundamental estimate from harmonic `k` of a warped signal.
///
/// The band around `k * f0_ref` is isolated (window sized for `f0_ref`), its
/// instantaneous frequency is converted sample by sample to the original axis
/// through the local warp slope, the median is taken over the warped samples
/// belonging to each frame, and the result is divided by `k`.
pub fn measure_harmonic(
    warped: &SpeechBuffer,
    map: &WarpMap,
    f0_ref: f64,
    k: usize,
    n_frames: usize,
    frame_hop: f64,
) -> Result<Vec<f64>> {
    Ok(
        measure_harmonic_with_power(warped, map, f0_ref, k, n_frames, frame_hop)?
            .into_iter()
            .map(|(f, _)| f)
            .collect(),
    )
}

/// [`measure_harmonic`] plus the mean band power over each frame's samples.
pub fn measure_harmonic_with_power(
    warped: &SpeechBuffer,
    map: &WarpMap,
    f0_ref: f64,
    k: usize,
    n_frames: usize,
    frame_hop: f64,
) -> Result<Vec<(f64, f64)>> {
    let fs = warped.fs();
    let analytic = band_filter(warped, k as f64 * f0_ref, f0_ref)?;
    let inst = instantaneous_frequency(&analytic, fs)?;
    let last = inst.len() - 1;
    let half = (2.0 * fs / f0_ref).floor() as usize;
    let (valid_lo, valid_hi) = if last > 2 * half {
        (half, last - half)
    } else {
        (0, last)
    };
    let mut scratch = Vec::new();
    Ok((0..n_frames)
        .map(|i| {
            let t = i as f64 * frame_hop;
            let mut lo =
                ((map.forward(t - 0.5 * frame_hop) * fs).ceil().max(0.0) as usize).min(last);
            let mut hi =
                ((map.forward(t + 0.5 * frame_hop) * fs).floor().max(0.0) as usize).min(last);
            // slide edge frames onto samples the filter saw in full
            let width = hi.saturating_sub(lo);
            if lo < valid_lo {
                lo = valid_lo;
                hi = (valid_lo + width).min(valid_hi);
            }
            if hi > valid_hi {
                hi = valid_hi;
                lo = hi.saturating_sub(width).max(valid_lo);
            }
            scratch.clear();
            let mut power = 0.0;
            for m in lo..=hi {
                scratch.push(inst[m] * map.slope_at_tau(m as f64 / fs));
                power += analytic[m].norm_sqr();
            }
            if scratch.is_empty() {
                let m = ((map.forward(t) * fs).round() as usize).min(last);
                scratch.push(inst[m] * map.slope_at_tau(m as f64 / fs));
                power = analytic[m].norm_sqr();
            }
            let power = power / scratch.len() as f64;
            (median(&mut scratch) / k as f64, power)
        })
        .collect())
}

/// Outcome of a refinement run.
#[derive(Debug, Clone)]
pub struct RefineReport {
    pub track: F0Track,
    /// Largest per-frame change (Hz) of each completed iteration.
    pub max_changes: Vec<f64>,
    /// Frames whose estimate left `[F0_FLOOR, F0_CEIL]` on two consecutive
    /// iterations and were held at their previous value.
    pub flagged: Vec<bool>,
}

impl RefineReport {
    pub fn iterations(&self) -> usize {
        self.max_changes.len()
    }
}

pub fn refine_contf0(
    wave: &SpeechBuffer,
    initial: &F0Track,
    cfg: &RefineConfig,
) -> Result<F0Track> {
    refine_contf0_detailed(wave, initial, cfg).map(|r| r.track)
}

/// Iterative time-warping refinement of a continuous F0 track.
///
/// Each iteration warps the waveform so the current track becomes constant,
/// measures the instantaneous frequency of the first `n_harmonics` harmonics
/// on the warped axis, maps each back to an original-axis fundamental, and
/// combines them with `harmonic_weights`. Harmonics whose band would cross
/// the Nyquist frequency are dropped and the remaining weights renormalized.
pub fn refine_contf0_detailed(
    wave: &SpeechBuffer,
    initial: &F0Track,
    cfg: &RefineConfig,
) -> Result<RefineReport> {
    cfg.validate()?;
    let n = initial.len();
    let mut current = initial.clamped();
    let mut strikes = vec![0u8; n];
    let mut flagged = vec![false; n];
    let mut max_changes = Vec::new();

    for _ in 0..cfg.n_iterations {
        let f0_ref = current.geometric_mean();
        let map = build_warp_map_with_reference(&current, f0_ref)?;
        let warped = resample_by_warp(wave, &map, WarpDirection::Forward)?;

        let usable: Vec<(usize, f64)> = (1..=cfg.n_harmonics)
            .zip(cfg.harmonic_weights.iter().copied())
            .filter(|&(k, w)| w > 0.0 && (k as f64 + 1.0) * f0_ref < warped.nyquist())
            .collect();
        if usable.is_empty() {
            return Err(Error::Numerical(format!(
                "no usable harmonic band below Nyquist for reference {f0_ref:.1} Hz"
            )));
        }

        let bands = usable
            .iter()
            .map(|&(k, _)| {
                measure_harmonic_with_power(&warped, &map, f0_ref, k, n, current.frame_hop())
            })
            .collect::<Result<Vec<_>>>()?;
        let combined: Vec<f64> = (0..n)
            .map(|i| {
                let strongest = bands.iter().map(|b| b[i].1).fold(0.0, f64::max);
                let (mut acc, mut total) = (0.0, 0.0);
                for (b, &(_, w)) in bands.iter().zip(&usable) {
                    if b[i].1 >= HARMONIC_POWER_GATE * strongest {
                        acc += w * b[i].0;
                        total += w;
                    }
                }
                acc / total
            })
            .collect();

        let prev = current.values();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let v = combined[i];
            if !(v.is_finite() && (F0_FLOOR..=F0_CEIL).contains(&v)) {
                strikes[i] = strikes[i].saturating_add(1);
                if strikes[i] >= 2 {
                    flagged[i] = true;
                    next.push(prev[i]);
                } else if v.is_finite() {
                    next.push(v.clamp(F0_FLOOR, F0_CEIL));
                } else {
                    next.push(prev[i]);
                }
            } else {
                strikes[i] = 0;
                next.push(v);
            }
        }
        let change = next
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = current.with_values(next)?;
        max_changes.push(change);
        if change < cfg.convergence_tol {
            break;
        }
    }
    Ok(RefineReport {
        track: current,
        max_changes,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contf0::{estimate_baseline_contf0, PitchConfig};
    use crate::signal::{frame_count, resample_by_warp};
    use crate::synthetic::{harmonic_voice, VibratoVoice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FS: u32 = 16000;
    const HOP: f64 = 0.005;

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn pure_tone_ignores_empty_harmonic_bands() {
        let wave = crate::synthetic::tone(200.0, 0.4, 0.5, FS);
        let initial = F0Track::constant(195.0, frame_count(wave.len(), 80), HOP, true).unwrap();
        let refined = refine_contf0(&wave, &initial, &RefineConfig::default()).unwrap();
        for v in refined.values() {
            assert!((v - 200.0).abs() < 0.5, "{v}");
        }
    }

    #[test]
    fn default_weights_are_normalized_inverse_harmonic() {
        let cfg = RefineConfig::default();
        cfg.validate().unwrap();
        let w = &cfg.harmonic_weights;
        assert!((w[0] / w[1] - 2.0).abs() < 1e-12 && (w[0] / w[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RefineConfig::default();
        cfg.n_iterations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RefineConfig::default();
        cfg.harmonic_weights = vec![0.5, 0.5, 0.5];
        assert!(cfg.validate().is_err());
        let mut cfg = RefineConfig::default();
        cfg.harmonic_weights = vec![1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constant_track_gives_identity_map() {
        let t = F0Track::constant(180.0, 50, HOP, true).unwrap();
        let map = build_warp_map(&t).unwrap();
        for (a, b) in map.knots() {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn doubled_track_gives_slope_two() {
        let t = F0Track::constant(300.0, 50, HOP, true).unwrap();
        let map = build_warp_map_with_reference(&t, 150.0).unwrap();
        for (a, b) in map.knots() {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn warped_vibrato_is_flat() {
        let voice = VibratoVoice {
            harmonics: vec![0.5],
            snr_db: f64::INFINITY,
            duration: 1.0,
            ..Default::default()
        };
        let wave = voice.render();
        let n = frame_count(wave.len(), 80);
        let track = F0Track::new(voice.truth(n, HOP), HOP, vec![true; n]).unwrap();
        let map = build_warp_map(&track).unwrap();
        let warped = resample_by_warp(&wave, &map, WarpDirection::Forward).unwrap();
        let measured = estimate_baseline_contf0(&warped, &PitchConfig::default()).unwrap();
        let f0_ref = track.geometric_mean();
        let m = measured.values();
        for v in &m[10..m.len() - 10] {
            assert!((v - f0_ref).abs() < 1.0, "{v} vs {f0_ref}");
        }
    }

    #[test]
    fn exact_track_is_a_fixed_point() {
        let wave = harmonic_voice(|_| 200.0, &[0.3, 0.3, 0.3], 1.0, FS);
        let n = frame_count(wave.len(), 80);
        let initial = F0Track::constant(200.0, n, HOP, true).unwrap();
        for iterations in [1, 3] {
            let cfg = RefineConfig {
                n_iterations: iterations,
                ..Default::default()
            };
            let out = refine_contf0(&wave, &initial, &cfg).unwrap();
            for v in out.values() {
                assert!((v - 200.0).abs() < 0.5, "{v}");
            }
        }
    }

    #[test]
    fn single_weight_reduces_to_first_harmonic() {
        let voice = VibratoVoice {
            duration: 0.6,
            ..Default::default()
        };
        let wave = voice.render();
        let n = frame_count(wave.len(), 80);
        let initial = F0Track::new(voice.truth(n, HOP), HOP, vec![true; n])
            .unwrap()
            .with_values(voice.truth(n, HOP).iter().map(|v| v + 3.0).collect())
            .unwrap();
        let cfg = RefineConfig {
            n_iterations: 1,
            harmonic_weights: vec![1.0, 0.0, 0.0],
            ..Default::default()
        };
        let refined = refine_contf0(&wave, &initial, &cfg).unwrap();

        let f0_ref = initial.geometric_mean();
        let map = build_warp_map_with_reference(&initial, f0_ref).unwrap();
        let warped = resample_by_warp(&wave, &map, WarpDirection::Forward).unwrap();
        let direct = measure_harmonic(&warped, &map, f0_ref, 1, n, HOP).unwrap();
        for (a, b) in refined.values().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_vibrato_track_improves() {
        let voice = VibratoVoice::default();
        let wave = voice.render();
        let n = frame_count(wave.len(), 80);
        let truth = voice.truth(n, HOP);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let perturbed: Vec<f64> = truth
            .iter()
            .map(|v| v + rng.random_range(-10.0..10.0))
            .collect();
        let initial = F0Track::new(perturbed.clone(), HOP, vec![true; n]).unwrap();
        let report = refine_contf0_detailed(&wave, &initial, &RefineConfig::default()).unwrap();
        let before = rmse(&perturbed, &truth);
        let after = rmse(report.track.values(), &truth);
        assert!(after <= 0.5 * before, "before {before}, after {after}");
    }

    #[test]
    fn changes_shrink_on_stationary_signal() {
        let wave = harmonic_voice(|_| 160.0, &[0.3, 0.2, 0.1], 1.0, FS);
        let n = frame_count(wave.len(), 80);
        let initial = F0Track::constant(166.0, n, HOP, true).unwrap();
        let cfg = RefineConfig {
            convergence_tol: 0.0,
            ..Default::default()
        };
        let report = refine_contf0_detailed(&wave, &initial, &cfg).unwrap();
        assert_eq!(report.iterations(), 3);
        for w in report.max_changes.windows(2) {
            assert!(w[1] <= w[0], "{:?}", report.max_changes);
        }
    }

    #[test]
    fn output_stays_continuous_on_noise() {
        let wave = crate::synthetic::white_noise(0.1, 0.5, FS, 2);
        let initial = estimate_baseline_contf0(&wave, &PitchConfig::default()).unwrap();
        let out = refine_contf0(&wave, &initial, &RefineConfig::default()).unwrap();
        assert!(out
            .values()
            .iter()
            .all(|&v| (F0_FLOOR..=F0_CEIL).contains(&v)));
    }

    proptest::proptest! {
        #[test]
        fn warp_map_is_monotone(values in proptest::collection::vec(1.0f64..2000.0, 1..60)) {
            let n = values.len();
            let track = F0Track::new(values, HOP, vec![true; n]).unwrap();
            let map = build_warp_map(&track).unwrap();
            let knots: Vec<_> = map.knots().collect();
            for w in knots.windows(2) {
                proptest::prop_assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
            }
        }
    }
}
