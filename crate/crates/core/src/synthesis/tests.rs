use super::*;
use crate::analysis::NOISE_ENV_POINTS;
use crate::contf0::F0Track;
use crate::signal::power_spectrum;

const FS: u32 = 16000;
const HOP: f64 = 0.005;

fn flat_track(
    f0: f64,
    mvf: f64,
    voiced: bool,
    n: usize,
    noise_gate: Option<f64>,
) -> ParameterTrack {
    let f0 = F0Track::constant(f0, n, HOP, voiced).unwrap();
    let env = vec![vec![0.0; 257]; n];
    let gate = noise_gate.map(|g| vec![[g; NOISE_ENV_POINTS]; n]);
    ParameterTrack::new(f0, vec![mvf; n], env, gate, FS).unwrap()
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Fraction of the energy of `x` below `freq`, from a Hann-windowed periodogram.
fn fraction_below(x: &[f64], freq: f64) -> f64 {
    let nfft = next_pow2(x.len());
    let w = hann_periodic(x.len());
    let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    let p = power_spectrum(&xw, nfft);
    let cut = (freq / FS as f64 * nfft as f64) as usize;
    p[..cut].iter().sum::<f64>() / p.iter().sum::<f64>()
}

#[test]
fn harmonic_count_follows_rounding_rule() {
    assert_eq!(harmonic_count(200.0, 4000.0, true).unwrap(), 19);
    assert_eq!(harmonic_count(200.0, 4000.0, false).unwrap(), 0);
    assert_eq!(harmonic_count(200.0, 100.0, true).unwrap(), 0);
    assert_eq!(harmonic_count(200.0, 500.0, true).unwrap(), 2);
    assert_eq!(harmonic_count(200.0, 450.0, true).unwrap(), 1);
    assert!(harmonic_count(0.0, 450.0, true).is_err());
    assert!(harmonic_count(-5.0, 450.0, false).is_err());
    assert!(harmonic_count(100.0, 0.0, true).is_err());
}

#[test]
fn single_harmonic_frame_is_windowed_cosine() {
    let frame = HarmonicFrame::new(100.0, vec![1.0], vec![0.0]).unwrap();
    let out = synth_voiced_frame(&frame, 160, FS).unwrap();
    let w = hann_periodic(160);
    for (t, v) in out.iter().enumerate() {
        let expect = (2.0 * PI * 100.0 * t as f64 / FS as f64).cos() * w[t];
        assert!((v - expect).abs() < 1e-12);
    }
}

#[test]
fn empty_frame_is_silent() {
    let frame = HarmonicFrame::new(100.0, vec![], vec![]).unwrap();
    assert!(synth_voiced_frame(&frame, 160, FS)
        .unwrap()
        .iter()
        .all(|v| *v == 0.0));
}

#[test]
fn equal_amplitudes_give_equal_peaks() {
    // 250 Hz falls exactly on bin 64 of a 4096-point transform at 16 kHz
    let frame = HarmonicFrame::new(250.0, vec![0.3; 3], vec![0.1, 1.0, -2.0]).unwrap();
    let out = synth_voiced_frame(&frame, 4096, FS).unwrap();
    let p = power_spectrum(&out, 4096);
    let peaks: Vec<f64> = [64, 128, 192]
        .iter()
        .map(|&b| 10.0 * p[b].log10())
        .collect();
    for db in &peaks {
        assert!((db - peaks[0]).abs() < 0.5);
    }
    let strongest_other = p
        .iter()
        .enumerate()
        .filter(|(b, _)| {
            [64usize, 128, 192]
                .iter()
                .all(|c| (*b as isize - *c as isize).abs() > 1)
        })
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    assert!(10.0 * (p[64] / strongest_other).log10() > 40.0);
}

#[test]
fn voiced_frame_is_linear_in_amplitudes() {
    let a = HarmonicFrame::new(130.0, vec![0.2, 0.1, 0.05], vec![0.3, -1.0, 2.0]).unwrap();
    let b = HarmonicFrame::new(130.0, vec![0.4, 0.2, 0.1], vec![0.3, -1.0, 2.0]).unwrap();
    let x = synth_voiced_frame(&a, 300, FS).unwrap();
    let y = synth_voiced_frame(&b, 300, FS).unwrap();
    for (u, v) in x.iter().zip(&y) {
        assert!((2.0 * u - v).abs() < 1e-12);
    }
}

#[test]
fn aliasing_harmonics_are_rejected() {
    let frame = HarmonicFrame::new(4000.0, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
    assert!(synth_voiced_frame(&frame, 160, FS).is_err());
}

#[test]
fn frame_rejects_bad_parameters() {
    assert!(HarmonicFrame::new(100.0, vec![-1.0], vec![0.0]).is_err());
    assert!(HarmonicFrame::new(100.0, vec![1.0], vec![]).is_err());
    assert!(HarmonicFrame::new(0.0, vec![], vec![]).is_err());
    let f = HarmonicFrame::new(100.0, vec![1.0], vec![3.0 * PI]).unwrap();
    assert!((f.phases()[0] - PI).abs() < 1e-12);
}

#[test]
fn gated_noise_frame_is_zero() {
    let env = vec![0.0; 257];
    let out = synth_noise_frame(&env, 2000.0, Some(&[0.0; 160]), 160, FS, 1).unwrap();
    assert!(out.iter().all(|v| *v == 0.0));
}

#[test]
fn noise_frame_stays_above_cutoff() {
    let env = vec![0.0; 257];
    let out = synth_noise_frame(&env, 2000.0, None, 4096, FS, 3).unwrap();
    let nfft = 4096;
    let p = power_spectrum(&out, nfft);
    let bin = |f: f64| (f / FS as f64 * nfft as f64) as usize;
    let below: f64 = p[..bin(1600.0)].iter().sum();
    let above: f64 = p[bin(2400.0)..].iter().sum();
    assert!(10.0 * (above / below).log10() >= 40.0);
}

#[test]
fn noise_frames_are_seeded() {
    let env = vec![-1.0; 257];
    let a = synth_noise_frame(&env, 1000.0, None, 160, FS, 9).unwrap();
    let b = synth_noise_frame(&env, 1000.0, None, 160, FS, 9).unwrap();
    let c = synth_noise_frame(&env, 1000.0, None, 160, FS, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn noise_level_follows_envelope() {
    // envelope level ln(0.1) + bias means white noise of standard deviation 0.1
    let level = 0.1f64.ln() + NOISE_LOG_BIAS;
    let n = 400;
    let f0 = F0Track::constant(100.0, n, HOP, false).unwrap();
    let track =
        ParameterTrack::new(f0, vec![200.0; n], vec![vec![level; 257]; n], None, FS).unwrap();
    let out = synthesize(&track, 5).unwrap();
    let expected = 0.1 * ((8000.0 - 200.0) / 8000.0f64).sqrt();
    let rms = crate::signal::rms(out.samples());
    assert!(
        (20.0 * (rms / expected).log10()).abs() < 0.5,
        "{rms} vs {expected}"
    );
}

#[test]
fn steady_single_harmonic_is_a_pure_tone() {
    let track = flat_track(200.0, 450.0, true, 400, Some(0.0));
    let out = synthesize(&track, 42).unwrap();
    assert_eq!(out.len(), 399 * 80 + 1);
    let x = out.samples();
    let nfft = 1 << 15;
    let w = hann_periodic(x.len());
    let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    let p = power_spectrum(&xw, nfft);
    let (peak, pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    let freq = peak as f64 * FS as f64 / nfft as f64;
    assert!((freq - 200.0).abs() < 1.0, "{freq}");
    let lobe = 4 * nfft / x.len();
    for (b, v) in p.iter().enumerate() {
        if (b as isize - peak as isize).unsigned_abs() > lobe {
            assert!(10.0 * (pmax / v.max(1e-300)).log10() >= 40.0, "bin {b}");
        }
    }
}

#[test]
fn constant_f0_output_matches_steady_sinusoid() {
    let track = flat_track(180.0, 400.0, true, 100, Some(0.0));
    let out = synthesize(&track, 1).unwrap();
    let amp = 2.0 * (180.0 / FS as f64).sqrt();
    let x = out.samples();
    // fit the phase from the first sample pair, then compare everywhere
    let w = 2.0 * PI * 180.0 / FS as f64;
    let phase = (-(x[1] - x[0] * w.cos()) / w.sin()).atan2(x[0]);
    for (t, v) in x.iter().enumerate() {
        let expect = amp * (w * t as f64 + phase).cos();
        assert!((v - expect).abs() < 1e-9, "sample {t}");
    }
    // no boundary jumps larger than the in-frame steps
    let steps: Vec<f64> = x.windows(2).map(|d| (d[1] - d[0]).abs()).collect();
    let max_step = steps.iter().cloned().fold(0.0, f64::max);
    for b in (80..x.len() - 1).step_by(80) {
        assert!(steps[b - 1] <= max_step);
    }
}

#[test]
fn unvoiced_track_is_noise_only() {
    let track = flat_track(120.0, 1000.0, false, 200, None);
    let parts = synthesize_parts(&track, 3).unwrap();
    assert_eq!(energy(parts.voiced.samples()), 0.0);
    assert!(energy(parts.noise.samples()) > 0.0);
    assert!(fraction_below(parts.noise.samples(), 800.0) < 1e-4);
}

#[test]
fn paths_split_at_the_voicing_boundary() {
    let track = flat_track(200.0, 2000.0, true, 400, None);
    let parts = synthesize_parts(&track, 11).unwrap();
    assert!(fraction_below(parts.voiced.samples(), 2000.0) >= 0.95);
    assert!(fraction_below(parts.noise.samples(), 2000.0) <= 0.05);
}

#[test]
fn synthesis_is_deterministic() {
    let track = flat_track(150.0, 1500.0, true, 100, None);
    assert_eq!(
        synthesize(&track, 7).unwrap(),
        synthesize(&track, 7).unwrap()
    );
    assert_ne!(
        synthesize(&track, 7).unwrap(),
        synthesize(&track, 8).unwrap()
    );
}

#[test]
fn empty_track_gives_empty_buffer() {
    let f0 = F0Track::new(vec![], HOP, vec![]).unwrap();
    let track = ParameterTrack::new(f0, vec![], vec![], None, FS).unwrap();
    assert!(synthesize(&track, 1).unwrap().is_empty());
}
