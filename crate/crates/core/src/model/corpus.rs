//! Synthetic "linguistic feature → vocoder parameter" corpus for exercising
//! the acoustic model at desk scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::ParameterTrack;
use crate::contf0::F0Track;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpusConfig {
    pub n_utterances: usize,
    pub n_phones: usize,
    pub phones_per_utterance: (usize, usize),
    /// Inclusive range of phone durations in frames.
    pub phone_frames: (usize, usize),
    pub n_bins: usize,
    pub frame_hop: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            n_utterances: 20,
            n_phones: 6,
            phones_per_utterance: (5, 9),
            phone_frames: (8, 24),
            n_bins: 257,
            frame_hop: 0.005,
            sample_rate: 16000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyUtterance {
    pub name: String,
    /// One-hot phone class, position in phone and phone duration per frame.
    pub features: Vec<Vec<f64>>,
    pub track: ParameterTrack,
}

/// Feature width for `n_phones` classes.
pub fn toy_feature_dim(n_phones: usize) -> usize {
    n_phones + 2
}

/// Targets of one phone class: f0 (Hz), MVF (Hz) and a ln-amplitude
/// envelope with a single formant-like bump.
fn phone_targets(class: usize, cfg: &ToyCorpusConfig) -> (f64, f64, Vec<f64>) {
    let nyq = cfg.sample_rate as f64 / 2.0;
    let c = class as f64;
    let f0 = 100.0 + 25.0 * c;
    let mvf = (1500.0 + 800.0 * c).min(nyq);
    let formant = 500.0 + 450.0 * c;
    let env = (0..cfg.n_bins)
        .map(|b| {
            let f = b as f64 * nyq / (cfg.n_bins - 1) as f64;
            let d = (f - formant) / 400.0;
            -4.0 - f / 2500.0 + 1.5 * (-0.5 * d * d).exp()
        })
        .collect();
    (f0, mvf, env)
}

/// Deterministic corpus: random phone strings whose per-frame parameters
/// glide towards each phone's targets with a one-pole smoother, so every
/// track is continuous across phone boundaries.
pub fn toy_corpus(cfg: &ToyCorpusConfig) -> Result<Vec<ToyUtterance>> {
    if cfg.n_phones == 0 || cfg.n_bins < 2 || cfg.phone_frames.0 == 0 {
        return Err(Error::Config(
            "toy corpus needs phones, frames and at least two bins".into(),
        ));
    }
    if cfg.phones_per_utterance.0 > cfg.phones_per_utterance.1
        || cfg.phone_frames.0 > cfg.phone_frames.1
    {
        return Err(Error::Config("toy corpus ranges are inverted".into()));
    }
    let targets: Vec<_> = (0..cfg.n_phones).map(|c| phone_targets(c, cfg)).collect();
    let max_frames = cfg.phone_frames.1 as f64;
    let alpha = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_utterances)
        .map(|u| {
            let n_ph = rng.random_range(cfg.phones_per_utterance.0..=cfg.phones_per_utterance.1);
            let mut features = Vec::new();
            let (mut f0, mut mvf, mut env) = (Vec::new(), Vec::new(), Vec::new());
            let mut state: Option<(f64, f64, Vec<f64>)> = None;
            for _ in 0..n_ph {
                let class = rng.random_range(0..cfg.n_phones);
                let dur = rng.random_range(cfg.phone_frames.0..=cfg.phone_frames.1);
                let (tf, tm, te) = &targets[class];
                for k in 0..dur {
                    let mut x = vec![0.0; toy_feature_dim(cfg.n_phones)];
                    x[class] = 1.0;
                    x[cfg.n_phones] = (k as f64 + 0.5) / dur as f64;
                    x[cfg.n_phones + 1] = dur as f64 / max_frames;
                    features.push(x);
                    let (lf, lm, e) = state.get_or_insert_with(|| (tf.ln(), tm.ln(), te.clone()));
                    *lf += alpha * (tf.ln() - *lf);
                    *lm += alpha * (tm.ln() - *lm);
                    e.iter_mut()
                        .zip(te)
                        .for_each(|(a, b)| *a += alpha * (b - *a));
                    f0.push(lf.exp());
                    mvf.push(lm.exp());
                    env.push(e.clone());
                }
            }
            let n = f0.len();
            let track = ParameterTrack::new(
                F0Track::new(f0, cfg.frame_hop, vec![true; n])?,
                mvf,
                env,
                None,
                cfg.sample_rate,
            )?;
            Ok(ToyUtterance {
                name: format!("toy{u:03}"),
                features,
                track,
            })
        })
        .collect()
}
