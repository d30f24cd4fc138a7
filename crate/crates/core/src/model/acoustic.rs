use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{ModelConfig, NetworkDims, NetworkModel};
use super::train::{train, EpochLog, Sequence, TrainConfig};
use crate::analysis::{ParameterTrack, ENVELOPE_FLOOR};
use crate::contf0::{F0Track, F0_CEIL, F0_FLOOR};
use crate::error::{shape, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CSMN";
pub const CHECKPOINT_VERSION: u32 = 1;
/// Largest natural-log envelope value a prediction may carry.
pub const ENVELOPE_CEIL: f64 = 7.0;

/// Per-dimension affine standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Mean and standard deviation over every frame; constant dimensions
    /// get unit scale.
    pub fn fit<'a>(frames: impl Iterator<Item = &'a Vec<f64>>, dim: usize) -> Self {
        let mut n = 0usize;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for f in frames {
            n += 1;
            for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(f) {
                *s += v;
                *q += v * v;
            }
        }
        if n == 0 {
            return Self::identity(dim);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n as f64 - m * m).max(0.0);
                if var > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| x * s + m)
            .collect()
    }
}

/// Network plus the input and output standardization it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticModel {
    pub network: NetworkModel,
    pub input_norm: Normalizer,
    pub output_norm: Normalizer,
}

/// Per-frame network target of a parameter track: `ln f0`, `ln mvf`, then
/// the envelope bins.
pub fn track_targets(track: &ParameterTrack) -> Vec<Vec<f64>> {
    (0..track.n_frames())
        .map(|i| {
            let mut v = Vec::with_capacity(2 + track.n_bins());
            v.push(track.f0().values()[i].ln());
            v.push(track.mvf()[i].ln());
            v.extend_from_slice(&track.envelope()[i]);
            v
        })
        .collect()
}

/// Inverse of [`track_targets`], clamping every value into the range a
/// [`ParameterTrack`] accepts. All frames are marked voiced; the MVF alone
/// decides how many harmonics are synthesized.
pub fn targets_to_track(
    frames: &[Vec<f64>],
    frame_hop: f64,
    sample_rate: u32,
) -> Result<ParameterTrack> {
    if let Some(f) = frames.iter().find(|f| f.len() < 4) {
        return Err(shape(format!(
            "{} output dimensions, need at least 4",
            f.len()
        )));
    }
    if frames.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite model output".into()));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let floor = 0.5 * ENVELOPE_FLOOR.ln();
    let f0: Vec<f64> = frames
        .iter()
        .map(|f| f[0].exp().clamp(F0_FLOOR, F0_CEIL))
        .collect();
    let mvf = frames
        .iter()
        .zip(&f0)
        .map(|(f, f0)| f[1].exp().clamp((2.0 * f0).min(nyquist), nyquist))
        .collect();
    let env = frames
        .iter()
        .map(|f| {
            f[2..]
                .iter()
                .map(|v| v.clamp(floor, ENVELOPE_CEIL))
                .collect()
        })
        .collect();
    let n = f0.len();
    ParameterTrack::new(
        F0Track::new(f0, frame_hop, vec![true; n])?,
        mvf,
        env,
        None,
        sample_rate,
    )
}

fn normalize_set(data: &[Sequence], inp: &Normalizer, out: &Normalizer) -> Vec<Sequence> {
    data.iter()
        .map(|(x, y)| {
            (
                x.iter().map(|v| inp.apply(v)).collect(),
                y.iter().map(|v| out.apply(v)).collect(),
            )
        })
        .collect()
}

impl AcousticModel {
    /// Fits the standardizations on `data`, initializes from `cfg.seed` and
    /// trains in the standardized domain.
    pub fn train(
        data: &[Sequence],
        held_out: &[Sequence],
        model_cfg: &ModelConfig,
        cfg: &TrainConfig,
    ) -> Result<(Self, Vec<EpochLog>)> {
        model_cfg.validate()?;
        cfg.validate()?;
        let first = data
            .first()
            .ok_or_else(|| Error::Degenerate("empty training set".into()))?;
        let din = first.0.first().map_or(0, Vec::len);
        let dout = first.1.first().map_or(0, Vec::len);
        if din == 0 || dout == 0 {
            return Err(Error::Degenerate(
                "training sequences carry no frames".into(),
            ));
        }
        let input_norm = Normalizer::fit(data.iter().flat_map(|(x, _)| x.iter()), din);
        let output_norm = Normalizer::fit(data.iter().flat_map(|(_, y)| y.iter()), dout);
        let dims = NetworkDims::new(din, model_cfg, dout);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = NetworkModel::random(&dims, cfg.init_range, &mut rng);
        let (network, history) = train(
            init,
            &normalize_set(data, &input_norm, &output_norm),
            &normalize_set(held_out, &input_norm, &output_norm),
            cfg,
        )?;
        Ok((
            Self {
                network,
                input_norm,
                output_norm,
            },
            history,
        ))
    }

    /// Raw (de-standardized) output frames.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let x: Vec<Vec<f64>> = features.iter().map(|v| self.input_norm.apply(v)).collect();
        if features.iter().any(|v| v.len() != self.input_norm.dim()) {
            return Err(shape(format!(
                "features must have {} dimensions",
                self.input_norm.dim()
            )));
        }
        Ok(self
            .network
            .forward(&x)?
            .iter()
            .map(|v| self.output_norm.invert(v))
            .collect())
    }

    pub fn predict_track(
        &self,
        features: &[Vec<f64>],
        frame_hop: f64,
        sample_rate: u32,
    ) -> Result<ParameterTrack> {
        targets_to_track(&self.predict(features)?, frame_hop, sample_rate)
    }

    /// Checkpoint layout, all little endian: magic `CSMN`, `u32` version,
    /// `u32` input size, `u32` feed-forward layer count and each layer size,
    /// `u32` recurrent size, `u32` output size; then as `f64` the input mean
    /// and scale, the output mean and scale, and every network tensor in
    /// [`NetworkModel`] order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.network.dims();
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        let mut put = |v: u32| out.extend_from_slice(&v.to_le_bytes());
        put(CHECKPOINT_VERSION);
        put(dims.input_dim as u32);
        put(dims.ff_dims.len() as u32);
        for d in &dims.ff_dims {
            put(*d as u32);
        }
        put(dims.lstm_dim as u32);
        put(dims.output_dim as u32);
        let norms: [&[f64]; 4] = [
            &self.input_norm.mean,
            &self.input_norm.std,
            &self.output_norm.mean,
            &self.output_norm.std,
        ];
        for v in norms.into_iter().chain(self.network.tensors()) {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a model checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let input_dim = r.u32()? as usize;
        let n_ff = r.u32()? as usize;
        if n_ff > 1024 {
            return Err(Error::Format(format!("implausible layer count {n_ff}")));
        }
        let ff_dims = (0..n_ff)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let lstm_dim = r.u32()? as usize;
        let output_dim = r.u32()? as usize;
        let dims = NetworkDims {
            input_dim,
            ff_dims,
            lstm_dim,
            output_dim,
        };
        let n_params = NetworkModel::param_count(&dims);
        let expect = input_dim
            .saturating_add(output_dim)
            .saturating_mul(2)
            .saturating_add(n_params)
            .saturating_mul(8);
        if bytes.len() - r.pos != expect {
            return Err(Error::Format(format!(
                "checkpoint holds {} bytes of values, dimensions imply {}",
                bytes.len() - r.pos,
                expect
            )));
        }
        let input_norm = Normalizer {
            mean: r.f64s(input_dim)?,
            std: r.f64s(input_dim)?,
        };
        let output_norm = Normalizer {
            mean: r.f64s(output_dim)?,
            std: r.f64s(output_dim)?,
        };
        let mut network = NetworkModel::zeros(&dims);
        for t in network.tensors_mut() {
            let vals = r.f64s(t.len())?;
            t.copy_from_slice(&vals);
        }
        network.validate()?;
        Ok(Self {
            network,
            input_norm,
            output_norm,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Format("checkpoint is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
