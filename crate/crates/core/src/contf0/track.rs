use std::io::Write;

use crate::error::{domain, shape, Result};

/// Lower clamp for continuous F0 values (Hz).
pub const F0_FLOOR: f64 = 40.0;
/// Upper clamp for continuous F0 values (Hz).
pub const F0_CEIL: f64 = 600.0;

/// Per-frame continuous F0. Frame `i` sits at `i * frame_hop` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    values: Vec<f64>,
    frame_hop: f64,
    voicing: Vec<bool>,
}

impl F0Track {
    pub fn new(values: Vec<f64>, frame_hop: f64, voicing: Vec<bool>) -> Result<Self> {
        if values.len() != voicing.len() {
            return Err(shape(format!(
                "{} f0 values but {} voicing flags",
                values.len(),
                voicing.len()
            )));
        }
        if !(frame_hop > 0.0 && frame_hop.is_finite()) {
            return Err(domain(format!("frame hop {frame_hop} must be positive")));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(domain(format!(
                "f0 frame {i} is {} but contF0 must be positive everywhere",
                values[i]
            )));
        }
        Ok(Self {
            values,
            frame_hop,
            voicing,
        })
    }

    /// Constant track, all frames flagged with `voiced`.
    pub fn constant(value: f64, n_frames: usize, frame_hop: f64, voiced: bool) -> Result<Self> {
        Self::new(vec![value; n_frames], frame_hop, vec![voiced; n_frames])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn voicing(&self) -> &[bool] {
        &self.voicing
    }

    pub fn frame_hop(&self) -> f64 {
        self.frame_hop
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 * self.frame_hop
    }

    pub fn geometric_mean(&self) -> f64 {
        let n = self.values.len().max(1) as f64;
        (self.values.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
    }

    /// Copy with every value clamped to `[F0_FLOOR, F0_CEIL]`.
    pub fn clamped(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|v| v.clamp(F0_FLOOR, F0_CEIL))
                .collect(),
            frame_hop: self.frame_hop,
            voicing: self.voicing.clone(),
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.frame_hop, self.voicing.clone())
    }

    /// Two-column text (`time_s f0_hz`), one frame per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.6}\t{:.6}", self.time(i), v)?;
        }
        Ok(())
    }
}

/// Fill frames where `known` is false by linear interpolation between the
/// flanking known values, holding the nearest known value at the edges.
/// Returns `None` when no frame is known.
pub(crate) fn fill_gaps(values: &[f64], known: &[bool]) -> Option<Vec<f64>> {
    let anchors: Vec<usize> = (0..values.len()).filter(|&i| known[i]).collect();
    let (&first, &last) = (anchors.first()?, anchors.last()?);
    let mut out = values.to_vec();
    for v in out.iter_mut().take(first) {
        *v = values[first];
    }
    for v in out.iter_mut().skip(last + 1) {
        *v = values[last];
    }
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (i, v) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let frac = (i - a) as f64 / (b - a) as f64;
            *v = values[a] + frac * (values[b] - values[a]);
        }
    }
    Some(out)
}
