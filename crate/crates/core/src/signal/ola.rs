use super::{FrameGrid, SpeechBuffer};
use crate::error::{shape, Result};

/// Overlap-add already-windowed frames placed `grid.hop()` samples apart.
///
/// Frames are summed as given; the caller applies the synthesis window
/// ([`super::hann_periodic`] at 50% overlap sums to one).
pub fn overlap_add(
    frames: &[Vec<f64>],
    grid: &FrameGrid,
    sample_rate: u32,
) -> Result<SpeechBuffer> {
    if frames.len() != grid.n_frames() {
        return Err(shape(format!(
            "expected {} frames, got {}",
            grid.n_frames(),
            frames.len()
        )));
    }
    let mut out = vec![0.0; grid.output_len()];
    for (i, frame) in frames.iter().enumerate() {
        if frame.len() != grid.frame_length() {
            return Err(shape(format!(
                "frame {i} has length {}, expected {}",
                frame.len(),
                grid.frame_length()
            )));
        }
        let start = i * grid.hop();
        for (o, v) in out[start..start + frame.len()].iter_mut().zip(frame) {
            *o += v;
        }
    }
    SpeechBuffer::new(out, sample_rate)
}
