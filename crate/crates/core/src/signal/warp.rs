use std::f64::consts::PI;

use super::{kaiser, SpeechBuffer};
use crate::error::{domain, Result};

/// Half-width (in input samples) of the windowed-sinc interpolation kernel.
pub const INTERP_HALF_TAPS: usize = 16;
const INTERP_BETA: f64 = 9.0;
const SPAN_TOLERANCE: f64 = 1e-9;

/// Piecewise-linear, strictly increasing map between original time `t` and
/// warped time `tau` (both in seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct WarpMap {
    t: Vec<f64>,
    tau: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpDirection {
    /// Original axis to warped axis.
    Forward,
    /// Warped axis back to the original axis.
    Inverse,
}

impl WarpMap {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(domain("warp map needs at least two knots"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(domain(format!(
                    "warp knots must be strictly increasing: {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        if knots.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(domain("warp knots must be finite"));
        }
        let (t, tau) = knots.into_iter().unzip();
        Ok(Self { t, tau })
    }

    /// `tau = slope * t` on `[0, t_end]`.
    pub fn linear(slope: f64, t_end: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (t_end, slope * t_end)])
    }

    pub fn identity(t_end: f64) -> Result<Self> {
        Self::linear(1.0, t_end)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.tau.iter().copied())
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.tau[0], *self.tau.last().unwrap())
    }

    /// `tau = p(t)`, linearly extrapolated beyond the knots.
    pub fn forward(&self, t: f64) -> f64 {
        interp(&self.t, &self.tau, t)
    }

    /// `t = p^-1(tau)`.
    pub fn inverse(&self, tau: f64) -> f64 {
        interp(&self.tau, &self.t, tau)
    }

    /// Local slope `dtau/dt` of the segment containing original time `t`.
    pub fn slope_at_t(&self, t: f64) -> f64 {
        let i = segment(&self.t, t);
        (self.tau[i + 1] - self.tau[i]) / (self.t[i + 1] - self.t[i])
    }

    /// Local slope `dtau/dt` of the segment containing warped time `tau`.
    pub fn slope_at_tau(&self, tau: f64) -> f64 {
        let i = segment(&self.tau, tau);
        (self.tau[i + 1] - self.tau[i]) / (self.t[i + 1] - self.t[i])
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = segment(xs, x);
    let frac = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + frac * (ys[i + 1] - ys[i])
}

/// Band-limited value of `x` at fractional sample position `pos`
/// (Kaiser-windowed sinc, zero outside the signal).
pub(crate) fn sinc_interpolate(x: &[f64], pos: f64) -> f64 {
    let base = pos.floor();
    let frac = pos - base;
    let base = base as isize;
    if frac == 0.0 {
        return if base >= 0 && (base as usize) < x.len() {
            x[base as usize]
        } else {
            0.0
        };
    }
    let half = INTERP_HALF_TAPS as isize;
    let mut acc = 0.0;
    for k in (base - half + 1)..=(base + half) {
        if k < 0 || k as usize >= x.len() {
            continue;
        }
        let d = pos - k as f64;
        let s = (PI * d).sin() / (PI * d);
        acc += x[k as usize] * s * kaiser(d / INTERP_HALF_TAPS as f64, INTERP_BETA);
    }
    acc
}

/// Resample `signal` onto the other time axis of `map`.
///
/// Sample `m` of either axis sits at `m / sample_rate` seconds. `Forward`
/// produces the warped signal `y(tau) = x(p^-1(tau))`; `Inverse` maps a warped
/// signal back with `x(t) = y(p(t))`. The map must cover the input's span.
pub fn resample_by_warp(
    signal: &SpeechBuffer,
    map: &WarpMap,
    direction: WarpDirection,
) -> Result<SpeechBuffer> {
    let fs = signal.fs();
    let x = signal.samples();
    if x.is_empty() {
        return SpeechBuffer::new(Vec::new(), signal.sample_rate());
    }
    let end = (x.len() - 1) as f64 / fs;
    let (lo, hi) = match direction {
        WarpDirection::Forward => map.t_range(),
        WarpDirection::Inverse => map.tau_range(),
    };
    if lo > SPAN_TOLERANCE || hi < end - SPAN_TOLERANCE {
        return Err(domain(format!(
            "warp map covers [{lo}, {hi}] s but the signal spans [0, {end}] s"
        )));
    }
    let to_source = |m: usize| {
        let target = m as f64 / fs;
        match direction {
            WarpDirection::Forward => map.inverse(target),
            WarpDirection::Inverse => map.forward(target),
        }
    };
    let out_end = match direction {
        WarpDirection::Forward => map.forward(end),
        WarpDirection::Inverse => map.inverse(end),
    };
    let out_len = (out_end * fs + SPAN_TOLERANCE).floor().max(0.0) as usize + 1;
    let out = (0..out_len)
        .map(|m| {
            let src = to_source(m);
            if src < -SPAN_TOLERANCE {
                0.0
            } else {
                sinc_interpolate(x, snap(src * fs))
            }
        })
        .collect();
    SpeechBuffer::new(out, signal.sample_rate())
}

/// Round positions within floating noise of an integer to that integer.
fn snap(pos: f64) -> f64 {
    let r = pos.round();
    if (pos - r).abs() < 1e-9 {
        r
    } else {
        pos
    }
}
