use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{shape, Error, Result};

/// Hidden layer sizes of the network; input and output sizes come from the
/// data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub ff_units: Vec<usize>,
    /// Units per recurrent direction.
    pub lstm_units: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            ff_units: vec![64; 4],
            lstm_units: 32,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ff_units.contains(&0) || self.lstm_units == 0 {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkDims {
    pub input_dim: usize,
    pub ff_dims: Vec<usize>,
    pub lstm_dim: usize,
    pub output_dim: usize,
}

impl NetworkDims {
    pub fn new(input_dim: usize, cfg: &ModelConfig, output_dim: usize) -> Self {
        Self {
            input_dim,
            ff_dims: cfg.ff_units.clone(),
            lstm_dim: cfg.lstm_units,
            output_dim,
        }
    }
}

/// Fully connected `tanh` layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// One recurrent direction. Gate rows are stacked as input, forget, cell
/// candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirection {
    pub wx: Matrix,
    pub wh: Matrix,
    pub b: Vec<f64>,
}

impl LstmDirection {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            wx: Matrix::zeros(4 * hidden, input),
            wh: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    fn hidden(&self) -> usize {
        self.wh.cols()
    }
}

/// Feed-forward `tanh` stack followed by a bidirectional LSTM and a linear
/// output layer reading both directions.
///
/// Parameter tensors are always enumerated in this order: each feed-forward
/// `w`, `b`; forward `wx`, `wh`, `b`; backward `wx`, `wh`, `b`; `wy_fwd`,
/// `wy_bwd`, `by`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub ff: Vec<Dense>,
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
    pub wy_fwd: Matrix,
    pub wy_bwd: Matrix,
    pub by: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct LstmTrace {
    /// Gate activations `[i, f, g, o]` per time step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

struct Trace {
    /// `layers[l][t]`: input (l = 0) and feed-forward outputs.
    layers: Vec<Vec<Vec<f64>>>,
    fwd: LstmTrace,
    bwd: LstmTrace,
    y: Vec<Vec<f64>>,
}

impl NetworkModel {
    pub fn zeros(dims: &NetworkDims) -> Self {
        let mut ff = Vec::new();
        let mut prev = dims.input_dim;
        for &d in &dims.ff_dims {
            ff.push(Dense {
                w: Matrix::zeros(d, prev),
                b: vec![0.0; d],
            });
            prev = d;
        }
        let h = dims.lstm_dim;
        Self {
            ff,
            fwd: LstmDirection::zeros(prev, h),
            bwd: LstmDirection::zeros(prev, h),
            wy_fwd: Matrix::zeros(dims.output_dim, h),
            wy_bwd: Matrix::zeros(dims.output_dim, h),
            by: vec![0.0; dims.output_dim],
        }
    }

    /// Every weight and bias drawn uniformly from `[-range, range]`.
    pub fn random<R: Rng>(dims: &NetworkDims, range: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(dims);
        for t in m.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.random_range(-range..=range);
            }
        }
        m
    }

    pub fn dims(&self) -> NetworkDims {
        NetworkDims {
            input_dim: self.ff.first().map_or(self.fwd.wx.cols(), |d| d.w.cols()),
            ff_dims: self.ff.iter().map(|d| d.b.len()).collect(),
            lstm_dim: self.fwd.hidden(),
            output_dim: self.by.len(),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for d in &self.ff {
            out.push(d.w.data());
            out.push(&d.b);
        }
        for dir in [&self.fwd, &self.bwd] {
            out.push(dir.wx.data());
            out.push(dir.wh.data());
            out.push(&dir.b);
        }
        out.push(self.wy_fwd.data());
        out.push(self.wy_bwd.data());
        out.push(&self.by);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for d in &mut self.ff {
            out.push(d.w.data_mut());
            out.push(&mut d.b);
        }
        for dir in [&mut self.fwd, &mut self.bwd] {
            out.push(dir.wx.data_mut());
            out.push(dir.wh.data_mut());
            out.push(&mut dir.b);
        }
        out.push(self.wy_fwd.data_mut());
        out.push(self.wy_bwd.data_mut());
        out.push(&mut self.by);
        out
    }

    /// Number of scalar parameters a model of `dims` holds, saturating on
    /// overflow.
    pub fn param_count(dims: &NetworkDims) -> usize {
        let mut total = 0usize;
        let mut prev = dims.input_dim;
        for &d in &dims.ff_dims {
            total = total.saturating_add(d.saturating_mul(prev.saturating_add(1)));
            prev = d;
        }
        let h = dims.lstm_dim;
        let gates = h.saturating_mul(4);
        let per_dir = gates.saturating_mul(prev.saturating_add(h).saturating_add(1));
        let out = dims
            .output_dim
            .saturating_mul(h.saturating_mul(2).saturating_add(1));
        total
            .saturating_add(per_dir.saturating_mul(2))
            .saturating_add(out)
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Checks shapes agree and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let rebuilt = Self::zeros(&dims);
        let ok = rebuilt
            .tensors()
            .iter()
            .zip(self.tensors())
            .all(|(a, b)| a.len() == b.len())
            && self
                .ff
                .iter()
                .zip(&rebuilt.ff)
                .all(|(a, b)| a.w.rows() == b.w.rows() && a.w.cols() == b.w.cols())
            && self.bwd.hidden() == dims.lstm_dim
            && self.fwd.wx.cols() == rebuilt.fwd.wx.cols()
            && self.bwd.wx.cols() == rebuilt.bwd.wx.cols();
        if !ok {
            return Err(shape("network tensors have inconsistent shapes"));
        }
        if self
            .tensors()
            .iter()
            .any(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &[Vec<f64>]) -> Result<()> {
        let d = self.dims().input_dim;
        if let Some((t, v)) = x.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(shape(format!(
                "frame {t} has {} features, the model expects {d}",
                v.len()
            )));
        }
        Ok(())
    }

    fn run_direction(dir: &LstmDirection, u: &[Vec<f64>], reverse: bool) -> LstmTrace {
        let hdim = dir.hidden();
        let n = u.len();
        let mut tr = LstmTrace {
            gates: vec![Vec::new(); n],
            c: vec![Vec::new(); n],
            h: vec![Vec::new(); n],
        };
        let mut h = vec![0.0; hdim];
        let mut c = vec![0.0; hdim];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for t in order {
            let mut z = dir.b.clone();
            dir.wx.mul_acc(&u[t], &mut z);
            dir.wh.mul_acc(&h, &mut z);
            for (j, v) in z.iter_mut().enumerate() {
                *v = if j / hdim == 2 { v.tanh() } else { sigmoid(*v) };
            }
            for j in 0..hdim {
                c[j] = z[hdim + j] * c[j] + z[j] * z[2 * hdim + j];
                h[j] = z[3 * hdim + j] * c[j].tanh();
            }
            tr.gates[t] = z;
            tr.c[t] = c.clone();
            tr.h[t] = h.clone();
        }
        tr
    }

    fn trace(&self, x: &[Vec<f64>]) -> Result<Trace> {
        self.check_input(x)?;
        let mut layers = vec![x.to_vec()];
        for d in &self.ff {
            let next = layers
                .last()
                .unwrap()
                .iter()
                .map(|v| {
                    let mut a = d.b.clone();
                    d.w.mul_acc(v, &mut a);
                    a.iter_mut().for_each(|e| *e = e.tanh());
                    a
                })
                .collect();
            layers.push(next);
        }
        let u = layers.last().unwrap();
        let fwd = Self::run_direction(&self.fwd, u, false);
        let bwd = Self::run_direction(&self.bwd, u, true);
        let y = (0..x.len())
            .map(|t| {
                let mut y = self.by.clone();
                self.wy_fwd.mul_acc(&fwd.h[t], &mut y);
                self.wy_bwd.mul_acc(&bwd.h[t], &mut y);
                y
            })
            .collect();
        Ok(Trace {
            layers,
            fwd,
            bwd,
            y,
        })
    }

    /// Output sequence for the input sequence `x` (one vector per frame).
    pub fn forward(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(self.trace(x)?.y)
    }

    /// Accumulates the gradient of one direction into `g` and the gradient
    /// with respect to its input sequence into `du`.
    fn backprop_direction(
        dir: &LstmDirection,
        tr: &LstmTrace,
        u: &[Vec<f64>],
        dh_out: &[Vec<f64>],
        reverse: bool,
        g: &mut LstmDirection,
        du: &mut [Vec<f64>],
    ) {
        let hdim = dir.hidden();
        let n = u.len();
        let zeros = vec![0.0; hdim];
        let mut dh_next = vec![0.0; hdim];
        let mut dc_next = vec![0.0; hdim];
        // visit steps in the opposite order to the recurrence
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new(0..n)
        } else {
            Box::new((0..n).rev())
        };
        for t in order {
            let prev = if reverse {
                (t + 1 < n).then_some(t + 1)
            } else {
                t.checked_sub(1)
            };
            let (h_prev, c_prev) = match prev {
                Some(p) => (&tr.h[p], &tr.c[p]),
                None => (&zeros, &zeros),
            };
            let z = &tr.gates[t];
            let mut dz = vec![0.0; 4 * hdim];
            for j in 0..hdim {
                let (i, f, gg, o) = (z[j], z[hdim + j], z[2 * hdim + j], z[3 * hdim + j]);
                let tc = tr.c[t][j].tanh();
                let dh = dh_out[t][j] + dh_next[j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * gg * i * (1.0 - i);
                dz[hdim + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * hdim + j] = dc * i * (1.0 - gg * gg);
                dz[3 * hdim + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            g.wx.add_outer(&dz, &u[t]);
            g.wh.add_outer(&dz, h_prev);
            g.b.iter_mut().zip(&dz).for_each(|(a, b)| *a += b);
            dir.wx.mul_t_acc(&dz, &mut du[t]);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            dir.wh.mul_t_acc(&dz, &mut dh_next);
        }
    }

    /// Loss and its exact gradient with respect to every parameter for one
    /// sequence pair. The gradient is returned as a model of the same shape.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<(f64, NetworkModel)> {
        let tr = self.trace(x)?;
        let loss = mse_loss(y, &tr.y)?;
        let n = (y.len() * self.by.len()).max(1) as f64;
        let dy: Vec<Vec<f64>> =
            tr.y.iter()
                .zip(y)
                .map(|(p, t)| p.iter().zip(t).map(|(a, b)| 2.0 * (a - b) / n).collect())
                .collect();

        let mut g = Self::zeros(&self.dims());
        let steps = x.len();
        let hdim = self.fwd.hidden();
        let mut dhf = vec![vec![0.0; hdim]; steps];
        let mut dhb = vec![vec![0.0; hdim]; steps];
        for t in 0..steps {
            g.wy_fwd.add_outer(&dy[t], &tr.fwd.h[t]);
            g.wy_bwd.add_outer(&dy[t], &tr.bwd.h[t]);
            g.by.iter_mut().zip(&dy[t]).for_each(|(a, b)| *a += b);
            self.wy_fwd.mul_t_acc(&dy[t], &mut dhf[t]);
            self.wy_bwd.mul_t_acc(&dy[t], &mut dhb[t]);
        }

        let u = tr.layers.last().unwrap();
        let mut du = vec![vec![0.0; u.first().map_or(0, Vec::len)]; steps];
        Self::backprop_direction(&self.fwd, &tr.fwd, u, &dhf, false, &mut g.fwd, &mut du);
        Self::backprop_direction(&self.bwd, &tr.bwd, u, &dhb, true, &mut g.bwd, &mut du);

        let mut delta = du;
        for l in (0..self.ff.len()).rev() {
            let out = &tr.layers[l + 1];
            let inp = &tr.layers[l];
            let mut next = vec![vec![0.0; inp.first().map_or(0, Vec::len)]; steps];
            for t in 0..steps {
                let da: Vec<f64> = delta[t]
                    .iter()
                    .zip(&out[t])
                    .map(|(d, h)| d * (1.0 - h * h))
                    .collect();
                g.ff[l].w.add_outer(&da, &inp[t]);
                g.ff[l].b.iter_mut().zip(&da).for_each(|(a, b)| *a += b);
                if l > 0 {
                    self.ff[l].w.mul_t_acc(&da, &mut next[t]);
                }
            }
            delta = next;
        }
        Ok((loss, g))
    }

    /// Gradient of [`mse_loss`] with respect to every parameter.
    pub fn backward(&self, x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<NetworkModel> {
        Ok(self.loss_and_gradient(x, y)?.1)
    }
}

/// Mean of squared differences over all frames and dimensions.
pub fn mse_loss(y: &[Vec<f64>], y_hat: &[Vec<f64>]) -> Result<f64> {
    if y.len() != y_hat.len() || y.iter().zip(y_hat).any(|(a, b)| a.len() != b.len()) {
        return Err(shape("loss operands differ in shape"));
    }
    let n: usize = y.iter().map(Vec::len).sum();
    if n == 0 {
        return Ok(0.0);
    }
    let s: f64 = y
        .iter()
        .zip(y_hat)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)))
        .sum();
    Ok(s / n as f64)
}
