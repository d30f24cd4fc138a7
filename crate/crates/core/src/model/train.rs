use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{mse_loss, NetworkModel};
use crate::error::{shape, Error, Result};

/// One input/target sequence pair, one vector per frame.
pub type Sequence = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// SGD with momentum. Each step follows the per-frame squared error summed
/// over output dimensions (the reported loss is its per-element mean, so
/// steps are `output_dim` times the gradient of [`mse_loss`]).
///
/// Epochs are numbered from 1: momentum is `momentum`
/// for the first `momentum_epochs` epochs and `late_momentum` afterwards;
/// the learning rate is constant for `halving_after` epochs and then halves
/// every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub late_momentum: f64,
    pub momentum_epochs: usize,
    pub halving_after: usize,
    pub epochs: usize,
    /// Half-width of the uniform initialization.
    pub init_range: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            momentum: 0.3,
            late_momentum: 0.9,
            momentum_epochs: 10,
            halving_after: 15,
            epochs: 30,
            init_range: 0.2,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be nonnegative",
                self.learning_rate
            )));
        }
        for m in [self.momentum, self.late_momentum] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::Config(format!("momentum {m} outside [0, 1)")));
            }
        }
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return Err(Error::Config("init_range must be positive".into()));
        }
        Ok(())
    }

    /// Learning rate and momentum used during `epoch` (1-based).
    pub fn schedule(&self, epoch: usize) -> (f64, f64) {
        let momentum = if epoch > self.momentum_epochs {
            self.late_momentum
        } else {
            self.momentum
        };
        let halvings = epoch.saturating_sub(self.halving_after);
        let lr = self.learning_rate * 0.5f64.powi(halvings.min(i32::MAX as usize) as i32);
        (lr, momentum)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Frame-weighted mean loss over the epoch's updates.
    pub train_loss: f64,
    /// Loss on the held-out set after the epoch, when one is given.
    pub heldout_loss: Option<f64>,
}

fn check_pairs(data: &[Sequence], input: usize, output: usize) -> Result<()> {
    for (i, (x, y)) in data.iter().enumerate() {
        if x.len() != y.len() {
            return Err(shape(format!(
                "sequence {i}: {} input and {} target frames",
                x.len(),
                y.len()
            )));
        }
        if x.iter().any(|v| v.len() != input) || y.iter().any(|v| v.len() != output) {
            return Err(shape(format!(
                "sequence {i} does not match the model dimensions"
            )));
        }
    }
    Ok(())
}

/// Frame-weighted mean loss of `model` over `data`.
pub fn dataset_loss(model: &NetworkModel, data: &[Sequence]) -> Result<f64> {
    let mut total = 0.0;
    let mut frames = 0usize;
    for (x, y) in data {
        total += mse_loss(y, &model.forward(x)?)? * x.len() as f64;
        frames += x.len();
    }
    Ok(if frames == 0 {
        0.0
    } else {
        total / frames as f64
    })
}

/// Per-sequence SGD with momentum following the schedule of `cfg`. The
/// visiting order is reshuffled every epoch from `cfg.seed`.
pub fn train(
    mut model: NetworkModel,
    data: &[Sequence],
    held_out: &[Sequence],
    cfg: &TrainConfig,
) -> Result<(NetworkModel, Vec<EpochLog>)> {
    cfg.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let dims = model.dims();
    check_pairs(data, dims.input_dim, dims.output_dim)?;
    check_pairs(held_out, dims.input_dim, dims.output_dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = NetworkModel::zeros(&dims);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let scale = dims.output_dim as f64;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let (lr, mu) = cfg.schedule(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut frames = 0usize;
        for &i in &order {
            let (x, y) = &data[i];
            let (loss, grad) = model.loss_and_gradient(x, y)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became {loss} in epoch {epoch} on sequence {i}"
                )));
            }
            total += loss * x.len() as f64;
            frames += x.len();
            for ((p, v), g) in model
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(grad.tensors())
            {
                for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = mu * *v - lr * scale * g;
                    *p += *v;
                }
            }
        }
        let heldout_loss = if held_out.is_empty() {
            None
        } else {
            Some(dataset_loss(&model, held_out)?)
        };
        history.push(EpochLog {
            epoch,
            learning_rate: lr,
            momentum: mu,
            train_loss: total / frames.max(1) as f64,
            heldout_loss,
        });
    }
    if model
        .tensors()
        .iter()
        .any(|t| t.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Numerical(
            "training produced non-finite parameters".into(),
        ));
    }
    Ok((model, history))
}
