use crate::error::{Error, Result};

/// All-pole model `A(z) = 1 + a[1] z^-1 + ... + a[p] z^-p` with the
/// autocorrelation it was fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    pub coefficients: Vec<f64>,
    pub autocorrelation: Vec<f64>,
    /// Final prediction-error power.
    pub error: f64,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `r[0] / error`, in dB.
    pub fn prediction_gain_db(&self) -> f64 {
        10.0 * (self.autocorrelation[0] / self.error).log10()
    }
}

pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            frame
                .iter()
                .zip(frame.iter().skip(k))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// `a^T R a` with `R` the symmetric Toeplitz matrix built from `r`.
pub fn toeplitz_quadratic(a: &[f64], r: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            acc += ai * aj * r[i.abs_diff(j)];
        }
    }
    acc
}

/// Autocorrelation-method LPC by the Levinson-Durbin recursion.
///
/// An all-zero frame is reported as [`Error::Degenerate`]; callers skip it.
pub fn lpc_analyze(frame: &[f64], order: usize) -> Result<LpcModel> {
    if frame.len() <= order {
        return Err(Error::Shape(format!(
            "LPC order {order} needs more than {} samples",
            frame.len()
        )));
    }
    let r = autocorrelation(frame, order);
    if !(r[0] > 0.0) {
        return Err(Error::Degenerate("LPC of a silent frame".into()));
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = r[i] + (1..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            // perfectly predictable frame: keep the model found so far
            err = f64::MIN_POSITIVE;
            for v in a.iter_mut().skip(i + 1) {
                *v = 0.0;
            }
            break;
        }
    }
    Ok(LpcModel {
        coefficients: a,
        autocorrelation: r,
        error: err,
    })
}
