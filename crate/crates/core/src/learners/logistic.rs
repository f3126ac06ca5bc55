//! L2-regularized logistic regression fitted by full-batch gradient descent
//! with backtracking (step halving) line search.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    /// L2 penalty on the weights (not on the intercept).
    pub lambda: f64,
    /// Initial step of every line search.
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the gradient's infinity norm falls below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { lambda: 1e-4, learning_rate: 0.1, max_iter: 2000, tol: 1e-6 }
    }
}

impl LogisticParams {
    pub(super) fn validate(&self) -> Result<(), LearnError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(LearnError::InvalidHyperparameter("lambda must be finite and >= 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::InvalidHyperparameter("learning_rate must be positive"));
        }
        if self.max_iter == 0 {
            return Err(LearnError::InvalidHyperparameter("max_iter must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(LearnError::InvalidHyperparameter("tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct LogisticModel {
    weights: Vec<f64>,
    bias: f64,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

fn objective(z: &[f64], y: &[f64], weights: &[f64], lambda: f64) -> f64 {
    let n = z.len() as f64;
    let data: f64 = z.iter().zip(y).map(|(&zi, &yi)| softplus(zi) - yi * zi).sum();
    let penalty: f64 = weights.iter().map(|w| w * w).sum();
    data / n + 0.5 * lambda * penalty
}

fn linear_scores(x: &Matrix, weights: &[f64], bias: f64, out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(x.iter_rows()) {
        *o = row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias;
    }
}

pub(super) fn fit(params: &LogisticParams, x: &Matrix, y: &[f64]) -> LogisticModel {
    let n = x.rows();
    let d = x.cols();
    let inv_n = 1.0 / n as f64;
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut z = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut trial_z = vec![0.0; n];
    let mut trial_w = vec![0.0; d];
    let mut grad_w = vec![0.0; d];
    let mut current = objective(&z, y, &weights, params.lambda);

    for _ in 0..params.max_iter {
        grad_w.iter_mut().zip(&weights).for_each(|(g, w)| *g = params.lambda * w);
        let mut grad_b = 0.0;
        for (row, (&zi, &yi)) in x.iter_rows().zip(z.iter().zip(y)) {
            let r = (sigmoid(zi) - yi) * inv_n;
            grad_b += r;
            grad_w.iter_mut().zip(row).for_each(|(g, xj)| *g += r * xj);
        }
        let norm_inf = grad_w.iter().fold(libm::fabs(grad_b), |m, g| m.max(libm::fabs(*g)));
        if norm_inf < params.tol {
            break;
        }
        let grad_sq = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;

        // z moves along X·g_w + g_b
        linear_scores(x, &grad_w, grad_b, &mut dz);
        let mut step = params.learning_rate;
        let accepted = loop {
            trial_z.iter_mut().zip(z.iter().zip(&dz)).for_each(|(t, (zi, di))| *t = zi - step * di);
            trial_w.iter_mut().zip(weights.iter().zip(&grad_w)).for_each(|(t, (w, g))| *t = w - step * g);
            let value = objective(&trial_z, y, &trial_w, params.lambda);
            if value <= current - 1e-4 * step * grad_sq {
                break Some(value);
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        let Some(value) = accepted else { break };
        core::mem::swap(&mut z, &mut trial_z);
        core::mem::swap(&mut weights, &mut trial_w);
        bias -= step * grad_b;
        current = value;
    }
    LogisticModel { weights, bias }
}

impl LogisticModel {
    pub(super) fn score(&self, row: &[f64]) -> f64 {
        sigmoid(row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }
}
