//! Ordinary least squares through the normal equations.
//!
//! The Gram matrix (with an intercept column) is factored by Cholesky. When a
//! pivot is degenerate, a ridge jitter is added to the diagonal and the
//! factorization retried, growing the jitter tenfold until it succeeds.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    /// First jitter tried on a degenerate Gram matrix.
    pub ridge: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self { ridge: 1e-8 }
    }
}

impl LinearParams {
    pub(super) fn validate(&self) -> Result<(), LearnError> {
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(LearnError::InvalidHyperparameter("ridge must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct LinearModel {
    coefficients: Vec<f64>,
    intercept: f64,
}

/// Relative pivot size below which the Gram matrix counts as degenerate.
const PIVOT_EPS: f64 = 1e-12;

/// In-place lower Cholesky factor of a row-major `p × p` matrix; `None` when a
/// pivot is degenerate.
fn cholesky(mut g: Vec<f64>, p: usize) -> Option<Vec<f64>> {
    let scale = (0..p).map(|i| g[i * p + i]).fold(1.0, f64::max);
    for j in 0..p {
        let mut diag = g[j * p + j];
        for k in 0..j {
            diag -= g[j * p + k] * g[j * p + k];
        }
        if !(diag > PIVOT_EPS * scale) {
            return None;
        }
        let diag = libm::sqrt(diag);
        g[j * p + j] = diag;
        for i in j + 1..p {
            let mut v = g[i * p + j];
            for k in 0..j {
                v -= g[i * p + k] * g[j * p + k];
            }
            g[i * p + j] = v / diag;
        }
    }
    Some(g)
}

fn solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            z[i] -= l[i * p + k] * z[k];
        }
        z[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            z[i] -= l[k * p + i] * z[k];
        }
        z[i] /= l[i * p + i];
    }
    z
}

pub(super) fn fit(params: &LinearParams, x: &Matrix, y: &[f64]) -> LinearModel {
    let d = x.cols();
    let p = d + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut aug = vec![0.0; p];
    for (row, &yi) in x.iter_rows().zip(y) {
        aug[..d].copy_from_slice(row);
        aug[d] = 1.0;
        for i in 0..p {
            rhs[i] += aug[i] * yi;
            for j in 0..=i {
                gram[i * p + j] += aug[i] * aug[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }

    let mut jitter = 0.0;
    let factor = loop {
        let mut g = gram.clone();
        for i in 0..p {
            g[i * p + i] += jitter;
        }
        if let Some(l) = cholesky(g, p) {
            break l;
        }
        jitter = if jitter == 0.0 { params.ridge } else { jitter * 10.0 };
    };
    let beta = solve(&factor, p, &rhs);
    LinearModel { coefficients: beta[..d].to_vec(), intercept: beta[d] }
}

impl LinearModel {
    pub(super) fn score(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs = [-2.0, -1.0, 0.5, 3.0, 4.0];
        let x = Matrix::from_vec(5, 1, xs.to_vec());
        let y: Vec<f64> = xs.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = fit(&LinearParams::default(), &x, &y);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-8);
        assert!((m.intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn singular_gram_gets_jitter() {
        // duplicated column and fewer rows than unknowns
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]);
        let m = fit(&LinearParams::default(), &x, &[3.0, 5.0]);
        assert!(m.coefficients.iter().all(|c| c.is_finite()));
        assert!((m.score(&[1.0, 1.0, 0.0]) - 3.0).abs() < 1e-5);
        assert!((m.score(&[2.0, 2.0, 0.0]) - 5.0).abs() < 1e-5);
    }

    #[test]
    fn single_row() {
        let x = Matrix::from_vec(1, 2, vec![0.3, -0.7]);
        let m = fit(&LinearParams::default(), &x, &[4.0]);
        assert!((m.score(&[0.3, -0.7]) - 4.0).abs() < 1e-5);
    }
}
