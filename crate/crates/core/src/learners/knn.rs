use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

impl KnnParams {
    pub(super) fn validate(&self) -> Result<(), LearnError> {
        if self.k == 0 {
            return Err(LearnError::InvalidHyperparameter("k must be >= 1"));
        }
        Ok(())
    }
}

/// Euclidean k-nearest-neighbour scorer; the score is the share of positive
/// labels among the neighbours. Equal distances go to the lower training row.
#[derive(Clone, Debug, PartialEq)]
pub(super) struct KnnModel {
    x: Matrix,
    y: Vec<f64>,
    k: usize,
}

pub(super) fn fit(params: &KnnParams, x: &Matrix, y: &[f64]) -> KnnModel {
    KnnModel { x: x.clone(), y: y.to_vec(), k: params.k.min(y.len()) }
}

impl KnnModel {
    pub(super) fn score(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let by_distance_then_row = |p: &(f64, usize), q: &(f64, usize)| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance_then_row);
        }
        let positives: f64 = dist[..self.k].iter().map(|&(_, i)| self.y[i]).sum();
        positives / self.k as f64
    }
}
