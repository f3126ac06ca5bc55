//! CART classification tree with Gini impurity.
//!
//! Split candidates are scanned feature by feature (ascending index) and
//! threshold by threshold (ascending); a candidate replaces the incumbent only
//! when its impurity decrease is strictly larger, so ties go to the lowest
//! feature index and then the lowest threshold.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum number of training rows in every leaf.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 8, min_leaf: 5 }
    }
}

impl TreeParams {
    pub(super) fn validate(&self) -> Result<(), LearnError> {
        if self.max_depth == 0 {
            return Err(LearnError::InvalidHyperparameter("max_depth must be >= 1"));
        }
        if self.min_leaf == 0 {
            return Err(LearnError::InvalidHyperparameter("min_leaf must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf { score: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct Tree {
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Sum over children of pos·neg/size; half the weighted Gini times n.
    impurity: f64,
}

/// pos·neg/n, proportional to n times the Gini impurity of a node.
#[inline]
fn node_impurity(pos: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (pos * (n - pos)) as f64 / n as f64
    }
}

fn best_split(params: &TreeParams, x: &Matrix, y: &[f64], rows: &[usize]) -> Option<Candidate> {
    let n = rows.len();
    let pos_total = rows.iter().filter(|&&i| y[i] == 1.0).count();
    let parent = node_impurity(pos_total, n);
    let mut best: Option<Candidate> = None;
    let mut order = rows.to_vec();
    for feature in 0..x.cols() {
        order.sort_by(|&i, &j| x.get(i, feature).total_cmp(&x.get(j, feature)).then(i.cmp(&j)));
        let mut pos_left = 0;
        for split in 1..n {
            if y[order[split - 1]] == 1.0 {
                pos_left += 1;
            }
            if split < params.min_leaf || n - split < params.min_leaf {
                continue;
            }
            let lo = x.get(order[split - 1], feature);
            let hi = x.get(order[split], feature);
            if lo >= hi {
                continue;
            }
            let impurity = node_impurity(pos_left, split) + node_impurity(pos_total - pos_left, n - split);
            if impurity >= parent - 1e-12 {
                continue;
            }
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate { feature, threshold, impurity });
            }
        }
    }
    best
}

fn grow(params: &TreeParams, x: &Matrix, y: &[f64], rows: &[usize], depth: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    let pos = rows.iter().filter(|&&i| y[i] == 1.0).count();
    let score = pos as f64 / rows.len() as f64;
    nodes.push(Node::Leaf { score });
    let pure = pos == 0 || pos == rows.len();
    if pure || depth >= params.max_depth || rows.len() < 2 * params.min_leaf {
        return id;
    }
    let Some(split) = best_split(params, x, y, rows) else {
        return id;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| x.get(i, split.feature) <= split.threshold);
    let left = grow(params, x, y, &left_rows, depth + 1, nodes);
    let right = grow(params, x, y, &right_rows, depth + 1, nodes);
    nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
    id
}

pub(super) fn fit(params: &TreeParams, x: &Matrix, y: &[f64]) -> Tree {
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut nodes = Vec::new();
    grow(params, x, y, &rows, 0, &mut nodes);
    Tree { nodes }
}

impl Tree {
    pub(super) fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { score } => return score,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
