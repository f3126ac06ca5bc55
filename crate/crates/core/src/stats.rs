//! Order-independent summation and the small descriptive statistics used by
//! the harness.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// Sums the values after sorting them, so the result does not depend on the
/// order in which they were produced. Uses Neumaier compensation.
pub fn sum_sorted(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values.iter() {
        let t = sum + v;
        if libm::fabs(sum) >= libm::fabs(v) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Order-independent mean; `None` for an empty slice.
pub fn mean_sorted(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    Some(sum_sorted(values) / n)
}

/// Mean, standard error and counts over replicate values, skipping undefined
/// entries.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// Sample standard deviation over `sqrt(k_defined)`; needs two defined values.
    pub stderr: Option<f64>,
    /// Sample standard deviation; needs two defined values.
    pub sd: Option<f64>,
    pub k_defined: usize,
    pub k_total: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let mut defined: Vec<f64> = values.iter().flatten().copied().collect();
        let k_defined = defined.len();
        let mean = mean_sorted(&mut defined);
        let sd = match mean {
            Some(mu) if k_defined >= 2 => {
                let mut sq: Vec<f64> = defined.iter().map(|v| (v - mu) * (v - mu)).collect();
                Some(libm::sqrt(sum_sorted(&mut sq) / (k_defined - 1) as f64))
            }
            _ => None,
        };
        Self {
            mean,
            stderr: sd.map(|s| s / libm::sqrt(k_defined as f64)),
            sd,
            k_defined,
            k_total: values.len(),
        }
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]].total_cmp(&values[order[start]]) == Ordering::Equal {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; `None` when fewer than two points or when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}
