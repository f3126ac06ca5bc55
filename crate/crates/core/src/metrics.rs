//! Per-group cost metrics and their between-group differences.
//!
//! Count-based metrics are kept as exact fractions until the end: each group
//! value is one division, and the discrimination is the correctly rounded
//! difference of the two fractions. As a consequence `Disc^EO = -Disc^FNR`
//! holds bit for bit.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::stats::sum_sorted;

/// Cost or accuracy metric evaluated per group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    /// False positive rate, `E[Ŷ | Y=0, A=a]`.
    Fpr,
    /// False negative rate, `E[1-Ŷ | Y=1, A=a]`.
    Fnr,
    /// Equal opportunity, reported through the true positive rate.
    Eo,
    /// Zero-one loss (error rate).
    Zol,
    /// Mean squared error of the scores; regression only.
    Mse,
    /// Within-group area under the ROC curve.
    Auc,
    /// Statistical disparity: rate of positive predictions.
    Sd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [Self::Fpr, Self::Fnr, Self::Eo, Self::Zol, Self::Mse, Self::Auc, Self::Sd];
    pub const CLASSIFICATION: [MetricKind; 6] = [Self::Fpr, Self::Fnr, Self::Eo, Self::Zol, Self::Auc, Self::Sd];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fpr => "FPR",
            Self::Fnr => "FNR",
            Self::Eo => "EO",
            Self::Zol => "ZOL",
            Self::Mse => "MSE",
            Self::Auc => "AUC",
            Self::Sd => "SD",
        }
    }

    pub fn is_classification(self) -> bool {
        self != Self::Mse
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown metric `{0}`")]
pub struct UnknownMetric(pub alloc::string::String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| UnknownMetric(s.into()))
    }
}

impl Serialize for MetricKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MetricKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("input lengths differ: {0}")]
    LengthMismatch(&'static str),
    #[error("AUC requested without scores")]
    MissingScores,
    #[error("group values must be 0 or 1")]
    BadGroup,
}

/// Values of one metric for both groups. `None` marks an empty conditioning
/// set (for instance FPR in a group without negatives).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupCostReport {
    pub metric: MetricKind,
    pub value_a0: Option<f64>,
    pub value_a1: Option<f64>,
    /// `value_a1 - value_a0`; defined iff both are.
    pub disc: Option<f64>,
}

impl GroupCostReport {
    pub fn group(&self, group: u8) -> Option<f64> {
        if group == 0 {
            self.value_a0
        } else {
            self.value_a1
        }
    }
}

/// `num / den` with small integer parts.
#[derive(Clone, Copy, Debug)]
struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Self { num, den })
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Correctly rounded `a - b` (for numerators and denominators below 2^26 the
/// cross products are exact in `f64`).
fn fraction_difference(a: Fraction, b: Fraction) -> f64 {
    let num = i128::from(a.num) * i128::from(b.den) - i128::from(b.num) * i128::from(a.den);
    let den = i128::from(a.den) * i128::from(b.den);
    num as f64 / den as f64
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    n: u64,
    negatives: u64,
    positives: u64,
    false_positives: u64,
    true_positives: u64,
    errors: u64,
    predicted_positive: u64,
}

#[inline]
pub(crate) fn is_positive(v: f64) -> bool {
    v > 0.5
}

fn tallies(y: &[f64], labels: &[f64], a: &[u8]) -> [Tally; 2] {
    let mut t = [Tally::default(); 2];
    for ((&yi, &li), &g) in y.iter().zip(labels).zip(a) {
        let c = &mut t[usize::from(g)];
        let (truth, pred) = (is_positive(yi), is_positive(li));
        c.n += 1;
        if truth {
            c.positives += 1;
            c.true_positives += u64::from(pred);
        } else {
            c.negatives += 1;
            c.false_positives += u64::from(pred);
        }
        c.errors += u64::from(truth != pred);
        c.predicted_positive += u64::from(pred);
    }
    t
}

fn fraction_for(metric: MetricKind, t: &Tally) -> Option<Fraction> {
    match metric {
        MetricKind::Fpr => Fraction::new(t.false_positives, t.negatives),
        MetricKind::Fnr => Fraction::new(t.positives - t.true_positives, t.positives),
        MetricKind::Eo => Fraction::new(t.true_positives, t.positives),
        MetricKind::Zol => Fraction::new(t.errors, t.n),
        MetricKind::Sd => Fraction::new(t.predicted_positive, t.n),
        MetricKind::Mse | MetricKind::Auc => unreachable!("not a count metric"),
    }
}

/// Mann-Whitney AUC with mid-ranks for tied scores, as `2U / (2·P·N)`.
fn auc_fraction(y: &[f64], scores: &[f64], a: &[u8], group: u8) -> Option<Fraction> {
    let mut pairs: Vec<(f64, bool)> = y
        .iter()
        .zip(scores)
        .zip(a)
        .filter(|(_, &g)| g == group)
        .map(|((&yi, &s), _)| (s, is_positive(yi)))
        .collect();
    let positives = pairs.iter().filter(|p| p.1).count() as u64;
    let negatives = pairs.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    pairs.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
    // twice the rank sum of positives; a tie block spanning ranks s..=e has mid-rank (s+e)/2
    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 == pairs[start].0 {
            end += 1;
        }
        let block_positives = pairs[start..end].iter().filter(|p| p.1).count() as u64;
        twice_rank_sum += block_positives * (start as u64 + 1 + end as u64);
        start = end;
    }
    let twice_u = twice_rank_sum - positives * (positives + 1);
    Fraction::new(twice_u, 2 * positives * negatives)
}

fn mse(y: &[f64], scores: &[f64], a: &[u8], group: u8) -> Option<f64> {
    let mut sq: Vec<f64> = y
        .iter()
        .zip(scores)
        .zip(a)
        .filter(|(_, &g)| g == group)
        .map(|((&yi, &s), _)| (s - yi) * (s - yi))
        .collect();
    let n = sq.len();
    (n > 0).then(|| sum_sorted(&mut sq) / n as f64)
}

fn report_from_fractions(metric: MetricKind, f0: Option<Fraction>, f1: Option<Fraction>) -> GroupCostReport {
    GroupCostReport {
        metric,
        value_a0: f0.map(Fraction::value),
        value_a1: f1.map(Fraction::value),
        disc: match (f0, f1) {
            (Some(f0), Some(f1)) => Some(fraction_difference(f1, f0)),
            _ => None,
        },
    }
}

fn check(y: &[f64], labels: &[f64], scores: Option<&[f64]>, a: &[u8]) -> Result<(), MetricError> {
    if labels.len() != y.len() {
        return Err(MetricError::LengthMismatch("labels vs outcomes"));
    }
    if a.len() != y.len() {
        return Err(MetricError::LengthMismatch("groups vs outcomes"));
    }
    if scores.is_some_and(|s| s.len() != y.len()) {
        return Err(MetricError::LengthMismatch("scores vs outcomes"));
    }
    if a.iter().any(|&g| g > 1) {
        return Err(MetricError::BadGroup);
    }
    Ok(())
}

fn report(
    metric: MetricKind,
    t: &[Tally; 2],
    y: &[f64],
    labels: &[f64],
    scores: Option<&[f64]>,
    a: &[u8],
) -> Result<GroupCostReport, MetricError> {
    Ok(match metric {
        MetricKind::Auc => {
            let s = scores.ok_or(MetricError::MissingScores)?;
            report_from_fractions(metric, auc_fraction(y, s, a, 0), auc_fraction(y, s, a, 1))
        }
        MetricKind::Mse => {
            let s = scores.unwrap_or(labels);
            let (v0, v1) = (mse(y, s, a, 0), mse(y, s, a, 1));
            GroupCostReport { metric, value_a0: v0, value_a1: v1, disc: v0.zip(v1).map(|(v0, v1)| v1 - v0) }
        }
        _ => report_from_fractions(metric, fraction_for(metric, &t[0]), fraction_for(metric, &t[1])),
    })
}

/// Evaluates one metric for both groups.
///
/// `labels` are thresholded predictions, `scores` continuous ones (needed for
/// AUC; MSE uses them when given and falls back to `labels`).
pub fn group_cost(
    metric: MetricKind,
    y: &[f64],
    labels: &[f64],
    scores: Option<&[f64]>,
    a: &[u8],
) -> Result<GroupCostReport, MetricError> {
    check(y, labels, scores, a)?;
    report(metric, &tallies(y, labels, a), y, labels, scores, a)
}

/// [`group_cost`] for several metrics, sharing one pass over the counts.
pub fn disc_vector(
    y: &[f64],
    labels: &[f64],
    scores: Option<&[f64]>,
    a: &[u8],
    metrics: &[MetricKind],
) -> Result<Vec<GroupCostReport>, MetricError> {
    check(y, labels, scores, a)?;
    let t = tallies(y, labels, a);
    metrics.iter().map(|&m| report(m, &t, y, labels, scores, a)).collect()
}
