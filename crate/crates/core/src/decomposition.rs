//! Main prediction and the noise/bias/variance decomposition of loss, group
//! cost and discrimination over an ensemble of models.
//!
//! Noise is taken to be zero throughout (the optimal prediction is the
//! observed outcome), but it is still carried in every report.
//!
//! Squared loss decomposes with unit factors: `loss = B + V`. For zero-one
//! loss on binary labels the variance enters with a sign, `loss = B + c·V`
//! where `c = +1` when the main prediction is correct and `-1` otherwise.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::Predictions;
use crate::metrics::{self, is_positive, MetricError, MetricKind};
use crate::stats::sum_sorted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    ZeroOne,
    Absolute,
}

/// Group sizes of the training samples behind an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrainingSplit {
    pub m0: usize,
    pub m1: usize,
}

impl TrainingSplit {
    pub fn new(m0: usize, m1: usize) -> Self {
        Self { m0, m1 }
    }

    pub fn m(&self) -> usize {
        self.m0 + self.m1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("ensemble has no models")]
    EmptyEnsemble,
    #[error("model {model} predicts {found} points, the evaluation set has {expected}")]
    LengthMismatch { model: usize, expected: usize, found: usize },
    #[error("absolute loss has no exact decomposition")]
    AbsoluteLoss,
    #[error("ensembles are not evaluated on the same set")]
    EvalSetMismatch,
    #[error("metric {0} cannot be decomposed")]
    UnsupportedMetric(MetricKind),
    #[error("group {0} has no evaluation points")]
    EmptyGroup(u8),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Predictions of K models on one evaluation set.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionEnsemble {
    scores: Vec<f64>,
    labels: Vec<f64>,
    k: usize,
    n: usize,
    eval_y: Vec<f64>,
    eval_a: Vec<u8>,
    loss: LossKind,
    split: Option<TrainingSplit>,
}

impl PredictionEnsemble {
    pub fn from_predictions(
        predictions: &[Predictions],
        eval_y: &[f64],
        eval_a: &[u8],
        loss: LossKind,
    ) -> Result<Self, DecompositionError> {
        if predictions.is_empty() {
            return Err(DecompositionError::EmptyEnsemble);
        }
        let n = eval_y.len();
        if eval_a.len() != n {
            return Err(MetricError::LengthMismatch("groups vs outcomes").into());
        }
        if eval_a.iter().any(|&g| g > 1) {
            return Err(MetricError::BadGroup.into());
        }
        let mut scores = Vec::with_capacity(n * predictions.len());
        let mut labels = Vec::with_capacity(n * predictions.len());
        for (model, p) in predictions.iter().enumerate() {
            if p.scores.len() != n || p.labels.len() != n {
                return Err(DecompositionError::LengthMismatch { model, expected: n, found: p.scores.len() });
            }
            scores.extend_from_slice(&p.scores);
            labels.extend_from_slice(&p.labels);
        }
        Ok(Self { scores, labels, k: predictions.len(), n, eval_y: eval_y.to_vec(), eval_a: eval_a.to_vec(), loss, split: None })
    }

    pub fn with_split(mut self, split: TrainingSplit) -> Self {
        self.split = Some(split);
        self
    }

    /// Number of models.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of evaluation points.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scores(&self, model: usize) -> &[f64] {
        &self.scores[model * self.n..(model + 1) * self.n]
    }

    pub fn labels(&self, model: usize) -> &[f64] {
        &self.labels[model * self.n..(model + 1) * self.n]
    }

    pub fn eval_y(&self) -> &[f64] {
        &self.eval_y
    }

    pub fn eval_a(&self) -> &[u8] {
        &self.eval_a
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn split(&self) -> Option<TrainingSplit> {
        self.split
    }

    pub fn same_eval_set(&self, other: &Self) -> bool {
        self.eval_a == other.eval_a
            && self.eval_y.len() == other.eval_y.len()
            && self.eval_y.iter().zip(&other.eval_y).all(|(p, q)| p.to_bits() == q.to_bits())
    }

    fn point_scores(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.k()).map(move |k| self.scores[k * self.n + i])
    }

    fn point_labels(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.k()).map(move |k| self.labels[k * self.n + i])
    }

    fn mean_score(&self, i: usize) -> f64 {
        let mut s: Vec<f64> = self.point_scores(i).collect();
        sum_sorted(&mut s) / self.k() as f64
    }

    /// Majority label at point `i`; a tie goes to 1 iff the mean score is at least 0.5.
    fn majority(&self, i: usize) -> f64 {
        let ones = self.point_labels(i).filter(|&l| is_positive(l)).count();
        let k = self.k();
        match (2 * ones).cmp(&k) {
            core::cmp::Ordering::Greater => 1.0,
            core::cmp::Ordering::Less => 0.0,
            core::cmp::Ordering::Equal => f64::from(u8::from(self.mean_score(i) >= 0.5)),
        }
    }
}

/// Per-point main prediction of an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct MainPrediction {
    /// Mean model score.
    pub scores: Vec<f64>,
    /// Mean label for squared loss, majority vote otherwise.
    pub labels: Vec<f64>,
}

pub fn main_prediction(ens: &PredictionEnsemble) -> MainPrediction {
    let scores: Vec<f64> = (0..ens.n).map(|i| ens.mean_score(i)).collect();
    let labels = match ens.loss {
        LossKind::Squared => (0..ens.n)
            .map(|i| {
                let mut l: Vec<f64> = ens.point_labels(i).collect();
                sum_sorted(&mut l) / ens.k() as f64
            })
            .collect(),
        LossKind::ZeroOne | LossKind::Absolute => (0..ens.n).map(|i| ens.majority(i)).collect(),
    };
    MainPrediction { scores, labels }
}

/// Exact counts behind a zero-one point decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZeroOneTally {
    /// Models whose label differs from the outcome.
    pub model_errors: usize,
    /// Models whose label differs from the main prediction.
    pub disagreements: usize,
    pub models: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointDecomposition {
    pub main_prediction: f64,
    pub noise: f64,
    pub bias: f64,
    pub variance: f64,
    /// Factor applied to the variance; 1 for squared loss, ±1 for zero-one.
    pub net_factor: f64,
    /// Mean loss of the individual models.
    pub mean_loss: f64,
    pub tally: Option<ZeroOneTally>,
}

fn squared_point(ens: &PredictionEnsemble, i: usize) -> PointDecomposition {
    let y = ens.eval_y[i];
    let k = ens.k() as f64;
    let main = ens.mean_score(i);
    let mut var: Vec<f64> = ens.point_scores(i).map(|s| (s - main) * (s - main)).collect();
    let mut loss: Vec<f64> = ens.point_scores(i).map(|s| (s - y) * (s - y)).collect();
    PointDecomposition {
        main_prediction: main,
        noise: 0.0,
        bias: (main - y) * (main - y),
        variance: sum_sorted(&mut var) / k,
        net_factor: 1.0,
        mean_loss: sum_sorted(&mut loss) / k,
        tally: None,
    }
}

fn zero_one_point(ens: &PredictionEnsemble, i: usize) -> PointDecomposition {
    let truth = is_positive(ens.eval_y[i]);
    let main = ens.majority(i);
    let main_positive = is_positive(main);
    let model_errors = ens.point_labels(i).filter(|&l| is_positive(l) != truth).count();
    let disagreements = ens.point_labels(i).filter(|&l| is_positive(l) != main_positive).count();
    let models = ens.k();
    let biased = main_positive != truth;
    PointDecomposition {
        main_prediction: main,
        noise: 0.0,
        bias: f64::from(u8::from(biased)),
        variance: disagreements as f64 / models as f64,
        net_factor: if biased { -1.0 } else { 1.0 },
        mean_loss: model_errors as f64 / models as f64,
        tally: Some(ZeroOneTally { model_errors, disagreements, models }),
    }
}

fn points_with(ens: &PredictionEnsemble, loss: LossKind) -> Result<Vec<PointDecomposition>, DecompositionError> {
    match loss {
        LossKind::Squared => Ok((0..ens.n).map(|i| squared_point(ens, i)).collect()),
        LossKind::ZeroOne => Ok((0..ens.n).map(|i| zero_one_point(ens, i)).collect()),
        LossKind::Absolute => Err(DecompositionError::AbsoluteLoss),
    }
}

/// Decomposes the mean model loss at every evaluation point under the
/// ensemble's loss.
pub fn decompose_points(ens: &PredictionEnsemble) -> Result<Vec<PointDecomposition>, DecompositionError> {
    points_with(ens, ens.loss)
}

/// Which evaluation points a group cost averages over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    AllPoints,
    NegativeOutcome,
    PositiveOutcome,
}

impl Conditioning {
    fn admits(self, y: f64) -> bool {
        match self {
            Self::AllPoints => true,
            Self::NegativeOutcome => !is_positive(y),
            Self::PositiveOutcome => is_positive(y),
        }
    }
}

fn decomposition_setup(metric: MetricKind) -> Result<(LossKind, Conditioning, bool), DecompositionError> {
    // (loss, conditioning, whether the cost is one minus the mean loss)
    match metric {
        MetricKind::Mse => Ok((LossKind::Squared, Conditioning::AllPoints, false)),
        MetricKind::Zol => Ok((LossKind::ZeroOne, Conditioning::AllPoints, false)),
        MetricKind::Fpr => Ok((LossKind::ZeroOne, Conditioning::NegativeOutcome, false)),
        MetricKind::Fnr => Ok((LossKind::ZeroOne, Conditioning::PositiveOutcome, false)),
        MetricKind::Eo => Ok((LossKind::ZeroOne, Conditioning::PositiveOutcome, true)),
        MetricKind::Auc | MetricKind::Sd => Err(DecompositionError::UnsupportedMetric(metric)),
    }
}

/// Group-level terms: `cost = offset + noise + bias + net_variance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupTerms {
    /// Mean over models of the group cost.
    pub cost: f64,
    /// 1 for costs defined as one minus an error rate (EO), else 0.
    pub offset: f64,
    pub noise: f64,
    pub bias: f64,
    pub net_variance: f64,
    /// Number of evaluation points averaged over.
    pub points: usize,
}

/// Group 1 minus group 0, term by term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermDifference {
    pub cost: f64,
    pub noise: f64,
    pub bias: f64,
    pub net_variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub metric: MetricKind,
    pub loss: LossKind,
    pub conditioning: Conditioning,
    /// `None` when the group has no point in the conditioning subset.
    pub group0: Option<GroupTerms>,
    pub group1: Option<GroupTerms>,
    pub difference: Option<TermDifference>,
}

impl DecompositionReport {
    pub fn group(&self, group: u8) -> Option<&GroupTerms> {
        if group == 0 {
            self.group0.as_ref()
        } else {
            self.group1.as_ref()
        }
    }
}

fn group_terms(
    ens: &PredictionEnsemble,
    points: &[PointDecomposition],
    group: u8,
    conditioning: Conditioning,
    complement: bool,
) -> Option<GroupTerms> {
    let members: Vec<usize> = (0..ens.n)
        .filter(|&i| ens.eval_a[i] == group && conditioning.admits(ens.eval_y[i]))
        .collect();
    let count = members.len();
    if count == 0 {
        return None;
    }
    let sign = if complement { -1.0 } else { 1.0 };
    let (loss, bias, net_variance) = if points[members[0]].tally.is_some() {
        // integer numerators keep the zero-one terms exact up to one rounding
        let (mut errors, mut biased, mut net) = (0u64, 0u64, 0i64);
        for &i in &members {
            let t = points[i].tally.expect("zero-one tally");
            errors += t.model_errors as u64;
            biased += u64::from(points[i].bias > 0.5);
            net += if points[i].bias > 0.5 { -(t.disagreements as i64) } else { t.disagreements as i64 };
        }
        let scale = (ens.k() * count) as f64;
        (errors as f64 / scale, biased as f64 / count as f64, net as f64 / scale)
    } else {
        let mut loss: Vec<f64> = members.iter().map(|&i| points[i].mean_loss).collect();
        let mut bias: Vec<f64> = members.iter().map(|&i| points[i].bias).collect();
        let mut var: Vec<f64> = members.iter().map(|&i| points[i].net_factor * points[i].variance).collect();
        let c = count as f64;
        (sum_sorted(&mut loss) / c, sum_sorted(&mut bias) / c, sum_sorted(&mut var) / c)
    };
    let offset = if complement { 1.0 } else { 0.0 };
    Some(GroupTerms {
        cost: offset + sign * loss,
        offset,
        noise: 0.0,
        bias: sign * bias,
        net_variance: sign * net_variance,
        points: count,
    })
}

/// Decomposes the per-group cost of `metric` (MSE, ZOL, FPR, FNR or EO) into
/// noise, bias and net variance, averaged over the metric's conditioning
/// subset of each group.
pub fn decompose_cost(ens: &PredictionEnsemble, metric: MetricKind) -> Result<DecompositionReport, DecompositionError> {
    let (loss, conditioning, complement) = decomposition_setup(metric)?;
    let points = points_with(ens, loss)?;
    let group0 = group_terms(ens, &points, 0, conditioning, complement);
    let group1 = group_terms(ens, &points, 1, conditioning, complement);
    let difference = group0.zip(group1).map(|(g0, g1)| TermDifference {
        cost: g1.cost - g0.cost,
        noise: g1.noise - g0.noise,
        bias: g1.bias - g0.bias,
        net_variance: g1.net_variance - g0.net_variance,
    });
    Ok(DecompositionReport { metric, loss, conditioning, group0, group1, difference })
}

/// Change of one group's terms between two ensembles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermDelta {
    pub bias: f64,
    pub net_variance: f64,
}

/// Bias and variance decomposition of the discrimination gap between a
/// target ensemble and a reference ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasGapReport {
    pub metric: MetricKind,
    pub target: DecompositionReport,
    pub reference: DecompositionReport,
    pub group0_delta: Option<TermDelta>,
    pub group1_delta: Option<TermDelta>,
    /// `(B̄1 - B̄0)(target) - (B̄1 - B̄0)(reference)`.
    pub bias_delta: Option<f64>,
    pub netvar_delta: Option<f64>,
    /// Gap of the mean-over-models discrimination.
    pub total: Option<f64>,
    /// Discrimination of each single target model minus that of the reference main prediction.
    pub single_model_gaps: Vec<Option<f64>>,
}

fn delta(target: Option<GroupTerms>, reference: Option<GroupTerms>) -> Option<TermDelta> {
    let (t, r) = target.zip(reference)?;
    Some(TermDelta { bias: t.bias - r.bias, net_variance: t.net_variance - r.net_variance })
}

pub fn decompose_bias_gap(
    target: &PredictionEnsemble,
    reference: &PredictionEnsemble,
    metric: MetricKind,
) -> Result<BiasGapReport, DecompositionError> {
    if !target.same_eval_set(reference) {
        return Err(DecompositionError::EvalSetMismatch);
    }
    let t = decompose_cost(target, metric)?;
    let r = decompose_cost(reference, metric)?;
    let diff = t.difference.zip(r.difference);

    let main = main_prediction(reference);
    let reference_disc = metrics::group_cost(metric, &reference.eval_y, &main.labels, Some(&main.scores), &reference.eval_a)?.disc;
    let single_model_gaps = (0..target.k())
        .map(|k| {
            let disc = metrics::group_cost(metric, &target.eval_y, target.labels(k), Some(target.scores(k)), &target.eval_a)
                .map(|r| r.disc)?;
            Ok(disc.zip(reference_disc).map(|(d, rd)| d - rd))
        })
        .collect::<Result<Vec<_>, MetricError>>()?;

    Ok(BiasGapReport {
        metric,
        group0_delta: delta(t.group0, r.group0),
        group1_delta: delta(t.group1, r.group1),
        bias_delta: diff.map(|(td, rd)| td.bias - rd.bias),
        netvar_delta: diff.map(|(td, rd)| td.net_variance - rd.net_variance),
        total: diff.map(|(td, rd)| td.cost - rd.cost),
        target: t,
        reference: r,
        single_model_gaps,
    })
}

/// Absolute-loss terms of one group for the statistical disparity bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdComponents {
    pub noise: f64,
    pub bias: f64,
    /// Mean of `(1 - 2B)·V` over the group.
    pub net_variance: f64,
    pub points: usize,
}

/// The error of the ensemble's statistical disparity against that of the
/// outcomes, with the noise/bias/variance bounds evaluated as written. The
/// inequality is reported in `within`, never enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdBounds {
    pub group0: SdComponents,
    pub group1: SdComponents,
    pub upper: f64,
    pub lower: f64,
    /// `|Disc^SD(Ŷ) - Disc^SD(Y)|` with `Ŷ` averaged over the models.
    pub observed: f64,
    pub within: bool,
}

fn sd_group(ens: &PredictionEnsemble, group: u8) -> Result<(SdComponents, i64), DecompositionError> {
    let k = ens.k();
    let (mut count, mut biased, mut net, mut excess) = (0usize, 0u64, 0i64, 0i64);
    for i in (0..ens.n).filter(|&i| ens.eval_a[i] == group) {
        let truth = is_positive(ens.eval_y[i]);
        let main = is_positive(ens.majority(i));
        let ones = ens.point_labels(i).filter(|&l| is_positive(l)).count() as i64;
        let disagreements = if main { k as i64 - ones } else { ones };
        let b = main != truth;
        count += 1;
        biased += u64::from(b);
        net += if b { -disagreements } else { disagreements };
        excess += ones - if truth { k as i64 } else { 0 };
    }
    if count == 0 {
        return Err(DecompositionError::EmptyGroup(group));
    }
    let components = SdComponents {
        noise: 0.0,
        bias: biased as f64 / count as f64,
        net_variance: net as f64 / (k * count) as f64,
        points: count,
    };
    Ok((components, excess))
}

pub fn sd_bounds(ens: &PredictionEnsemble) -> Result<SdBounds, DecompositionError> {
    let (g0, e0) = sd_group(ens, 0)?;
    let (g1, e1) = sd_group(ens, 1)?;
    let dn = g1.noise - g0.noise;
    let db = g1.bias - g0.bias;
    let dv = g1.net_variance - g0.net_variance;
    let upper = dn + db + dv;
    let lower = (dn - db - dv).max(db - dn - dv).max(dv - db - dn);
    // (e1/(K n1) - e0/(K n0)) as one fraction
    let k = ens.k() as i128;
    let (n0, n1) = (g0.points as i128, g1.points as i128);
    let num = i128::from(e1) * n0 - i128::from(e0) * n1;
    let observed = num.unsigned_abs() as f64 / (k * n0 * n1) as f64;
    Ok(SdBounds { group0: g0, group1: g1, upper, lower, observed, within: lower <= observed && observed <= upper })
}
