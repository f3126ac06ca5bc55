//! Sample-size bias (SSB) and underrepresentation bias (URB) estimators.
//!
//! Both compare the discrimination of a target ensemble against a reference
//! ensemble evaluated on the same points: a large training size `M` for SSB,
//! the population group split for URB.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{main_prediction, PredictionEnsemble, TrainingSplit};
use crate::learners::Predictions;
use crate::metrics::{group_cost, MetricError, MetricKind};
use crate::stats::sum_sorted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateKind {
    #[serde(rename = "SSB_M_ensemble")]
    SsbEnsemble,
    #[serde(rename = "SSB_single_set")]
    SsbSingleSet,
    #[serde(rename = "URB_ensemble")]
    UrbEnsemble,
    #[serde(rename = "URB_single_set")]
    UrbSingleSet,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SsbEnsemble => "SSB_M_ensemble",
            Self::SsbSingleSet => "SSB_single_set",
            Self::UrbEnsemble => "URB_ensemble",
            Self::UrbSingleSet => "URB_single_set",
        }
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an ensemble is reduced to one discrimination value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Discrimination of the ensemble's main prediction.
    MainPrediction,
    /// Mean of the individual models' discriminations.
    #[default]
    MeanOverModels,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MainPrediction => "main_prediction",
            Self::MeanOverModels => "mean_over_models",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedCause {
    Target,
    Reference,
    Both,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EstimateError {
    #[error("target and reference are not evaluated on the same set")]
    EvalSetMismatch,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasEstimate {
    pub kind: EstimateKind,
    pub metric: MetricKind,
    /// `None` for single-set estimates, which use one model.
    pub estimator: Option<Estimator>,
    pub value: Option<f64>,
    pub cause: Option<UndefinedCause>,
    pub target: Option<TrainingSplit>,
    pub reference: Option<TrainingSplit>,
    /// Models in the target.
    pub k: usize,
}

fn disc_of(
    metric: MetricKind,
    y: &[f64],
    labels: &[f64],
    scores: &[f64],
    a: &[u8],
) -> Result<Option<f64>, MetricError> {
    Ok(group_cost(metric, y, labels, Some(scores), a)?.disc)
}

/// Discrimination of an ensemble under `estimator`. Majority labels feed the
/// count metrics and mean scores feed AUC and MSE.
pub fn ensemble_disc(ens: &PredictionEnsemble, metric: MetricKind, estimator: Estimator) -> Result<Option<f64>, MetricError> {
    match estimator {
        Estimator::MainPrediction => {
            let main = main_prediction(ens);
            disc_of(metric, ens.eval_y(), &main.labels, &main.scores, ens.eval_a())
        }
        Estimator::MeanOverModels => {
            let mut discs = Vec::with_capacity(ens.k());
            for k in 0..ens.k() {
                match disc_of(metric, ens.eval_y(), ens.labels(k), ens.scores(k), ens.eval_a())? {
                    Some(d) => discs.push(d),
                    None => return Ok(None),
                }
            }
            Ok(Some(sum_sorted(&mut discs) / ens.k() as f64))
        }
    }
}

fn difference(target: Option<f64>, reference: Option<f64>) -> (Option<f64>, Option<UndefinedCause>) {
    match (target, reference) {
        (Some(t), Some(r)) => (Some(t - r), None),
        (None, Some(_)) => (None, Some(UndefinedCause::Target)),
        (Some(_), None) => (None, Some(UndefinedCause::Reference)),
        (None, None) => (None, Some(UndefinedCause::Both)),
    }
}

fn ensemble_estimate(
    kind: EstimateKind,
    target: &PredictionEnsemble,
    reference: &PredictionEnsemble,
    metric: MetricKind,
    estimator: Estimator,
) -> Result<BiasEstimate, EstimateError> {
    if !target.same_eval_set(reference) {
        return Err(EstimateError::EvalSetMismatch);
    }
    let (value, cause) = difference(
        ensemble_disc(target, metric, estimator)?,
        ensemble_disc(reference, metric, estimator)?,
    );
    Ok(BiasEstimate {
        kind,
        metric,
        estimator: Some(estimator),
        value,
        cause,
        target: target.split(),
        reference: reference.split(),
        k: target.k(),
    })
}

fn single_estimate(
    kind: EstimateKind,
    model: &Predictions,
    reference: &PredictionEnsemble,
    metric: MetricKind,
) -> Result<BiasEstimate, EstimateError> {
    if model.len() != reference.n() {
        return Err(EstimateError::EvalSetMismatch);
    }
    let target = disc_of(metric, reference.eval_y(), &model.labels, &model.scores, reference.eval_a())?;
    let (value, cause) = difference(target, ensemble_disc(reference, metric, Estimator::MainPrediction)?);
    Ok(BiasEstimate {
        kind,
        metric,
        estimator: None,
        value,
        cause,
        target: None,
        reference: reference.split(),
        k: 1,
    })
}

/// `Disc(target) - Disc(reference)` where the reference is trained at the
/// largest available size.
pub fn ssb(
    target: &PredictionEnsemble,
    reference: &PredictionEnsemble,
    metric: MetricKind,
    estimator: Estimator,
) -> Result<BiasEstimate, EstimateError> {
    ensemble_estimate(EstimateKind::SsbEnsemble, target, reference, metric, estimator)
}

/// SSB of one model (its predictions on the reference's evaluation set)
/// against the reference main prediction.
pub fn ssb_single(model: &Predictions, reference: &PredictionEnsemble, metric: MetricKind) -> Result<BiasEstimate, EstimateError> {
    single_estimate(EstimateKind::SsbSingleSet, model, reference, metric)
}

/// `Disc(target) - Disc(reference)` where the reference is trained at the
/// population group split and the same total size.
pub fn urb(
    target: &PredictionEnsemble,
    reference: &PredictionEnsemble,
    metric: MetricKind,
    estimator: Estimator,
) -> Result<BiasEstimate, EstimateError> {
    ensemble_estimate(EstimateKind::UrbEnsemble, target, reference, metric, estimator)
}

pub fn urb_single(model: &Predictions, reference: &PredictionEnsemble, metric: MetricKind) -> Result<BiasEstimate, EstimateError> {
    single_estimate(EstimateKind::UrbSingleSet, model, reference, metric)
}
