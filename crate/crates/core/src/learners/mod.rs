//! Small deterministic learners behind one interface.
//!
//! Every fitted model produces continuous scores and labels. For
//! classification the scores lie in `[0, 1]` and a label is `1` iff its score
//! reaches the learner's threshold; for regression scores and labels are the
//! same real predictions.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Task};
use crate::matrix::Matrix;

mod knn;
mod linear;
mod logistic;
mod tree;

pub use knn::KnnParams;
pub use linear::LinearParams;
pub use logistic::LogisticParams;
pub use tree::TreeParams;

pub(crate) use logistic::sigmoid as logistic_sigmoid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set has no features")]
    NoFeatures,
    #[error("{learner} cannot be trained on a {task:?} task")]
    TaskMismatch { learner: &'static str, task: Task },
    #[error("feature dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression(LogisticParams),
    DecisionTree(TreeParams),
    Knn(KnnParams),
    LinearRegression(LinearParams),
}

/// A learning algorithm with its hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Learner {
    pub kind: LearnerKind,
    /// Classification threshold on scores.
    pub threshold: f64,
}

impl Default for Learner {
    fn default() -> Self {
        Self::logistic_regression()
    }
}

impl Learner {
    pub fn new(kind: LearnerKind) -> Self {
        Self { kind, threshold: 0.5 }
    }

    pub fn logistic_regression() -> Self {
        Self::new(LearnerKind::LogisticRegression(LogisticParams::default()))
    }

    pub fn decision_tree() -> Self {
        Self::new(LearnerKind::DecisionTree(TreeParams::default()))
    }

    pub fn knn() -> Self {
        Self::new(LearnerKind::Knn(KnnParams::default()))
    }

    pub fn linear_regression() -> Self {
        Self::new(LearnerKind::LinearRegression(LinearParams::default()))
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LearnerKind::LogisticRegression(_) => "logistic_regression",
            LearnerKind::DecisionTree(_) => "decision_tree",
            LearnerKind::Knn(_) => "knn",
            LearnerKind::LinearRegression(_) => "linear_regression",
        }
    }

    pub fn task(&self) -> Task {
        match self.kind {
            LearnerKind::LinearRegression(_) => Task::Regression,
            _ => Task::Classification,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(LearnError::InvalidHyperparameter("threshold must lie in (0, 1)"));
        }
        match &self.kind {
            LearnerKind::LogisticRegression(p) => p.validate(),
            LearnerKind::DecisionTree(p) => p.validate(),
            LearnerKind::Knn(p) => p.validate(),
            LearnerKind::LinearRegression(p) => p.validate(),
        }
    }
}

/// Extension point for learners beyond the built-in ones.
pub trait Learn {
    fn task(&self) -> Task;
    fn fit(&self, train: &Dataset) -> Result<FittedModel, LearnError>;
}

impl Learn for Learner {
    fn task(&self) -> Task {
        Learner::task(self)
    }

    fn fit(&self, train: &Dataset) -> Result<FittedModel, LearnError> {
        fit(self, train)
    }
}

/// Scoring function of an externally supplied model.
pub trait Score: Send + Sync {
    fn score(&self, row: &[f64]) -> f64;
}

#[derive(Clone)]
enum Params {
    Constant(f64),
    Logistic(logistic::LogisticModel),
    Tree(tree::Tree),
    Knn(knn::KnnModel),
    Linear(linear::LinearModel),
    Custom(Arc<dyn Score>),
}

impl fmt::Debug for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Params::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Params::Logistic(m) => m.fmt(f),
            Params::Tree(t) => t.fmt(f),
            Params::Knn(m) => m.fmt(f),
            Params::Linear(m) => m.fmt(f),
            Params::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A trained model. Prediction is a pure function of the model and the input.
#[derive(Clone, Debug)]
pub struct FittedModel {
    params: Params,
    n_features: usize,
    threshold: f64,
    task: Task,
    fingerprint: u64,
}

/// Scores and labels for a batch of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub scores: Vec<f64>,
    pub labels: Vec<f64>,
}

impl Predictions {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// FNV-1a over the training row ids.
fn fingerprint(train: &Dataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &id in train.row_ids() {
        for b in (id as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Trains `learner` on `train`.
///
/// A classification sample holding a single outcome value yields a constant
/// model scoring that value everywhere.
pub fn fit(learner: &Learner, train: &Dataset) -> Result<FittedModel, LearnError> {
    learner.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if train.n_features() == 0 {
        return Err(LearnError::NoFeatures);
    }
    if train.task() != learner.task() {
        return Err(LearnError::TaskMismatch { learner: learner.name(), task: train.task() });
    }
    let x = train.x();
    let y = train.y();
    let single_class = learner.task() == Task::Classification && y.iter().all(|&v| v == y[0]);
    let params = if single_class {
        Params::Constant(y[0])
    } else {
        match &learner.kind {
            LearnerKind::LogisticRegression(p) => Params::Logistic(logistic::fit(p, x, y)),
            LearnerKind::DecisionTree(p) => Params::Tree(tree::fit(p, x, y)),
            LearnerKind::Knn(p) => Params::Knn(knn::fit(p, x, y)),
            LearnerKind::LinearRegression(p) => Params::Linear(linear::fit(p, x, y)),
        }
    };
    Ok(FittedModel {
        params,
        n_features: train.n_features(),
        threshold: learner.threshold,
        task: learner.task(),
        fingerprint: fingerprint(train),
    })
}

impl FittedModel {
    /// Wraps an external scorer. Classification scorers must return values in `[0, 1]`.
    pub fn from_scorer(scorer: Box<dyn Score>, n_features: usize, task: Task, threshold: f64) -> Self {
        Self { params: Params::Custom(Arc::from(scorer)), n_features, threshold, task, fingerprint: 0 }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Hash of the row ids the model was trained on.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.params, Params::Constant(_))
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            Params::Constant(c) => *c,
            Params::Logistic(m) => m.score(row),
            Params::Tree(t) => t.score(row),
            Params::Knn(m) => m.score(row),
            Params::Linear(m) => m.score(row),
            Params::Custom(s) => s.score(row),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Predictions, LearnError> {
        if x.cols() != self.n_features {
            return Err(LearnError::DimensionMismatch { expected: self.n_features, found: x.cols() });
        }
        let scores: Vec<f64> = x.iter_rows().map(|row| self.score_row(row)).collect();
        let labels = match self.task {
            Task::Classification => {
                scores.iter().map(|&s| if s >= self.threshold { 1.0 } else { 0.0 }).collect()
            }
            Task::Regression => scores.clone(),
        };
        Ok(Predictions { scores, labels })
    }
}

pub fn predict(model: &FittedModel, x: &Matrix) -> Result<Predictions, LearnError> {
    model.predict(x)
}
