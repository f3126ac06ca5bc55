//! The four experiment families: sample-size sweeps (SSB), group-ratio sweeps
//! (URB), decomposition sweeps and data-collection simulations.
//!
//! Every (grid point, replicate) cell draws from its own RNG stream, derived
//! from the run seed, the family and the cell's group sizes. Cells are handed
//! to an [`Executor`], which may run them in any order or concurrently; results
//! come back in cell order and every reduction sorts before summing, so the
//! output does not depend on the schedule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{holdout_split, population_ratio, DataError, Dataset, Task};
use crate::decomposition::{DecompositionError, TrainingSplit};
use crate::estimators::{BiasEstimate, EstimateError, Estimator};
use crate::learners::{LearnError, Learner};
use crate::metrics::{MetricError, MetricKind};
use crate::stats::Summary;

mod collect;
mod grids;
mod sweeps;

pub use collect::run_collect_sim;
pub use grids::{decomposition_size_grid, default_grid, ratio_grid, ssb_size_grid};
pub use sweeps::{run_decomposition_sweep, run_ssb_sweep, run_urb_sweep};

/// Runs independent jobs `0..n` and returns their results in job order.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SsbSize,
    UrbRatio,
    Decomposition,
    Collect,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SsbSize => "ssb_size",
            Self::UrbRatio => "urb_ratio",
            Self::Decomposition => "decomposition",
            Self::Collect => "collect",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Self::SsbSize => 1,
            Self::UrbRatio => 2,
            Self::Decomposition => 3,
            Self::Collect => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectVariant {
    /// Fixed privileged sample, growing random protected sample.
    #[default]
    MinorityRandom,
    /// Fixed protected sample, growing random privileged sample.
    MajorityRandom,
    /// Fixed privileged sample, growing protected sample drawn only from
    /// protected rows with a positive outcome.
    MinorityPositiveOnly,
}

impl CollectVariant {
    pub const ALL: [CollectVariant; 3] = [Self::MinorityRandom, Self::MajorityRandom, Self::MinorityPositiveOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MinorityRandom => "minority_random",
            Self::MajorityRandom => "majority_random",
            Self::MinorityPositiveOnly => "minority_positive_only",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Self::MinorityRandom => 0,
            Self::MajorityRandom => 1,
            Self::MinorityPositiveOnly => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectOptions {
    /// Size of the sample of the group that stays fixed.
    pub fixed_majority: usize,
    pub variant: CollectVariant,
    /// Evaluate by k-fold cross-validation on each sample instead of on the
    /// held-out set.
    pub cross_validation: bool,
    pub cv_folds: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self { fixed_majority: 100, variant: CollectVariant::MinorityRandom, cross_validation: false, cv_folds: 3 }
    }
}

/// Whether a decomposition sweep varies the training size (SSB) or the group
/// split at a fixed size (URB).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMode {
    #[default]
    Size,
    Ratio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    /// Sizes, ratios or collected counts; `None` picks the family default.
    pub grid: Option<Vec<f64>>,
    /// Replicates per grid point; `None` means 30 (50 for collection).
    pub replicates: Option<usize>,
    pub seed: u64,
    pub learner: Learner,
    pub metrics: Vec<MetricKind>,
    /// `None` means mean over models for sweeps; decomposition rows always
    /// report the mean over models, which is what their terms add up to.
    pub estimator: Option<Estimator>,
    /// Total training size for ratio sweeps (default 1000).
    pub train_size: Option<usize>,
    /// SSB reference size `M` (default: the largest grid size).
    pub reference_size: Option<usize>,
    /// Default size grids stop at this share of the training pool.
    pub max_pool_fraction: f64,
    pub collect: CollectOptions,
    pub decomposition: DecompositionMode,
}

impl SweepSpec {
    pub fn new(family: Family, seed: u64, learner: Learner, metrics: Vec<MetricKind>) -> Self {
        Self {
            family,
            grid: None,
            replicates: None,
            seed,
            learner,
            metrics,
            estimator: None,
            train_size: None,
            reference_size: None,
            max_pool_fraction: 0.8,
            collect: CollectOptions::default(),
            decomposition: DecompositionMode::default(),
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_replicates(mut self, k: usize) -> Self {
        self.replicates = Some(k);
        self
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(if self.family == Family::Collect { 50 } else { 30 })
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator.unwrap_or(Estimator::MeanOverModels)
    }

    pub fn train_size(&self) -> usize {
        self.train_size.unwrap_or(1000)
    }

    /// Whether the grid holds ratios rather than counts.
    pub fn ratio_grid(&self) -> bool {
        match self.family {
            Family::UrbRatio => true,
            Family::Decomposition => self.decomposition == DecompositionMode::Ratio,
            Family::SsbSize | Family::Collect => false,
        }
    }

    /// Checks the parts of the spec that do not depend on the data.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |msg: String| Err(ExperimentError::InvalidSpec(msg));
        if self.replicates() < 2 {
            return invalid("at least 2 replicates are needed for dispersion".into());
        }
        if self.metrics.is_empty() {
            return invalid("no metrics requested".into());
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return invalid(format!("metric {m} listed twice"));
            }
        }
        self.learner.validate().map_err(ExperimentError::Learn)?;
        if !(self.max_pool_fraction > 0.0 && self.max_pool_fraction <= 1.0) {
            return invalid("max_pool_fraction must lie in (0, 1]".into());
        }
        if self.family == Family::Collect && self.collect.cross_validation && self.collect.cv_folds < 2 {
            return invalid("cv_folds must be at least 2".into());
        }
        if self.family == Family::Decomposition {
            if let Some(m) = self.metrics.iter().find(|m| matches!(m, MetricKind::Auc | MetricKind::Sd)) {
                return invalid(format!("metric {m} has no decomposition"));
            }
        }
        if let Some(grid) = &self.grid {
            grids::check_grid(grid, self.ratio_grid())?;
        }
        Ok(())
    }

    pub fn grid_param(&self) -> &'static str {
        match self.family {
            Family::SsbSize => "m",
            Family::UrbRatio => "ratio",
            Family::Decomposition if self.ratio_grid() => "ratio",
            Family::Decomposition => "m",
            Family::Collect if self.collect.variant == CollectVariant::MajorityRandom => "n0",
            Family::Collect => "n1",
        }
    }
}

/// Training pool and evaluation set shared by every cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Protected-group share used as the URB reference.
    pub population_ratio: f64,
}

impl Split {
    /// Stratified held-out split of one dataset; the population ratio is that of the whole dataset.
    pub fn holdout(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<Self, DataError> {
        let (train, test) = holdout_split(ds, test_fraction, seed)?;
        Ok(Self { train, test, population_ratio: population_ratio(ds) })
    }

    /// Separate training pool and evaluation set; the population ratio is the pool's.
    pub fn with_eval(train: Dataset, test: Dataset) -> Self {
        let population_ratio = population_ratio(&train);
        Self { train, test, population_ratio }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("grid point {grid_value} needs {requested} rows of group {group}, the pool has {available}")]
    GridExceedsPool { grid_value: f64, group: u8, requested: usize, available: usize },
    #[error("positive-outcome pool of group {group} has {available} rows, {requested} requested (short by {})", requested - available)]
    PositivePoolShortfall { group: u8, requested: usize, available: usize },
    #[error("metric {metric} does not apply to a {task:?} task")]
    MetricTaskMismatch { metric: MetricKind, task: Task },
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Decomposition of one grid point's gap to the reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapTerms {
    pub bias_delta: Option<f64>,
    pub netvar_delta: Option<f64>,
    pub total: Option<f64>,
}

/// Replicate values of one metric at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricCells {
    pub metric: MetricKind,
    pub disc: Vec<Option<f64>>,
    pub group0: Vec<Option<f64>>,
    pub group1: Vec<Option<f64>>,
    /// SSB or URB against the sweep's reference.
    pub estimate: Option<BiasEstimate>,
    /// The same estimate for each replicate model on its own; empty for
    /// collection runs.
    pub single: Vec<BiasEstimate>,
    pub gap: Option<GapTerms>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    /// Group sizes of the training samples (collection runs: the largest
    /// sample of each group is `fixed` and `value`).
    pub split: TrainingSplit,
    pub metrics: Vec<MetricCells>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub replicates: usize,
    pub learner: &'static str,
    pub reference: Option<TrainingSplit>,
    pub population_ratio: f64,
    pub variant: Option<CollectVariant>,
    pub evaluation: String,
    pub train_pool_rows: usize,
    pub test_rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub family: Family,
    pub grid_param: &'static str,
    /// Estimator column of the summary rows.
    pub estimator: String,
    pub points: Vec<GridPoint>,
    pub provenance: Provenance,
}

/// One summary row per (grid point, metric).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: Family,
    pub grid_param: &'static str,
    pub grid_value: f64,
    pub metric: MetricKind,
    pub estimator: String,
    pub disc: Summary,
    pub group0: Summary,
    pub group1: Summary,
    pub estimate: Option<f64>,
    pub bias_delta: Option<f64>,
    pub netvar_delta: Option<f64>,
}

/// Means, standard errors and undefined counts per grid point and metric.
pub fn aggregate(result: &SweepResult) -> Vec<SweepRow> {
    result
        .points
        .iter()
        .flat_map(|p| {
            p.metrics.iter().map(move |c| SweepRow {
                family: result.family,
                grid_param: result.grid_param,
                grid_value: p.value,
                metric: c.metric,
                estimator: result.estimator.clone(),
                disc: Summary::of(&c.disc),
                group0: Summary::of(&c.group0),
                group1: Summary::of(&c.group1),
                estimate: match result.family {
                    Family::Decomposition => c.gap.and_then(|g| g.total),
                    _ => c.estimate.and_then(|e| e.value),
                },
                bias_delta: c.gap.and_then(|g| g.bias_delta),
                netvar_delta: c.gap.and_then(|g| g.netvar_delta),
            })
        })
        .collect()
}

/// Dispatches on the spec's family.
pub fn run_sweep<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    match spec.family {
        Family::SsbSize => run_ssb_sweep(split, spec, exec),
        Family::UrbRatio => run_urb_sweep(split, spec, exec),
        Family::Decomposition => run_decomposition_sweep(split, spec, exec),
        Family::Collect => run_collect_sim(split, spec, exec),
    }
}

fn check_task(split: &Split, spec: &SweepSpec) -> Result<(), ExperimentError> {
    let task = split.train.task();
    if split.test.task() != task {
        return Err(ExperimentError::InvalidSpec("training pool and evaluation set have different tasks".into()));
    }
    if spec.learner.task() != task {
        return Err(ExperimentError::InvalidSpec(format!(
            "learner {} does not fit a {task:?} task",
            spec.learner.name()
        )));
    }
    if let Some(&metric) = spec.metrics.iter().find(|m| m.is_classification() != (task == Task::Classification)) {
        return Err(ExperimentError::MetricTaskMismatch { metric, task });
    }
    if split.train.n_features() != split.test.n_features() {
        return Err(ExperimentError::InvalidSpec("training pool and evaluation set have different features".into()));
    }
    Ok(())
}
