use fairsample_core::dataset::DataError;
use fairsample_core::decomposition::DecompositionError;
use fairsample_core::experiments::ExperimentError;
use fairsample_core::learners::LearnError;
use fairsample_core::synth::SynthError;
use thiserror::Error;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Invariant(_) => 4,
            Self::Write { .. } => 1,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidSchema(_) | DataError::InvalidPlan(_) | DataError::InvalidFraction(_) => {
                Self::Config(e.to_string())
            }
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::InvalidHyperparameter(_) | LearnError::TaskMismatch { .. } => Self::Config(e.to_string()),
            LearnError::EmptyTrainingSet | LearnError::NoFeatures => Self::Data(e.to_string()),
            LearnError::DimensionMismatch { .. } => Self::Invariant(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => Self::Config(e.to_string()),
            SynthError::Data(d) => d.into(),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidSpec(_)
            | ExperimentError::GridExceedsPool { .. }
            | ExperimentError::PositivePoolShortfall { .. }
            | ExperimentError::MetricTaskMismatch { .. } => Self::Config(e.to_string()),
            ExperimentError::Data(d) => d.into(),
            ExperimentError::Learn(l) => l.into(),
            ExperimentError::Decomposition(
                DecompositionError::AbsoluteLoss | DecompositionError::UnsupportedMetric(_),
            ) => Self::Config(e.to_string()),
            ExperimentError::InvariantViolation(_)
            | ExperimentError::Metric(_)
            | ExperimentError::Decomposition(_)
            | ExperimentError::Estimate(_) => Self::Invariant(e.to_string()),
        }
    }
}
