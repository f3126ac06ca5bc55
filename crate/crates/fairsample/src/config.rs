//! The JSON run configuration.
//!
//! Unknown keys are rejected everywhere. Relative paths are taken relative to
//! the directory of the config file.

use std::path::{Path, PathBuf};

use fairsample_core::estimators::Estimator;
use fairsample_core::experiments::{CollectOptions, DecompositionMode, Family, SweepSpec};
use fairsample_core::learners::{KnnParams, LearnerKind, LinearParams, LogisticParams, TreeParams};
use fairsample_core::synth::SynthSpec;
use fairsample_core::{Learner, MetricKind, Task};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub csv: PathBuf,
    pub schema: PathBuf,
}

/// A second file encoded with the training file's statistics and used as the
/// evaluation set instead of a held-out split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSource {
    pub csv: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerName {
    LogisticRegression,
    DecisionTree,
    Knn,
    LinearRegression,
}

/// Learner kind with flat optional hyperparameters; unset ones keep their
/// defaults and ones that do not belong to the kind are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_leaf: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

impl LearnerConfig {
    pub fn of(kind: LearnerName) -> Self {
        Self {
            kind,
            threshold: None,
            lambda: None,
            learning_rate: None,
            max_iter: None,
            tol: None,
            max_depth: None,
            min_leaf: None,
            k: None,
            ridge: None,
        }
    }

    pub fn build(&self) -> Result<Learner, CliError> {
        let set: [(&str, bool); 8] = [
            ("lambda", self.lambda.is_some()),
            ("learning_rate", self.learning_rate.is_some()),
            ("max_iter", self.max_iter.is_some()),
            ("tol", self.tol.is_some()),
            ("max_depth", self.max_depth.is_some()),
            ("min_leaf", self.min_leaf.is_some()),
            ("k", self.k.is_some()),
            ("ridge", self.ridge.is_some()),
        ];
        let allowed: &[&str] = match self.kind {
            LearnerName::LogisticRegression => &["lambda", "learning_rate", "max_iter", "tol"],
            LearnerName::DecisionTree => &["max_depth", "min_leaf"],
            LearnerName::Knn => &["k"],
            LearnerName::LinearRegression => &["ridge"],
        };
        if let Some((name, _)) = set.iter().find(|(name, on)| *on && !allowed.contains(name)) {
            return Err(CliError::Config(format!("learner {:?} has no hyperparameter `{name}`", self.kind)));
        }
        if self.kind == LearnerName::LinearRegression && self.threshold.is_some() {
            return Err(CliError::Config("linear_regression takes no threshold".into()));
        }
        let kind = match self.kind {
            LearnerName::LogisticRegression => {
                let d = LogisticParams::default();
                LearnerKind::LogisticRegression(LogisticParams {
                    lambda: self.lambda.unwrap_or(d.lambda),
                    learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
                    max_iter: self.max_iter.unwrap_or(d.max_iter),
                    tol: self.tol.unwrap_or(d.tol),
                })
            }
            LearnerName::DecisionTree => {
                let d = TreeParams::default();
                LearnerKind::DecisionTree(TreeParams {
                    max_depth: self.max_depth.unwrap_or(d.max_depth),
                    min_leaf: self.min_leaf.unwrap_or(d.min_leaf),
                })
            }
            LearnerName::Knn => LearnerKind::Knn(KnnParams { k: self.k.unwrap_or(KnnParams::default().k) }),
            LearnerName::LinearRegression => {
                LearnerKind::LinearRegression(LinearParams { ridge: self.ridge.unwrap_or(LinearParams::default().ridge) })
            }
        };
        let mut learner = Learner::new(kind);
        if let Some(t) = self.threshold {
            learner = learner.with_threshold(t);
        }
        learner.validate()?;
        Ok(learner)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pool_fraction: Option<f64>,
    #[serde(default)]
    pub collect: CollectOptions,
    #[serde(default)]
    pub decomposition: DecompositionMode,
}

fn default_test_fraction() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_data: Option<EvalSource>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerConfig>,
    /// Defaults to every metric of the data's task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads and parses a config file; its paths are then resolved against the file's directory.
    pub fn read(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either `data` or `synth`, not both".into())),
            (None, None) => return Err(CliError::Config("one of `data` or `synth` is required".into())),
            (None, Some(s)) => s.validate()?,
            (Some(_), None) => {}
        }
        if self.eval_data.is_none() && !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Config("test_fraction must lie in (0, 1)".into()));
        }
        let learner = self.learner()?;
        if let Some(task) = self.synth.as_ref().map(SynthSpec::task) {
            if learner.task() != task {
                return Err(CliError::Config(format!("learner {} does not fit a {task:?} task", learner.name())));
            }
        }
        if let Some(m) = &self.metrics {
            if m.is_empty() {
                return Err(CliError::Config("`metrics` is empty".into()));
            }
            if let Some(bad) = m.iter().find(|m| m.is_classification() != (learner.task() == Task::Classification)) {
                return Err(CliError::Config(format!("metric {bad} does not apply to learner {}", learner.name())));
            }
        }
        if let Some(s) = &self.sweep {
            self.sweep_spec(s, &self.metrics_for(learner.task()))?.validate()?;
        }
        Ok(())
    }

    pub fn learner(&self) -> Result<Learner, CliError> {
        self.learner.clone().unwrap_or(LearnerConfig::of(LearnerName::LogisticRegression)).build()
    }

    pub fn metrics_for(&self, task: Task) -> Vec<MetricKind> {
        self.metrics.clone().unwrap_or_else(|| match task {
            Task::Classification => MetricKind::CLASSIFICATION.to_vec(),
            Task::Regression => vec![MetricKind::Mse],
        })
    }

    pub fn sweep_spec(&self, s: &SweepConfig, metrics: &[MetricKind]) -> Result<SweepSpec, CliError> {
        let mut spec = SweepSpec::new(s.family, self.seed, self.learner()?, metrics.to_vec());
        spec.grid = s.grid.clone();
        spec.replicates = s.replicates;
        spec.estimator = s.estimator;
        spec.train_size = s.train_size;
        spec.reference_size = s.reference_size;
        if let Some(f) = s.max_pool_fraction {
            spec.max_pool_fraction = f;
        }
        spec.collect = s.collect;
        spec.decomposition = s.decomposition;
        Ok(spec)
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
