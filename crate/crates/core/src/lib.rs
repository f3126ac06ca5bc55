//! Measurement of how training-set size and group underrepresentation bias
//! the fairness conclusions drawn from trained models.
//!
//! The crate is `no_std` (it needs `alloc`). It contains the pure parts of the
//! toolkit: dataset encoding and seeded sampling, a handful of small learners,
//! per-group cost metrics, noise/bias/variance decompositions, the sample-size
//! (SSB) and underrepresentation (URB) bias estimators, a synthetic population
//! generator with brute-force oracles, and the experiment harness. File IO,
//! the thread pool and the command line live in the `fairsample` crate.
//!
//! Group `0` is the privileged group and group `1` the protected one; every
//! discrimination value is reported as group 1 minus group 0.
#![cfg_attr(not(test), no_std)]
#![warn(rust_2018_idioms)]
// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod decomposition;
pub mod estimators;
pub mod experiments;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod synth;

pub use dataset::{Dataset, FeatureKind, FeatureSpec, RawTable, SamplingPlan, Schema, Task};
pub use decomposition::{LossKind, PredictionEnsemble, TrainingSplit};
pub use estimators::{BiasEstimate, Estimator};
pub use learners::{FittedModel, Learner, Predictions};
pub use matrix::Matrix;
pub use metrics::{GroupCostReport, MetricKind};
