//! Data-collection simulation: one group's sample stays fixed while the other
//! grows, and per-group costs are tracked as it does.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};

use super::sweeps::provenance;
use super::{check_task, default_grid, grids, CollectVariant, Executor, ExperimentError, Family, GridPoint, MetricCells, Split, SweepResult, SweepSpec};
use crate::dataset::Dataset;
use crate::decomposition::TrainingSplit;
use crate::learners::fit;
use crate::metrics::{disc_vector, GroupCostReport};
use crate::rng;
use crate::stats::mean_sorted;

/// Which group stays fixed, which grows, and whether growth is restricted to positive outcomes.
fn roles(variant: CollectVariant) -> (u8, u8, bool) {
    match variant {
        CollectVariant::MinorityRandom => (0, 1, false),
        CollectVariant::MajorityRandom => (1, 0, false),
        CollectVariant::MinorityPositiveOnly => (0, 1, true),
    }
}

/// Metric values from one draw: (disc, group 0, group 1) per metric.
type DrawValues = Vec<[Option<f64>; 3]>;

fn values(reports: Vec<GroupCostReport>) -> DrawValues {
    reports.into_iter().map(|r| [r.disc, r.value_a0, r.value_a1]).collect()
}

fn evaluate_holdout(sample: &Dataset, split: &Split, spec: &SweepSpec) -> Result<DrawValues, ExperimentError> {
    let model = fit(&spec.learner, sample)?;
    let p = model.predict(split.test.x())?;
    Ok(values(disc_vector(split.test.y(), &p.labels, Some(&p.scores), split.test.a(), &spec.metrics)?))
}

/// Fold-mean of every value over the folds where it is defined. Rows are
/// assigned to folds round-robin in the (already shuffled) sample order.
fn evaluate_cv(sample: &Dataset, spec: &SweepSpec) -> Result<DrawValues, ExperimentError> {
    let folds = spec.collect.cv_folds;
    let mut per_fold = Vec::with_capacity(folds);
    for f in 0..folds {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..sample.len()).partition(|i| i % folds == f);
        if held.is_empty() || kept.is_empty() {
            continue;
        }
        let model = fit(&spec.learner, &sample.subset(&kept))?;
        let test = sample.subset(&held);
        let p = model.predict(test.x())?;
        per_fold.push(values(disc_vector(test.y(), &p.labels, Some(&p.scores), test.a(), &spec.metrics)?));
    }
    Ok((0..spec.metrics.len())
        .map(|m| {
            core::array::from_fn(|j| {
                let mut defined: Vec<f64> = per_fold.iter().filter_map(|fold| fold[m][j]).collect();
                mean_sorted(&mut defined)
            })
        })
        .collect())
}

/// Per-group costs and discrimination as the growing group's sample is
/// enlarged over the grid while the other group's sample size stays fixed.
pub fn run_collect_sim<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    if spec.family != Family::Collect {
        return Err(ExperimentError::InvalidSpec(format!("expected a collect sweep, got {}", spec.family.as_str())));
    }
    spec.validate()?;
    check_task(split, spec)?;
    let grid = spec.grid.clone().unwrap_or_else(|| default_grid(spec, split.train.len(), split.population_ratio));
    grids::check_grid(&grid, false)?;

    let options = spec.collect;
    let (fixed_group, growing_group, positive_only) = roles(options.variant);
    let fixed_pool = split.train.group_indices(fixed_group);
    let growing_pool: Vec<usize> = split
        .train
        .group_indices(growing_group)
        .into_iter()
        .filter(|&i| !positive_only || split.train.y()[i] > 0.5)
        .collect();
    if options.fixed_majority > fixed_pool.len() {
        return Err(ExperimentError::GridExceedsPool {
            grid_value: options.fixed_majority as f64,
            group: fixed_group,
            requested: options.fixed_majority,
            available: fixed_pool.len(),
        });
    }
    let largest = *grid.last().expect("grid is non-empty") as usize;
    if largest > growing_pool.len() {
        return Err(if positive_only {
            ExperimentError::PositivePoolShortfall { group: growing_group, requested: largest, available: growing_pool.len() }
        } else {
            ExperimentError::GridExceedsPool {
                grid_value: largest as f64,
                group: growing_group,
                requested: largest,
                available: growing_pool.len(),
            }
        });
    }

    let k = spec.replicates();
    let results = exec.map(grid.len() * k, |idx| -> Result<DrawValues, ExperimentError> {
        let n = grid[idx / k] as usize;
        let seed = rng::derive(spec.seed, &[Family::Collect.tag(), options.variant.tag(), n as u64]);
        let mut rng = rng::stream(seed, &[(idx % k) as u64]);
        let grown: Vec<usize> = index::sample(&mut rng, growing_pool.len(), n).iter().map(|i| growing_pool[i]).collect();
        if positive_only && grown.iter().any(|&i| split.train.y()[i] <= 0.5) {
            return Err(ExperimentError::InvariantViolation("positive-only draw holds a negative outcome".into()));
        }
        let mut rows: Vec<usize> =
            index::sample(&mut rng, fixed_pool.len(), options.fixed_majority).iter().map(|i| fixed_pool[i]).collect();
        rows.extend_from_slice(&grown);
        rows.shuffle(&mut rng);
        let sample = split.train.subset(&rows);
        if options.cross_validation {
            evaluate_cv(&sample, spec)
        } else {
            evaluate_holdout(&sample, split, spec)
        }
    });

    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(grid.len());
    for &value in &grid {
        let draws = results.by_ref().take(k).collect::<Result<Vec<_>, _>>()?;
        let metrics = spec
            .metrics
            .iter()
            .enumerate()
            .map(|(m, &metric)| MetricCells {
                metric,
                disc: draws.iter().map(|d| d[m][0]).collect(),
                group0: draws.iter().map(|d| d[m][1]).collect(),
                group1: draws.iter().map(|d| d[m][2]).collect(),
                estimate: None,
                single: Vec::new(),
                gap: None,
            })
            .collect();
        let n = value as usize;
        let split_sizes = if fixed_group == 0 {
            TrainingSplit::new(options.fixed_majority, n)
        } else {
            TrainingSplit::new(n, options.fixed_majority)
        };
        points.push(GridPoint { value, split: split_sizes, metrics });
    }
    let evaluation = if options.cross_validation { format!("cv{}", options.cv_folds) } else { "holdout".into() };
    Ok(SweepResult {
        family: Family::Collect,
        grid_param: spec.grid_param(),
        estimator: evaluation.clone(),
        points,
        provenance: provenance(split, spec, None, Some(options.variant), evaluation),
    })
}
