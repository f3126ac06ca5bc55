//! Sweeps measured against a reference ensemble: SSB over sizes, URB over
//! group ratios, and their decompositions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    check_task, default_grid, grids, Executor, ExperimentError, Family, GapTerms, GridPoint, MetricCells, Provenance,
    Split, SweepResult, SweepSpec,
};
use crate::dataset::{draw_sample, SamplingPlan, Task};
use crate::decomposition::{decompose_bias_gap, LossKind, PredictionEnsemble, TrainingSplit};
use crate::estimators::{self, Estimator};
use crate::learners::{fit, Predictions};
use crate::metrics::disc_vector;
use crate::rng;

/// Largest tolerated gap between a decomposed total and the sum of its terms.
const IDENTITY_TOLERANCE: f64 = 1e-9;

pub(super) fn loss_for(task: Task) -> LossKind {
    match task {
        Task::Classification => LossKind::ZeroOne,
        Task::Regression => LossKind::Squared,
    }
}

/// `m1 = round(ratio · m)`, the rest in group 0.
fn split_at(m: usize, ratio: f64) -> TrainingSplit {
    let m1 = (libm::round(ratio * m as f64) as usize).min(m);
    TrainingSplit::new(m - m1, m1)
}

pub(super) fn check_pool(split: &Split, grid_value: f64, s: TrainingSplit) -> Result<(), ExperimentError> {
    for (group, requested) in [(0u8, s.m0), (1u8, s.m1)] {
        let available = split.train.group_count(group);
        if requested > available {
            return Err(ExperimentError::GridExceedsPool { grid_value, group, requested, available });
        }
    }
    Ok(())
}

/// Trains `replicates` models for every split and collects their predictions
/// on the evaluation set, one ensemble per split.
fn train_ensembles<E: Executor>(
    split: &Split,
    spec: &SweepSpec,
    jobs: &[TrainingSplit],
    exec: &E,
) -> Result<Vec<PredictionEnsemble>, ExperimentError> {
    let k = spec.replicates();
    let family = spec.family.tag();
    let results = exec.map(jobs.len() * k, |idx| -> Result<Predictions, ExperimentError> {
        let s = jobs[idx / k];
        let seed = rng::derive(spec.seed, &[family, s.m0 as u64, s.m1 as u64]);
        let plan = SamplingPlan::new(s.m0, s.m1, k, seed)?;
        let sample = draw_sample(&split.train, &plan, idx % k)?;
        let model = fit(&spec.learner, &sample)?;
        Ok(model.predict(split.test.x())?)
    });
    let loss = loss_for(split.test.task());
    let mut results = results.into_iter();
    jobs.iter()
        .map(|&s| {
            let preds = results.by_ref().take(k).collect::<Result<Vec<_>, _>>()?;
            Ok(PredictionEnsemble::from_predictions(&preds, split.test.y(), split.test.a(), loss)?.with_split(s))
        })
        .collect()
}

/// Per-model discrimination and group values of every requested metric.
fn replicate_cells(ens: &PredictionEnsemble, spec: &SweepSpec) -> Result<Vec<MetricCells>, ExperimentError> {
    let mut cells: Vec<MetricCells> = spec
        .metrics
        .iter()
        .map(|&metric| MetricCells {
            metric,
            disc: Vec::new(),
            group0: Vec::new(),
            group1: Vec::new(),
            estimate: None,
            single: Vec::new(),
            gap: None,
        })
        .collect();
    for k in 0..ens.k() {
        let reports = disc_vector(ens.eval_y(), ens.labels(k), Some(ens.scores(k)), ens.eval_a(), &spec.metrics)?;
        for (c, r) in cells.iter_mut().zip(reports) {
            c.disc.push(r.disc);
            c.group0.push(r.value_a0);
            c.group1.push(r.value_a1);
        }
    }
    Ok(cells)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Against {
    Size,
    Ratio,
}

fn run_against_reference<E: Executor>(
    split: &Split,
    spec: &SweepSpec,
    exec: &E,
    grid: &[f64],
    points: &[TrainingSplit],
    reference: TrainingSplit,
    against: Against,
) -> Result<SweepResult, ExperimentError> {
    let decompose = spec.family == Family::Decomposition;
    let jobs: Vec<TrainingSplit> = points.iter().copied().chain([reference]).collect::<BTreeSet<_>>().into_iter().collect();
    let ensembles = train_ensembles(split, spec, &jobs, exec)?;
    let find = |s: &TrainingSplit| &ensembles[jobs.binary_search(s).expect("split was scheduled")];
    let reference_ens = find(&reference);
    let estimator = if decompose { spec.estimator.unwrap_or(Estimator::MainPrediction) } else { spec.estimator() };

    let mut out = Vec::with_capacity(grid.len());
    for (&value, s) in grid.iter().zip(points) {
        let ens = find(s);
        let mut cells = replicate_cells(ens, spec)?;
        for c in &mut cells {
            c.estimate = Some(match against {
                Against::Size => estimators::ssb(ens, reference_ens, c.metric, estimator)?,
                Against::Ratio => estimators::urb(ens, reference_ens, c.metric, estimator)?,
            });
            for k in 0..ens.k() {
                let model = Predictions { scores: ens.scores(k).to_vec(), labels: ens.labels(k).to_vec() };
                let mut e = match against {
                    Against::Size => estimators::ssb_single(&model, reference_ens, c.metric)?,
                    Against::Ratio => estimators::urb_single(&model, reference_ens, c.metric)?,
                };
                e.target = Some(*s);
                c.single.push(e);
            }
            if decompose {
                let g = decompose_bias_gap(ens, reference_ens, c.metric)?;
                if let (Some(t), Some(b), Some(v)) = (g.total, g.bias_delta, g.netvar_delta) {
                    if libm::fabs(t - (b + v)) > IDENTITY_TOLERANCE {
                        return Err(ExperimentError::InvariantViolation(format!(
                            "{} gap {t} differs from bias {b} plus net variance {v} at {value}",
                            c.metric
                        )));
                    }
                }
                c.gap = Some(GapTerms { bias_delta: g.bias_delta, netvar_delta: g.netvar_delta, total: g.total });
            }
        }
        out.push(GridPoint { value, split: *s, metrics: cells });
    }
    Ok(SweepResult {
        family: spec.family,
        grid_param: spec.grid_param(),
        estimator: if decompose { Estimator::MeanOverModels.as_str().to_string() } else { estimator.as_str().to_string() },
        points: out,
        provenance: provenance(split, spec, Some(reference), None, "holdout".into()),
    })
}

pub(super) fn provenance(
    split: &Split,
    spec: &SweepSpec,
    reference: Option<TrainingSplit>,
    variant: Option<super::CollectVariant>,
    evaluation: String,
) -> Provenance {
    Provenance {
        seed: spec.seed,
        replicates: spec.replicates(),
        learner: spec.learner.name(),
        reference,
        population_ratio: split.population_ratio,
        variant,
        evaluation,
        train_pool_rows: split.train.len(),
        test_rows: split.test.len(),
    }
}

fn resolve_grid(split: &Split, spec: &SweepSpec) -> Result<Vec<f64>, ExperimentError> {
    let grid = spec.grid.clone().unwrap_or_else(|| default_grid(spec, split.train.len(), split.population_ratio));
    grids::check_grid(&grid, spec.ratio_grid())?;
    Ok(grid)
}

fn expect_family(spec: &SweepSpec, family: Family) -> Result<(), ExperimentError> {
    if spec.family != family {
        return Err(ExperimentError::InvalidSpec(format!(
            "expected a {} sweep, got {}",
            family.as_str(),
            spec.family.as_str()
        )));
    }
    Ok(())
}

fn size_sweep<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    let grid = resolve_grid(split, spec)?;
    let largest = *grid.last().expect("grid is non-empty") as usize;
    let m_ref = spec.reference_size.unwrap_or(largest);
    if m_ref < largest {
        return Err(ExperimentError::InvalidSpec(format!(
            "reference size {m_ref} is below the largest grid size {largest}"
        )));
    }
    let points: Vec<TrainingSplit> = grid.iter().map(|&m| split_at(m as usize, split.population_ratio)).collect();
    let reference = split_at(m_ref, split.population_ratio);
    for (&value, &s) in grid.iter().zip(&points).chain([(&(m_ref as f64), &reference)]) {
        check_pool(split, value, s)?;
    }
    run_against_reference(split, spec, exec, &grid, &points, reference, Against::Size)
}

fn ratio_sweep<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    let grid = resolve_grid(split, spec)?;
    let m = spec.train_size();
    let mut points = Vec::with_capacity(grid.len());
    for &r in &grid {
        let s = split_at(m, r);
        if s.m0 == 0 || s.m1 == 0 {
            return Err(ExperimentError::InvalidSpec(format!(
                "ratio {r} at m = {m} leaves a group without training rows"
            )));
        }
        points.push(s);
    }
    let reference = split_at(m, split.population_ratio);
    if !points.contains(&reference) {
        return Err(ExperimentError::InvalidSpec(format!(
            "ratio grid has no point with the population split m1 = {} of m = {m}",
            reference.m1
        )));
    }
    for (&value, &s) in grid.iter().zip(&points) {
        check_pool(split, value, s)?;
    }
    run_against_reference(split, spec, exec, &grid, &points, reference, Against::Ratio)
}

/// Discrimination over training sizes at the population group ratio, with
/// SSB against the reference size `M`.
pub fn run_ssb_sweep<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    expect_family(spec, Family::SsbSize)?;
    spec.validate()?;
    check_task(split, spec)?;
    size_sweep(split, spec, exec)
}

/// Discrimination over protected-group shares at a fixed training size, with
/// URB against the population split.
pub fn run_urb_sweep<E: Executor>(split: &Split, spec: &SweepSpec, exec: &E) -> Result<SweepResult, ExperimentError> {
    expect_family(spec, Family::UrbRatio)?;
    spec.validate()?;
    check_task(split, spec)?;
    ratio_sweep(split, spec, exec)
}

/// SSB or URB split into bias and net-variance changes per grid point. Fails
/// with an invariant violation if a total differs from the sum of its terms.
pub fn run_decomposition_sweep<E: Executor>(
    split: &Split,
    spec: &SweepSpec,
    exec: &E,
) -> Result<SweepResult, ExperimentError> {
    expect_family(spec, Family::Decomposition)?;
    spec.validate()?;
    check_task(split, spec)?;
    if spec.ratio_grid() {
        ratio_sweep(split, spec, exec)
    } else {
        size_sweep(split, spec, exec)
    }
}
