use std::sync::atomic::{AtomicUsize, Ordering};

use fairsample_core::decomposition::TrainingSplit;
use fairsample_core::estimators::Estimator;
use fairsample_core::experiments::{
    aggregate, ratio_grid, run_collect_sim, run_decomposition_sweep, run_ssb_sweep, run_sweep, run_urb_sweep,
    CollectVariant, DecompositionMode, Executor, ExperimentError, Family, GridPoint, MetricCells, Provenance, Serial,
    Split, SweepResult, SweepSpec,
};
use fairsample_core::synth::{generate, SynthSpec};
use fairsample_core::{Learner, MetricKind};

/// Runs jobs last to first, then restores job order.
struct Reversed;

impl Executor for Reversed {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<T> = (0..n).rev().map(f).collect();
        out.reverse();
        out
    }
}

/// Counts jobs handed to it.
#[derive(Default)]
struct Counting(AtomicUsize);

impl Executor for Counting {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.0.fetch_add(n, Ordering::SeqCst);
        (0..n).map(f).collect()
    }
}

fn classification_split(n: usize, share: f64) -> Split {
    let ds = generate(&SynthSpec::null_classification(n, 3, share, 5)).unwrap();
    Split::holdout(&ds, 0.3, 1).unwrap()
}

fn regression_split() -> Split {
    let ds = generate(&SynthSpec::null_regression(1500, 3, 0.3, 0.5, 6)).unwrap();
    Split::holdout(&ds, 0.3, 1).unwrap()
}

fn classification_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Fpr, MetricKind::Eo, MetricKind::Zol, MetricKind::Auc, MetricKind::Sd]
}

#[test]
fn sweeps_do_not_depend_on_the_schedule() {
    let split = classification_split(1200, 0.3);
    let spec = SweepSpec::new(Family::SsbSize, 17, Learner::logistic_regression(), classification_metrics())
        .with_grid(vec![20.0, 60.0, 200.0])
        .with_replicates(4);
    let a = run_ssb_sweep(&split, &spec, &Serial).unwrap();
    let b = run_ssb_sweep(&split, &spec, &Reversed).unwrap();
    assert_eq!(a, b);
    assert_eq!(aggregate(&a).len(), 3 * 5);
    let other = run_ssb_sweep(&split, &SweepSpec { seed: 18, ..spec.clone() }, &Serial).unwrap();
    assert_ne!(a, other);

    let mut collect = SweepSpec::new(Family::Collect, 3, Learner::logistic_regression(), vec![MetricKind::Fnr])
        .with_grid(vec![4.0, 10.0])
        .with_replicates(3);
    collect.collect.fixed_majority = 40;
    assert_eq!(run_collect_sim(&split, &collect, &Serial).unwrap(), run_collect_sim(&split, &collect, &Reversed).unwrap());
}

#[test]
fn ssb_at_the_reference_size_is_zero() {
    let split = classification_split(1200, 0.3);
    for est in [Estimator::MainPrediction, Estimator::MeanOverModels] {
        let mut spec = SweepSpec::new(Family::SsbSize, 2, Learner::logistic_regression(), classification_metrics())
            .with_grid(vec![30.0, 300.0])
            .with_replicates(3);
        spec.estimator = Some(est);
        let result = run_ssb_sweep(&split, &spec, &Serial).unwrap();
        assert_eq!(result.provenance.reference, Some(result.points[1].split));
        for cells in &result.points[1].metrics {
            let value = cells.estimate.unwrap().value;
            assert!(value.is_none() || value == Some(0.0), "{} {:?}", cells.metric, value);
        }
    }
}

#[test]
fn single_model_estimates_share_one_reference() {
    let split = classification_split(1200, 0.3);
    let spec = SweepSpec::new(Family::SsbSize, 4, Learner::logistic_regression(), vec![MetricKind::Fpr, MetricKind::Zol])
        .with_grid(vec![20.0, 100.0, 300.0])
        .with_replicates(3);
    let r = run_ssb_sweep(&split, &spec, &Serial).unwrap();
    for j in 0..2 {
        // value - own disc is minus the reference disc, the same everywhere
        let offsets: Vec<f64> = r
            .points
            .iter()
            .flat_map(|p| {
                let c = &p.metrics[j];
                assert_eq!(c.single.len(), 3);
                assert!(c.single.iter().all(|e| e.k == 1 && e.estimator.is_none() && e.target == Some(p.split)));
                c.single.iter().zip(&c.disc).map(|(e, d)| e.value.unwrap() - d.unwrap()).collect::<Vec<_>>()
            })
            .collect();
        assert!(offsets.iter().all(|o| (o - offsets[0]).abs() < 1e-12), "{offsets:?}");
    }
}

#[test]
fn urb_reuses_the_population_split() {
    let split = classification_split(2000, 0.3);
    let r = split.population_ratio;
    let spec = SweepSpec::new(Family::UrbRatio, 4, Learner::logistic_regression(), vec![MetricKind::Eo])
        .with_grid(vec![0.1, r, 0.9])
        .with_replicates(3);
    let spec = SweepSpec { train_size: Some(400), ..spec };
    let result = run_urb_sweep(&split, &spec, &Serial).unwrap();
    let at_population = &result.points[1];
    assert_eq!(at_population.split, TrainingSplit::new(400 - (r * 400.0).round() as usize, (r * 400.0).round() as usize));
    assert_eq!(result.provenance.reference, Some(at_population.split));
    assert_eq!(at_population.metrics[0].estimate.unwrap().value, Some(0.0));

    let no_population = SweepSpec { grid: Some(vec![0.1, 0.9]), ..spec.clone() };
    assert!(matches!(run_urb_sweep(&split, &no_population, &Serial), Err(ExperimentError::InvalidSpec(_))));
    let empty_group = SweepSpec { grid: Some(vec![0.001, r]), ..spec };
    assert!(matches!(run_urb_sweep(&split, &empty_group, &Serial), Err(ExperimentError::InvalidSpec(_))));
}

#[test]
fn oversized_grids_fail_before_training() {
    let split = classification_split(600, 0.3);
    let exec = Counting::default();
    let spec = SweepSpec::new(Family::SsbSize, 1, Learner::logistic_regression(), vec![MetricKind::Fpr])
        .with_grid(vec![10.0, 5000.0])
        .with_replicates(2);
    let err = run_ssb_sweep(&split, &spec, &exec).unwrap_err();
    assert!(matches!(err, ExperimentError::GridExceedsPool { grid_value, .. } if grid_value == 5000.0));
    assert_eq!(exec.0.load(Ordering::SeqCst), 0);

    let mut collect = SweepSpec::new(Family::Collect, 1, Learner::logistic_regression(), vec![MetricKind::Fpr]);
    collect.collect.variant = CollectVariant::MinorityPositiveOnly;
    collect.grid = Some(vec![2.0, 400.0]);
    let err = run_collect_sim(&split, &collect, &exec).unwrap_err();
    assert!(matches!(err, ExperimentError::PositivePoolShortfall { group: 1, requested: 400, .. }));
    assert!(err.to_string().contains("short by"));
    assert_eq!(exec.0.load(Ordering::SeqCst), 0);

    let wrong_task = SweepSpec::new(Family::SsbSize, 1, Learner::linear_regression(), vec![MetricKind::Mse]);
    assert!(run_sweep(&split, &wrong_task, &exec).is_err());
    assert_eq!(exec.0.load(Ordering::SeqCst), 0);
}

#[test]
fn collect_variants_label_their_rows() {
    let split = classification_split(2000, 0.3);
    for variant in CollectVariant::ALL {
        let mut spec = SweepSpec::new(Family::Collect, 9, Learner::logistic_regression(), vec![MetricKind::Fpr, MetricKind::Zol])
            .with_grid(vec![2.0, 20.0])
            .with_replicates(3);
        spec.collect.variant = variant;
        spec.collect.fixed_majority = 50;
        let result = run_collect_sim(&split, &spec, &Serial).unwrap();
        assert_eq!(result.provenance.variant, Some(variant));
        let expected = if variant == CollectVariant::MajorityRandom { TrainingSplit::new(20, 50) } else { TrainingSplit::new(50, 20) };
        assert_eq!(result.points[1].split, expected);
        assert_eq!(result.grid_param, if variant == CollectVariant::MajorityRandom { "n0" } else { "n1" });
    }
    let mut cv = SweepSpec::new(Family::Collect, 9, Learner::logistic_regression(), vec![MetricKind::Zol])
        .with_grid(vec![30.0])
        .with_replicates(2);
    cv.collect.cross_validation = true;
    let result = run_collect_sim(&split, &cv, &Serial).unwrap();
    assert_eq!(result.estimator, "cv3");
    assert!(result.points[0].metrics[0].disc.iter().all(Option::is_some));
}

#[test]
fn decomposition_terms_add_up() {
    let split = regression_split();
    let spec = SweepSpec::new(Family::Decomposition, 8, Learner::linear_regression(), vec![MetricKind::Mse])
        .with_grid(vec![20.0, 100.0, 500.0])
        .with_replicates(5);
    let result = run_decomposition_sweep(&split, &spec, &Serial).unwrap();
    for row in aggregate(&result) {
        let (t, b, v) = (row.estimate.unwrap(), row.bias_delta.unwrap(), row.netvar_delta.unwrap());
        assert!((t - (b + v)).abs() <= 1e-9);
        if row.grid_value == 500.0 {
            assert_eq!((t, b, v), (0.0, 0.0, 0.0));
        }
    }

    let ratio = SweepSpec {
        decomposition: DecompositionMode::Ratio,
        grid: Some(vec![0.1, split.population_ratio, 0.8]),
        train_size: Some(200),
        ..spec
    };
    let result = run_decomposition_sweep(&split, &ratio, &Serial).unwrap();
    assert_eq!(result.grid_param, "ratio");
    let at_population = &aggregate(&result)[1];
    assert_eq!((at_population.estimate, at_population.bias_delta), (Some(0.0), Some(0.0)));

    let classification = classification_split(1200, 0.3);
    let eo = SweepSpec::new(Family::Decomposition, 8, Learner::logistic_regression(), vec![MetricKind::Eo, MetricKind::Zol])
        .with_grid(vec![20.0, 200.0])
        .with_replicates(4);
    for row in aggregate(&run_decomposition_sweep(&classification, &eo, &Serial).unwrap()) {
        if let (Some(t), Some(b), Some(v)) = (row.estimate, row.bias_delta, row.netvar_delta) {
            assert!((t - (b + v)).abs() <= 1e-9);
        }
    }
    let auc = SweepSpec { metrics: vec![MetricKind::Auc], ..eo };
    assert!(matches!(run_decomposition_sweep(&classification, &auc, &Serial), Err(ExperimentError::InvalidSpec(_))));
}

fn hand_result(values: Vec<Option<f64>>) -> SweepResult {
    SweepResult {
        family: Family::SsbSize,
        grid_param: "m",
        estimator: "mean_over_models".into(),
        points: vec![GridPoint {
            value: 10.0,
            split: TrainingSplit::new(7, 3),
            metrics: vec![MetricCells {
                metric: MetricKind::Fpr,
                disc: values.clone(),
                group0: values.clone(),
                group1: values,
                estimate: None,
                single: Vec::new(),
                gap: None,
            }],
        }],
        provenance: Provenance {
            seed: 0,
            replicates: 2,
            learner: "logistic_regression",
            reference: None,
            population_ratio: 0.3,
            variant: None,
            evaluation: "holdout".into(),
            train_pool_rows: 10,
            test_rows: 5,
        },
    }
}

#[test]
fn aggregation_by_hand() {
    let row = &aggregate(&hand_result(vec![Some(0.1), Some(0.3)]))[0];
    assert!((row.disc.mean.unwrap() - 0.2).abs() < 1e-15);
    assert!((row.disc.stderr.unwrap() - 0.1).abs() < 1e-15);
    assert_eq!((row.disc.k_defined, row.disc.k_total), (2, 2));

    let undefined = &aggregate(&hand_result(vec![None, None]))[0];
    assert_eq!((undefined.disc.mean, undefined.disc.k_defined, undefined.disc.k_total), (None, 0, 2));

    let single = &aggregate(&hand_result(vec![Some(0.4), None]))[0];
    assert_eq!((single.disc.mean, single.disc.stderr, single.disc.k_defined), (Some(0.4), None, 1));

    let r = hand_result(vec![Some(0.1), Some(0.3)]);
    assert_eq!(aggregate(&r), aggregate(&r));
}

#[test]
fn default_grids_follow_the_protocol() {
    let split = classification_split(600, 0.3);
    let spec = SweepSpec::new(Family::UrbRatio, 1, Learner::logistic_regression(), vec![MetricKind::Fpr]);
    assert!(spec.validate().is_ok());
    assert!(ratio_grid(split.population_ratio).contains(&split.population_ratio));
    let bad = SweepSpec::new(Family::SsbSize, 1, Learner::logistic_regression(), vec![MetricKind::Fpr]).with_replicates(1);
    assert!(bad.validate().is_err());
    let dup = SweepSpec::new(Family::SsbSize, 1, Learner::logistic_regression(), vec![MetricKind::Fpr, MetricKind::Fpr]);
    assert!(dup.validate().is_err());
    let decreasing = SweepSpec::new(Family::SsbSize, 1, Learner::logistic_regression(), vec![MetricKind::Fpr]).with_grid(vec![50.0, 20.0]);
    assert!(decreasing.validate().is_err());
}
