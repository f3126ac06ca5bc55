//! Two-group synthetic populations with Gaussian features and a logistic or
//! linear outcome, plus naive oracles used to check the main code paths.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, DataError, Dataset, FeatureSpec, RawTable, Schema, Task};
use crate::learners::logistic_sigmoid;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum Outcome {
    /// `P(y=1 | x, a) = σ(β·x + intercept + group_offsets[a])`.
    Logistic {
        beta: Vec<f64>,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        group_offsets: [f64; 2],
    },
    /// `y = β·x + intercept + group_offsets[a] + noise_sd·ε`.
    Linear {
        beta: Vec<f64>,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        group_offsets: [f64; 2],
        #[serde(default)]
        noise_sd: f64,
    },
}

impl Outcome {
    fn beta(&self) -> &[f64] {
        match self {
            Outcome::Logistic { beta, .. } | Outcome::Linear { beta, .. } => beta,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub group1_share: f64,
    /// Mean shift of group 1's features; empty means no shift.
    #[serde(default)]
    pub group_shift: Vec<f64>,
    pub outcome: Outcome,
    /// Draw features and outcome noise once per pair and place one copy in
    /// each group, so the two groups hold the same draws.
    #[serde(default)]
    pub paired_groups: bool,
    #[serde(default = "default_true")]
    pub sensitive_as_feature: bool,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Coefficients `1, -1/2, 1/3, ...` used by the convenience constructors.
fn default_beta(d: usize) -> Vec<f64> {
    (0..d).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / (j + 1) as f64).collect()
}

impl SynthSpec {
    /// Classification population with identical groups.
    pub fn null_classification(n: usize, d: usize, group1_share: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            group1_share,
            group_shift: Vec::new(),
            outcome: Outcome::Logistic { beta: default_beta(d), intercept: 0.0, group_offsets: [0.0; 2] },
            paired_groups: false,
            sensitive_as_feature: true,
            seed,
        }
    }

    /// Regression population with identical groups.
    pub fn null_regression(n: usize, d: usize, group1_share: f64, noise_sd: f64, seed: u64) -> Self {
        Self {
            outcome: Outcome::Linear { beta: default_beta(d), intercept: 0.0, group_offsets: [0.0; 2], noise_sd },
            ..Self::null_classification(n, d, group1_share, seed)
        }
    }

    pub fn task(&self) -> Task {
        match self.outcome {
            Outcome::Logistic { .. } => Task::Classification,
            Outcome::Linear { .. } => Task::Regression,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: &str| Err(SynthError::InvalidSpec(msg.to_string()));
        if self.d == 0 {
            return invalid("d must be at least 1");
        }
        if !(self.group1_share > 0.0 && self.group1_share < 1.0) {
            return invalid("group1_share must lie in (0, 1)");
        }
        let n = self.n as f64;
        if self.group1_share * n < 2.0 || (1.0 - self.group1_share) * n < 2.0 {
            return invalid("each group needs at least 2 rows");
        }
        if !self.group_shift.is_empty() && self.group_shift.len() != self.d {
            return invalid("group_shift must be empty or have length d");
        }
        if self.outcome.beta().len() != self.d {
            return invalid("beta must have length d");
        }
        if let Outcome::Linear { noise_sd, .. } = self.outcome {
            if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
                return invalid("noise_sd must be finite and >= 0");
            }
        }
        if self.paired_groups && (self.n % 2 != 0 || self.group1_share != 0.5) {
            return invalid("paired groups need an even n and group1_share 0.5");
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        let task = self.task();
        Schema {
            target: "y".into(),
            positive_label: (task == Task::Classification).then(|| "1".into()),
            sensitive: "group".into(),
            privileged_value: "0".into(),
            features: (1..=self.d).map(|j| FeatureSpec::numeric(&format!("x{j}"))).collect(),
            task,
            sensitive_as_feature: self.sensitive_as_feature,
        }
    }
}

fn outcome(spec: &SynthSpec, x: &[f64], group: usize, u: f64, eps: f64) -> String {
    match &spec.outcome {
        Outcome::Logistic { beta, intercept, group_offsets } => {
            let eta = dot(beta, x) + intercept + group_offsets[group];
            if u < logistic_sigmoid(eta) { "1" } else { "0" }.into()
        }
        Outcome::Linear { beta, intercept, group_offsets, noise_sd } => {
            format!("{}", dot(beta, x) + intercept + group_offsets[group] + noise_sd * eps)
        }
    }
}

fn dot(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * b).sum()
}

/// Generates the population as a string table with its schema.
pub fn generate_table(spec: &SynthSpec) -> Result<(RawTable, Schema), SynthError> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, &[0x5359_4e54]);
    let groups: Vec<usize> = if spec.paired_groups {
        (0..spec.n).map(|i| i % 2).collect()
    } else {
        let n1 = libm::round(spec.group1_share * spec.n as f64) as usize;
        let mut g: Vec<usize> = (0..spec.n).map(|i| usize::from(i < n1)).collect();
        g.shuffle(&mut rng);
        g
    };
    let shift = |j: usize| spec.group_shift.get(j).copied().unwrap_or(0.0);

    let mut header: Vec<String> = (1..=spec.d).map(|j| format!("x{j}")).collect();
    header.push("group".into());
    header.push("y".into());
    let mut rows = Vec::with_capacity(spec.n);
    let mut z = vec![0.0; spec.d];
    let (mut u, mut eps) = (0.0, 0.0);
    for (i, &g) in groups.iter().enumerate() {
        if !spec.paired_groups || i % 2 == 0 {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            u = rng.random::<f64>();
            eps = rng.sample(StandardNormal);
        }
        let x: Vec<f64> = z.iter().enumerate().map(|(j, v)| v + if g == 1 { shift(j) } else { 0.0 }).collect();
        let mut row: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
        row.push(g.to_string());
        row.push(outcome(spec, &x, g, u, eps));
        rows.push(row);
    }
    Ok((RawTable { header, rows }, spec.schema()))
}

/// Generates and encodes the population.
pub fn generate(spec: &SynthSpec) -> Result<Dataset, SynthError> {
    let (table, schema) = generate_table(spec)?;
    Ok(dataset::encode(&schema, &table)?)
}

/// Naive recomputations used only to cross-check the main implementations.
pub mod oracle {
    use alloc::vec::Vec;

    use thiserror::Error;

    use crate::decomposition::{PointDecomposition, PredictionEnsemble, SdComponents, ZeroOneTally};
    use crate::metrics::{GroupCostReport, MetricKind};

    #[derive(Debug, Error, Clone, PartialEq, Eq)]
    pub enum OracleError {
        #[error("oracle input too large: {what} = {found} exceeds {cap}")]
        TooLarge { what: &'static str, found: usize, cap: usize },
        #[error("input lengths differ")]
        LengthMismatch,
    }

    fn cap(what: &'static str, found: usize, cap: usize) -> Result<(), OracleError> {
        if found > cap {
            return Err(OracleError::TooLarge { what, found, cap });
        }
        Ok(())
    }

    fn gcd(mut a: i128, mut b: i128) -> i128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    }

    /// Reduced fraction.
    #[derive(Clone, Copy)]
    struct Frac(i128, i128);

    impl Frac {
        fn new(num: i128, den: i128) -> Option<Self> {
            if den == 0 {
                return None;
            }
            let g = gcd(num, den).max(1);
            Some(Frac(num / g, den / g))
        }

        fn minus(self, other: Frac) -> Frac {
            Frac::new(self.0 * other.1 - other.0 * self.1, self.1 * other.1).expect("nonzero denominator")
        }

        fn value(self) -> f64 {
            self.0 as f64 / self.1 as f64
        }
    }

    fn pos(v: f64) -> bool {
        v > 0.5
    }

    fn count_frac(n: usize, keep: impl Fn(usize) -> bool, hit: impl Fn(usize) -> bool) -> Option<Frac> {
        let (mut num, mut den) = (0i128, 0i128);
        for i in 0..n {
            if keep(i) {
                den += 1;
                num += i128::from(hit(i));
            }
        }
        Frac::new(num, den)
    }

    fn auc_frac(y: &[f64], s: &[f64], a: &[u8], g: u8) -> Option<Frac> {
        let (mut twice, mut pairs) = (0i128, 0i128);
        for p in (0..y.len()).filter(|&i| a[i] == g && pos(y[i])) {
            for q in (0..y.len()).filter(|&i| a[i] == g && !pos(y[i])) {
                pairs += 1;
                twice += if s[p] > s[q] {
                    2
                } else if s[p] == s[q] {
                    1
                } else {
                    0
                };
            }
        }
        Frac::new(twice, 2 * pairs)
    }

    /// Every metric for both groups by explicit counting and, for AUC, by
    /// enumerating all positive/negative pairs. At most 500 rows.
    pub fn oracle_metrics(y: &[f64], labels: &[f64], scores: &[f64], a: &[u8]) -> Result<Vec<GroupCostReport>, OracleError> {
        cap("n", y.len(), 500)?;
        let n = y.len();
        if labels.len() != n || scores.len() != n || a.len() != n {
            return Err(OracleError::LengthMismatch);
        }
        let mut out = Vec::new();
        for metric in MetricKind::ALL {
            let frac = |g: u8| -> Option<Frac> {
                let in_g = |i: usize| a[i] == g;
                match metric {
                    MetricKind::Fpr => count_frac(n, |i| in_g(i) && !pos(y[i]), |i| pos(labels[i])),
                    MetricKind::Fnr => count_frac(n, |i| in_g(i) && pos(y[i]), |i| !pos(labels[i])),
                    MetricKind::Eo => count_frac(n, |i| in_g(i) && pos(y[i]), |i| pos(labels[i])),
                    MetricKind::Zol => count_frac(n, in_g, |i| pos(labels[i]) != pos(y[i])),
                    MetricKind::Sd => count_frac(n, in_g, |i| pos(labels[i])),
                    MetricKind::Auc => auc_frac(y, scores, a, g),
                    MetricKind::Mse => None,
                }
            };
            let report = if metric == MetricKind::Mse {
                let mse = |g: u8| {
                    let (mut s, mut c) = (0.0, 0usize);
                    for i in (0..n).filter(|&i| a[i] == g) {
                        s += (scores[i] - y[i]) * (scores[i] - y[i]);
                        c += 1;
                    }
                    (c > 0).then(|| s / c as f64)
                };
                let (v0, v1) = (mse(0), mse(1));
                GroupCostReport { metric, value_a0: v0, value_a1: v1, disc: v0.zip(v1).map(|(p, q)| q - p) }
            } else {
                let (f0, f1) = (frac(0), frac(1));
                GroupCostReport {
                    metric,
                    value_a0: f0.map(Frac::value),
                    value_a1: f1.map(Frac::value),
                    disc: f0.zip(f1).map(|(f0, f1)| f1.minus(f0).value()),
                }
            };
            out.push(report);
        }
        Ok(out)
    }

    fn check_tiny(ens: &PredictionEnsemble) -> Result<(), OracleError> {
        cap("models", ens.k(), 5)?;
        cap("points", ens.n(), 20)
    }

    fn column(ens: &PredictionEnsemble, i: usize, labels: bool) -> Vec<f64> {
        (0..ens.k()).map(|k| if labels { ens.labels(k)[i] } else { ens.scores(k)[i] }).collect()
    }

    /// The label in {0, 1} with the fewest disagreeing models; ties by mean score.
    fn best_label(labels: &[f64], scores: &[f64]) -> f64 {
        let misses = |c: bool| labels.iter().filter(|&&l| pos(l) != c).count();
        let (m0, m1) = (misses(false), misses(true));
        if m1 < m0 {
            1.0
        } else if m0 < m1 {
            0.0
        } else {
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            f64::from(u8::from(mean >= 0.5))
        }
    }

    /// Point decompositions by enumeration; up to 5 models and 20 points.
    pub fn oracle_decomposition(ens: &PredictionEnsemble, squared: bool) -> Result<Vec<PointDecomposition>, OracleError> {
        check_tiny(ens)?;
        let k = ens.k();
        let kf = k as f64;
        Ok((0..ens.n())
            .map(|i| {
                let y = ens.eval_y()[i];
                let scores = column(ens, i, false);
                if squared {
                    let main = scores.iter().sum::<f64>() / kf;
                    let variance = scores.iter().map(|s| (s - main) * (s - main)).sum::<f64>() / kf;
                    let mean_loss = scores.iter().map(|s| (s - y) * (s - y)).sum::<f64>() / kf;
                    PointDecomposition {
                        main_prediction: main,
                        noise: 0.0,
                        bias: (main - y) * (main - y),
                        variance,
                        net_factor: 1.0,
                        mean_loss,
                        tally: None,
                    }
                } else {
                    let labels = column(ens, i, true);
                    let main = best_label(&labels, &scores);
                    let model_errors = labels.iter().filter(|&&l| pos(l) != pos(y)).count();
                    let disagreements = labels.iter().filter(|&&l| pos(l) != pos(main)).count();
                    let bias = if pos(main) == pos(y) { 0.0 } else { 1.0 };
                    PointDecomposition {
                        main_prediction: main,
                        noise: 0.0,
                        bias,
                        variance: disagreements as f64 / kf,
                        net_factor: 1.0 - 2.0 * bias,
                        mean_loss: model_errors as f64 / kf,
                        tally: Some(ZeroOneTally { model_errors, disagreements, models: k }),
                    }
                }
            })
            .collect())
    }

    /// Absolute-loss group components by enumeration: the main prediction is
    /// the label minimizing total absolute loss to the models.
    pub fn oracle_sd_components(ens: &PredictionEnsemble) -> Result<[Option<SdComponents>; 2], OracleError> {
        check_tiny(ens)?;
        let k = ens.k() as i64;
        let mut out = [None, None];
        for g in 0..2u8 {
            let (mut count, mut bias_sum, mut net) = (0i64, 0i64, 0i64);
            for i in (0..ens.n()).filter(|&i| ens.eval_a()[i] == g) {
                let labels = column(ens, i, true);
                let main = best_label(&labels, &column(ens, i, false));
                let b = (main - ens.eval_y()[i]).abs() as i64;
                let v: i64 = labels.iter().map(|l| (l - main).abs() as i64).sum();
                count += 1;
                bias_sum += b;
                net += (1 - 2 * b) * v;
            }
            if count > 0 {
                out[usize::from(g)] = Some(SdComponents {
                    noise: 0.0,
                    bias: bias_sum as f64 / count as f64,
                    net_variance: net as f64 / (k * count) as f64,
                    points: count as usize,
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn share_and_determinism() {
        let spec = SynthSpec::null_classification(10_000, 3, 0.31, 9);
        let ds = generate(&spec).unwrap();
        assert!((dataset::population_ratio(&ds) - 0.31).abs() <= 0.01);
        let again = generate(&spec).unwrap();
        assert_eq!(ds.x(), again.x());
        assert_eq!(ds.y(), again.y());
    }

    #[test]
    fn noiseless_regression_is_linear() {
        let mut spec = SynthSpec::null_regression(50, 2, 0.5, 0.0, 1);
        spec.sensitive_as_feature = false;
        let (table, _) = generate_table(&spec).unwrap();
        for row in &table.rows {
            let x1: f64 = row[0].parse().unwrap();
            let x2: f64 = row[1].parse().unwrap();
            let y: f64 = row[3].parse().unwrap();
            assert!((y - (x1 - 0.5 * x2)).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_groups_share_draws() {
        let mut spec = SynthSpec::null_classification(40, 2, 0.5, 3);
        spec.paired_groups = true;
        let (table, _) = generate_table(&spec).unwrap();
        for pair in table.rows.chunks(2) {
            assert_eq!((pair[0][2].as_str(), pair[1][2].as_str()), ("0", "1"));
            assert_eq!((&pair[0][..2], &pair[0][3]), (&pair[1][..2], &pair[1][3]));
        }
        spec.group1_share = 0.3;
        assert!(generate_table(&spec).is_err());
    }

    #[test]
    fn spec_checks() {
        let mut spec = SynthSpec::null_classification(100, 2, 0.01, 0);
        assert!(spec.validate().is_err());
        spec.group1_share = 0.5;
        spec.group_shift = vec![1.0];
        assert!(spec.validate().is_err());
    }
}
