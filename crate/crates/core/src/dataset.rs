//! Tabular data with a binary outcome (or real outcome) and a binary
//! sensitive attribute.
//!
//! Raw string tables are turned into a [`Dataset`] by an [`Encoding`] fitted on
//! the full file: categorical columns become one indicator per level, numeric
//! columns are standardized with the population standard deviation. The same
//! encoding can be applied to a second table (a separate evaluation file) so
//! both live in one feature space.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        Self { name: name.into(), kind: FeatureKind::Numeric }
    }

    pub fn categorical(name: &str) -> Self {
        Self { name: name.into(), kind: FeatureKind::Categorical }
    }
}

fn default_true() -> bool {
    true
}

/// Column roles of an input table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub target: String,
    /// Target value mapped to 1. Required for classification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    pub sensitive: String,
    /// Sensitive value of the privileged group (group 0).
    pub privileged_value: String,
    pub features: Vec<FeatureSpec>,
    pub task: Task,
    /// Append the (standardized) group indicator to the model inputs.
    #[serde(default = "default_true")]
    pub sensitive_as_feature: bool,
}

impl Schema {
    pub fn validate(&self) -> Result<(), DataError> {
        let invalid = |msg: String| Err(DataError::InvalidSchema(msg));
        if self.target == self.sensitive {
            return invalid(format!("target and sensitive are both `{}`", self.target));
        }
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if f.name == self.target || f.name == self.sensitive {
                return invalid(format!("`{}` is listed as a feature", f.name));
            }
            if !seen.insert(f.name.as_str()) {
                return invalid(format!("feature `{}` listed twice", f.name));
            }
        }
        if self.task == Task::Classification && self.positive_label.is_none() {
            return invalid("classification schema needs `positive_label`".into());
        }
        Ok(())
    }
}

/// A header plus string cells, as read from a CSV file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("column `{0}` appears more than once in the header")]
    DuplicateColumn(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("table has no rows")]
    EmptyTable,
    #[error("sensitive not binary: column `{column}` has {levels} distinct values")]
    SensitiveNotBinary { column: String, levels: usize },
    #[error("target not binary: column `{column}` has {levels} distinct values")]
    TargetNotBinary { column: String, levels: usize },
    #[error("positive label `{label}` does not occur in column `{column}`")]
    PositiveLabelAbsent { column: String, label: String },
    #[error("missing value in column `{column}` at row {row}")]
    MissingValue { column: String, row: usize },
    #[error("unparsable numeric cell `{value}` in column `{column}` at row {row}")]
    UnparsableNumeric { column: String, row: usize, value: String },
    #[error("non-finite value in column `{column}` at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("value `{value}` of column `{column}` was not seen when the encoding was fitted")]
    UnknownLevel { column: String, value: String },
    #[error("group {group} is empty")]
    EmptyGroup { group: u8 },
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("group {group} pool exhausted: requested {requested} rows, {available} available")]
    PoolExhausted { group: u8, requested: usize, available: usize },
    #[error("test fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("stratum {stratum} has {rows} rows; at least 2 are needed for a holdout split")]
    StratumTooSmall { stratum: String, rows: usize },
}

/// Encoded data: feature matrix, outcomes and group membership.
///
/// Loaded and generated datasets always contain both groups; subsets drawn
/// from them (training samples) may not.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    a: Vec<u8>,
    row_ids: Vec<usize>,
    feature_names: Vec<String>,
    task: Task,
}

impl Dataset {
    pub fn new(
        x: Matrix,
        y: Vec<f64>,
        a: Vec<u8>,
        row_ids: Vec<usize>,
        feature_names: Vec<String>,
        task: Task,
    ) -> Result<Self, DataError> {
        let n = x.rows();
        if y.len() != n || a.len() != n || row_ids.len() != n {
            return Err(DataError::Inconsistent(format!(
                "{} feature rows, {} outcomes, {} groups, {} row ids",
                n,
                y.len(),
                a.len(),
                row_ids.len()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(DataError::Inconsistent("feature names do not match columns".into()));
        }
        if a.iter().any(|&g| g > 1) {
            return Err(DataError::Inconsistent("group values must be 0 or 1".into()));
        }
        if task == Task::Classification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(DataError::Inconsistent("classification outcomes must be 0 or 1".into()));
        }
        for (i, row) in x.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { column: feature_names[j].clone(), row: i });
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Inconsistent("non-finite outcome".into()));
        }
        let ds = Self { x, y, a, row_ids, feature_names, task };
        for g in 0..2u8 {
            if ds.group_count(g) == 0 {
                return Err(DataError::EmptyGroup { group: g });
            }
        }
        Ok(ds)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn group_count(&self, group: u8) -> usize {
        self.a.iter().filter(|&&g| g == group).count()
    }

    /// Positions of the rows belonging to `group`, in dataset order.
    pub fn group_indices(&self, group: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.a[i] == group).collect()
    }

    /// Rows at `indices`, in that order. Row ids refer back to the source.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            a: indices.iter().map(|&i| self.a[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
            feature_names: self.feature_names.clone(),
            task: self.task,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum ColumnEncoding {
    Numeric { mean: f64, sd: f64 },
    Categorical { levels: Vec<String> },
}

/// Column statistics fitted on one table and applicable to others.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    schema: Schema,
    columns: Vec<ColumnEncoding>,
    protected_value: String,
    negative_label: Option<String>,
    group_standardization: (f64, f64),
    feature_names: Vec<String>,
}

struct Located {
    target: usize,
    sensitive: usize,
    features: Vec<usize>,
}

fn locate(schema: &Schema, table: &RawTable) -> Result<Located, DataError> {
    let mut index = BTreeMap::new();
    for (i, name) in table.header.iter().enumerate() {
        if index.insert(name.as_str(), i).is_some() {
            return Err(DataError::DuplicateColumn(name.clone()));
        }
    }
    let find = |name: &str| index.get(name).copied().ok_or_else(|| DataError::MissingColumn(name.into()));
    let target = find(&schema.target)?;
    let sensitive = find(&schema.sensitive)?;
    let features = schema.features.iter().map(|f| find(&f.name)).collect::<Result<Vec<_>, _>>()?;
    for (r, row) in table.rows.iter().enumerate() {
        if row.len() != table.header.len() {
            return Err(DataError::RaggedRow { row: r, expected: table.header.len(), found: row.len() });
        }
    }
    if table.rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    Ok(Located { target, sensitive, features })
}

fn cell(table: &RawTable, row: usize, col: usize) -> Result<&str, DataError> {
    let v = table.rows[row][col].trim();
    if v.is_empty() {
        return Err(DataError::MissingValue { column: table.header[col].clone(), row });
    }
    Ok(v)
}

fn parse_number(table: &RawTable, row: usize, col: usize) -> Result<f64, DataError> {
    let v = cell(table, row, col)?;
    let parsed: f64 = v.parse().map_err(|_| DataError::UnparsableNumeric {
        column: table.header[col].clone(),
        row,
        value: v.to_string(),
    })?;
    if !parsed.is_finite() {
        return Err(DataError::NonFinite { column: table.header[col].clone(), row });
    }
    Ok(parsed)
}

fn distinct(table: &RawTable, col: usize) -> Result<BTreeSet<&str>, DataError> {
    (0..table.rows.len()).map(|r| cell(table, r, col)).collect()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

#[inline]
fn standardize(value: f64, mean: f64, sd: f64) -> f64 {
    // constant columns carry no information; they encode to 0
    if sd > 0.0 {
        (value - mean) / sd
    } else {
        0.0
    }
}

impl Encoding {
    /// Fits category levels and standardization statistics on `table`.
    pub fn fit(schema: &Schema, table: &RawTable) -> Result<Self, DataError> {
        schema.validate()?;
        let loc = locate(schema, table)?;

        let sensitive_levels = distinct(table, loc.sensitive)?;
        if sensitive_levels.len() != 2 {
            return Err(DataError::SensitiveNotBinary {
                column: schema.sensitive.clone(),
                levels: sensitive_levels.len(),
            });
        }
        if !sensitive_levels.contains(schema.privileged_value.as_str()) {
            return Err(DataError::EmptyGroup { group: 0 });
        }
        let protected_value = sensitive_levels
            .iter()
            .find(|v| **v != schema.privileged_value)
            .map(|v| v.to_string())
            .expect("two levels");

        let negative_label = match schema.task {
            Task::Classification => {
                let levels = distinct(table, loc.target)?;
                if levels.len() != 2 {
                    return Err(DataError::TargetNotBinary { column: schema.target.clone(), levels: levels.len() });
                }
                let positive = schema.positive_label.as_deref().unwrap_or_default();
                if !levels.contains(positive) {
                    return Err(DataError::PositiveLabelAbsent {
                        column: schema.target.clone(),
                        label: positive.into(),
                    });
                }
                levels.iter().find(|v| **v != positive).map(|v| v.to_string())
            }
            Task::Regression => None,
        };

        let mut columns = Vec::with_capacity(schema.features.len());
        let mut feature_names = Vec::new();
        for (spec, &col) in schema.features.iter().zip(&loc.features) {
            match spec.kind {
                FeatureKind::Numeric => {
                    let values =
                        (0..table.rows.len()).map(|r| parse_number(table, r, col)).collect::<Result<Vec<_>, _>>()?;
                    let (mean, sd) = mean_sd(&values);
                    columns.push(ColumnEncoding::Numeric { mean, sd });
                    feature_names.push(spec.name.clone());
                }
                FeatureKind::Categorical => {
                    let levels: Vec<String> = distinct(table, col)?.into_iter().map(String::from).collect();
                    feature_names.extend(levels.iter().map(|l| format!("{}={}", spec.name, l)));
                    columns.push(ColumnEncoding::Categorical { levels });
                }
            }
        }

        let groups: Vec<f64> = (0..table.rows.len())
            .map(|r| if table.rows[r][loc.sensitive].trim() == schema.privileged_value { 0.0 } else { 1.0 })
            .collect();
        let group_standardization = mean_sd(&groups);
        if schema.sensitive_as_feature {
            feature_names.push(schema.sensitive.clone());
        }

        Ok(Self {
            schema: schema.clone(),
            columns,
            protected_value,
            negative_label,
            group_standardization,
            feature_names,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Encodes `table` with the fitted statistics.
    pub fn apply(&self, table: &RawTable) -> Result<Dataset, DataError> {
        let schema = &self.schema;
        let loc = locate(schema, table)?;
        let n = table.rows.len();
        let d = self.feature_names.len();
        let mut x = Matrix::zeros(n, d);
        let mut y = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);

        for r in 0..n {
            let s = cell(table, r, loc.sensitive)?;
            let g = if s == schema.privileged_value {
                0u8
            } else if s == self.protected_value {
                1u8
            } else {
                return Err(DataError::UnknownLevel { column: schema.sensitive.clone(), value: s.into() });
            };
            a.push(g);

            y.push(match schema.task {
                Task::Regression => parse_number(table, r, loc.target)?,
                Task::Classification => {
                    let t = cell(table, r, loc.target)?;
                    if Some(t) == schema.positive_label.as_deref() {
                        1.0
                    } else if Some(t) == self.negative_label.as_deref() {
                        0.0
                    } else {
                        return Err(DataError::UnknownLevel { column: schema.target.clone(), value: t.into() });
                    }
                }
            });

            let mut j = 0;
            for (enc, &col) in self.columns.iter().zip(&loc.features) {
                match enc {
                    ColumnEncoding::Numeric { mean, sd } => {
                        x.set(r, j, standardize(parse_number(table, r, col)?, *mean, *sd));
                        j += 1;
                    }
                    ColumnEncoding::Categorical { levels } => {
                        let v = cell(table, r, col)?;
                        let Some(pos) = levels.iter().position(|l| l == v) else {
                            return Err(DataError::UnknownLevel { column: table.header[col].clone(), value: v.into() });
                        };
                        x.set(r, j + pos, 1.0);
                        j += levels.len();
                    }
                }
            }
            if schema.sensitive_as_feature {
                let (mean, sd) = self.group_standardization;
                x.set(r, j, standardize(f64::from(g), mean, sd));
            }
        }

        Dataset::new(x, y, a, (0..n).collect(), self.feature_names.clone(), schema.task)
    }
}

/// Fits an [`Encoding`] on `table` and applies it.
pub fn encode(schema: &Schema, table: &RawTable) -> Result<Dataset, DataError> {
    Encoding::fit(schema, table)?.apply(table)
}

/// Share of the protected group (group 1) in `ds`.
pub fn population_ratio(ds: &Dataset) -> f64 {
    ds.group_count(1) as f64 / ds.len() as f64
}

/// How many rows of each group to draw, how often, and from which seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub m0: usize,
    pub m1: usize,
    pub replicates: usize,
    pub seed: u64,
    pub with_replacement: bool,
}

impl SamplingPlan {
    pub fn new(m0: usize, m1: usize, replicates: usize, seed: u64) -> Result<Self, DataError> {
        if replicates == 0 {
            return Err(DataError::InvalidPlan("at least one replicate is required".into()));
        }
        Ok(Self { m0, m1, replicates, seed, with_replacement: false })
    }

    pub fn with_replacement(mut self, with_replacement: bool) -> Self {
        self.with_replacement = with_replacement;
        self
    }

    pub fn m(&self) -> usize {
        self.m0 + self.m1
    }

    fn count(&self, group: u8) -> usize {
        if group == 0 {
            self.m0
        } else {
            self.m1
        }
    }
}

/// Draws replicate `replicate` of `plan`: exactly `m0` rows of group 0 and
/// `m1` rows of group 1, uniformly within each group, in shuffled order.
///
/// The draw depends only on `(plan.seed, replicate)`, never on call order.
pub fn draw_sample(ds: &Dataset, plan: &SamplingPlan, replicate: usize) -> Result<Dataset, DataError> {
    if replicate >= plan.replicates {
        return Err(DataError::InvalidPlan(format!(
            "replicate {} out of range for {} replicates",
            replicate, plan.replicates
        )));
    }
    let mut rng = rng::stream(plan.seed, &[replicate as u64]);
    let mut chosen = Vec::with_capacity(plan.m());
    for group in 0..2u8 {
        let pool = ds.group_indices(group);
        let want = plan.count(group);
        if want == 0 {
            continue;
        }
        if plan.with_replacement {
            if pool.is_empty() {
                return Err(DataError::PoolExhausted { group, requested: want, available: 0 });
            }
            chosen.extend((0..want).map(|_| pool[rng.random_range(0..pool.len())]));
        } else {
            if want > pool.len() {
                return Err(DataError::PoolExhausted { group, requested: want, available: pool.len() });
            }
            chosen.extend(rand::seq::index::sample(&mut rng, pool.len(), want).iter().map(|i| pool[i]));
        }
    }
    chosen.shuffle(&mut rng);
    Ok(ds.subset(&chosen))
}

/// Splits `ds` into a training pool and a test set, stratified on group and
/// (for classification) outcome. Both parts keep dataset order.
pub fn holdout_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidFraction(test_fraction));
    }
    let labels: &[Option<u8>] = match ds.task() {
        Task::Classification => &[Some(0), Some(1)],
        Task::Regression => &[None],
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for group in 0..2u8 {
        for &label in labels {
            let mut members: Vec<usize> = (0..ds.len())
                .filter(|&i| ds.a[i] == group && label.is_none_or(|l| ds.y[i] == f64::from(l)))
                .collect();
            if members.len() < 2 {
                let stratum = match label {
                    Some(l) => format!("(group {group}, label {l})"),
                    None => format!("(group {group})"),
                };
                return Err(DataError::StratumTooSmall { stratum, rows: members.len() });
            }
            let n_test = libm::round(test_fraction * members.len() as f64) as usize;
            let n_test = n_test.clamp(1, members.len() - 1);
            let tag = label.map_or(2, u64::from);
            members.shuffle(&mut rng::stream(seed, &[u64::from(group), tag]));
            test.extend_from_slice(&members[..n_test]);
            train.extend_from_slice(&members[n_test..]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(header: &[&str], rows: &[&[&str]]) -> RawTable {
        RawTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    fn schema(features: Vec<FeatureSpec>) -> Schema {
        Schema {
            target: "y".into(),
            positive_label: Some("yes".into()),
            sensitive: "sex".into(),
            privileged_value: "m".into(),
            features,
            task: Task::Classification,
            sensitive_as_feature: false,
        }
    }

    fn four_rows() -> RawTable {
        table(
            &["num", "cat", "sex", "y"],
            &[&["1", "x", "m", "yes"], &["2", "y", "f", "no"], &["3", "z", "m", "no"], &["4", "x", "f", "yes"]],
        )
    }

    #[test]
    fn one_indicator_per_level() {
        let ds = encode(&schema(vec![FeatureSpec::categorical("cat")]), &four_rows()).unwrap();
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.feature_names(), &["cat=x", "cat=y", "cat=z"]);
        assert_eq!(ds.x().row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(ds.x().row(2), &[0.0, 0.0, 1.0]);
        assert_eq!(ds.y(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ds.a(), &[0, 1, 0, 1]);
    }

    #[test]
    fn numeric_standardization_uses_population_sd() {
        let ds = encode(&schema(vec![FeatureSpec::numeric("num")]), &four_rows()).unwrap();
        // (x - 2.5) / sqrt(5/4)
        let expected = [-1.341640786499874, -0.4472135954999579, 0.4472135954999579, 1.341640786499874];
        for (i, e) in expected.iter().enumerate() {
            assert!((ds.x().get(i, 0) - e).abs() < 1e-12);
        }
        let col: Vec<f64> = (0..4).map(|i| ds.x().get(i, 0)).collect();
        let (mean, sd) = mean_sd(&col);
        assert!(mean.abs() < 1e-15 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sensitive_feature_column_is_appended() {
        let mut s = schema(vec![FeatureSpec::numeric("num")]);
        s.sensitive_as_feature = true;
        let ds = encode(&s, &four_rows()).unwrap();
        assert_eq!(ds.feature_names(), &["num", "sex"]);
        assert_eq!(ds.x().get(0, 1), -1.0);
        assert_eq!(ds.x().get(1, 1), 1.0);
    }

    #[test]
    fn sensitive_not_binary() {
        let t = table(&["num", "sex", "y"], &[&["1", "m", "yes"], &["2", "f", "no"], &["3", "x", "no"]]);
        let err = encode(&schema(vec![FeatureSpec::numeric("num")]), &t).unwrap_err();
        assert_eq!(err, DataError::SensitiveNotBinary { column: "sex".into(), levels: 3 });
        assert!(err.to_string().contains("sensitive not binary"));
    }

    #[test]
    fn named_errors() {
        let s = schema(vec![FeatureSpec::numeric("num")]);
        let t = table(&["num", "y"], &[&["1", "yes"]]);
        assert_eq!(encode(&s, &t).unwrap_err(), DataError::MissingColumn("sex".into()));

        let t = table(&["num", "sex", "y"], &[&["1", "m", "yes"], &["abc", "f", "no"]]);
        assert!(matches!(encode(&s, &t).unwrap_err(), DataError::UnparsableNumeric { row: 1, .. }));

        let t = table(&["num", "sex", "y"], &[&["1", "m", "yes"], &["", "f", "no"]]);
        assert!(matches!(encode(&s, &t).unwrap_err(), DataError::MissingValue { row: 1, .. }));

        // privileged value never occurs
        let t = table(&["num", "sex", "y"], &[&["1", "f", "yes"], &["2", "x", "no"]]);
        assert_eq!(encode(&s, &t).unwrap_err(), DataError::EmptyGroup { group: 0 });

        let t = table(&["num", "sex", "y"], &[&["1", "m", "yes"], &["2", "f", "yes"]]);
        assert!(matches!(encode(&s, &t).unwrap_err(), DataError::TargetNotBinary { levels: 1, .. }));

        let mut bad = s.clone();
        bad.features.push(FeatureSpec::numeric("y"));
        assert!(matches!(bad.validate(), Err(DataError::InvalidSchema(_))));
    }

    #[test]
    fn encoding_applies_to_other_tables() {
        let s = schema(vec![FeatureSpec::numeric("num"), FeatureSpec::categorical("cat")]);
        let enc = Encoding::fit(&s, &four_rows()).unwrap();
        let other = table(&["y", "sex", "cat", "num"], &[&["no", "f", "z", "2.5"]]);
        let ds = enc.apply(&table(&other.header.iter().map(|s| s.as_str()).collect::<Vec<_>>(), &[&["no", "f", "z", "2.5"], &["yes", "m", "x", "1"]])).unwrap();
        assert_eq!(ds.x().row(0), &[0.0, 0.0, 0.0, 1.0]);
        let unseen = table(&["num", "cat", "sex", "y"], &[&["1", "w", "m", "yes"]]);
        assert!(matches!(enc.apply(&unseen), Err(DataError::UnknownLevel { .. })));
    }

    #[test]
    fn encoding_is_idempotent() {
        let s = schema(vec![FeatureSpec::numeric("num"), FeatureSpec::categorical("cat")]);
        assert_eq!(encode(&s, &four_rows()).unwrap(), encode(&s, &four_rows()).unwrap());
    }

    fn ten_rows() -> Dataset {
        let x = Matrix::from_vec(10, 1, (0..10).map(f64::from).collect());
        let a = vec![0, 0, 1, 0, 0, 1, 0, 1, 0, 0];
        let y = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        Dataset::new(x, y, a, (0..10).collect(), vec!["v".into()], Task::Classification).unwrap()
    }

    #[test]
    fn ratio_is_protected_share() {
        assert!((population_ratio(&ten_rows()) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_draw_is_permutation() {
        let ds = ten_rows();
        let plan = SamplingPlan::new(7, 3, 1, 11).unwrap();
        let s = draw_sample(&ds, &plan, 0).unwrap();
        let mut ids = s.row_ids().to_vec();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn draws_are_deterministic_and_exact() {
        let ds = ten_rows();
        let plan = SamplingPlan::new(4, 2, 5, 3).unwrap();
        let later = draw_sample(&ds, &plan, 4).unwrap();
        for k in 0..5 {
            let s = draw_sample(&ds, &plan, k).unwrap();
            assert_eq!((s.group_count(0), s.group_count(1)), (4, 2));
        }
        assert_eq!(draw_sample(&ds, &plan, 4).unwrap().row_ids(), later.row_ids());
        assert!(draw_sample(&ds, &plan, 5).is_err());
    }

    #[test]
    fn exhausted_pool() {
        let ds = ten_rows();
        let plan = SamplingPlan::new(2, 4, 1, 0).unwrap();
        assert_eq!(
            draw_sample(&ds, &plan, 0).unwrap_err(),
            DataError::PoolExhausted { group: 1, requested: 4, available: 3 }
        );
        let s = draw_sample(&ds, &plan.with_replacement(true), 0).unwrap();
        assert_eq!(s.group_count(1), 4);
    }

    #[test]
    fn holdout_stratum_too_small() {
        let ds = ten_rows();
        // group 1 has a single negative row
        let err = holdout_split(&ds, 0.3, 1).unwrap_err();
        assert_eq!(err, DataError::StratumTooSmall { stratum: "(group 1, label 0)".into(), rows: 1 });
        assert!(matches!(holdout_split(&ds, 1.0, 1), Err(DataError::InvalidFraction(_))));
    }
}
