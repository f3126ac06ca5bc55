//! CSV and JSON artifacts. Undefined values are written as empty cells.

use fairsample_core::decomposition::TrainingSplit;
use fairsample_core::experiments::{CollectVariant, SweepResult, SweepRow};
use fairsample_core::{BiasEstimate, GroupCostReport};
use serde::Serialize;

use crate::CliError;

pub const SWEEP_COLUMNS: [&str; 16] = [
    "family",
    "grid_param",
    "grid_value",
    "metric",
    "estimator",
    "mean",
    "stderr",
    "k_defined",
    "k_total",
    "bias_delta",
    "netvar_delta",
    "group0_mean",
    "group1_mean",
    "estimate",
    "group0_stderr",
    "group1_stderr",
];

/// Shortest round-trip decimal; negative zero is written as `0`.
pub fn number(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn cell(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

fn split_descriptor(s: Option<TrainingSplit>) -> String {
    s.map(|s| format!("m0={};m1={}", s.m0, s.m1)).unwrap_or_default()
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let bad = |e: csv::Error| CliError::Invariant(format!("CSV serialization failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(bad)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(bad)?;
    }
    w.into_inner().map_err(|e| CliError::Invariant(format!("CSV serialization failed: {e}")))
}

pub fn group_cost_csv(reports: &[GroupCostReport]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["metric", "value_a0", "value_a1", "disc"],
        reports.iter().map(|r| [r.metric.to_string(), cell(r.value_a0), cell(r.value_a1), cell(r.disc)]),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            [
                r.family.as_str().to_string(),
                r.grid_param.to_string(),
                number(r.grid_value),
                r.metric.to_string(),
                r.estimator.clone(),
                cell(r.disc.mean),
                cell(r.disc.stderr),
                r.disc.k_defined.to_string(),
                r.disc.k_total.to_string(),
                cell(r.bias_delta),
                cell(r.netvar_delta),
                cell(r.group0.mean),
                cell(r.group1.mean),
                cell(r.estimate),
                cell(r.group0.stderr),
                cell(r.group1.stderr),
            ]
        }),
    )
}

pub const ESTIMATE_COLUMNS: [&str; 9] =
    ["kind", "metric", "estimator", "grid_value", "target", "reference", "value", "k", "replicate"];

/// `replicate` is set for single-model estimates only.
pub fn estimate_row(e: &BiasEstimate, grid_value: f64, replicate: Option<usize>) -> [String; 9] {
    [
        e.kind.as_str().to_string(),
        e.metric.to_string(),
        e.estimator.map(|est| est.as_str().to_string()).unwrap_or_default(),
        number(grid_value),
        split_descriptor(e.target),
        split_descriptor(e.reference),
        cell(e.value),
        e.k.to_string(),
        replicate.map(|r| r.to_string()).unwrap_or_default(),
    ]
}

/// Per grid point and metric: the ensemble estimate, then one single-model
/// estimate per replicate. Empty for collection runs.
pub fn estimates_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &ESTIMATE_COLUMNS,
        result.points.iter().flat_map(|p| {
            p.metrics.iter().flat_map(move |c| {
                let ensemble = c.estimate.iter().map(move |e| estimate_row(e, p.value, None));
                ensemble.chain(c.single.iter().enumerate().map(move |(k, e)| estimate_row(e, p.value, Some(k))))
            })
        }),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_dataset_sha256: Option<String>,
    pub version: &'static str,
    /// Wall-clock start; the only field that differs between identical runs.
    pub started_at: String,
    pub rows_written: usize,
    pub population_ratio: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<CollectVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<TrainingSplit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<String>,
    pub learner: &'static str,
    pub files: Vec<String>,
}

pub fn manifest_json(m: &Manifest) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(m).map_err(|e| CliError::Invariant(format!("manifest serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}
