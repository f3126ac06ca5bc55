//! Stand-in benchmark files for tests.
//!
//! The real Adult, COMPAS and Dutch census files are not bundled. When
//! `FAIRSAMPLE_DATA_DIR` names a directory holding `adult.csv`, `compas.csv`
//! and `dutch.csv` (pre-cleaned, matching `schemas/`), those are used.
//! Otherwise a synthetic file with the same columns, size and group share is
//! written: a logistic population from the core generator whose latent
//! features become the named numeric columns or are binned into categories.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fairsample_core::synth::{generate_table, Outcome, SynthSpec};

pub const DATA_DIR_VAR: &str = "FAIRSAMPLE_DATA_DIR";

pub enum Column {
    /// `center + scale·z`, rounded to `decimals`.
    Numeric { name: &'static str, center: f64, scale: f64, decimals: usize },
    /// `z` binned at evenly spaced cut points in (-1, 1).
    Categorical { name: &'static str, levels: &'static [&'static str] },
}

pub struct Profile {
    pub name: &'static str,
    pub n: usize,
    /// Share of the protected group.
    pub protected_share: f64,
    pub sensitive: &'static str,
    pub privileged: &'static str,
    pub protected: &'static str,
    pub target: &'static str,
    pub positive: &'static str,
    pub negative: &'static str,
    pub intercept: f64,
    /// Outcome offset of the protected group.
    pub protected_offset: f64,
    pub columns: Vec<Column>,
}

use Column::{Categorical as C, Numeric as N};

pub fn adult() -> Profile {
    Profile {
        name: "adult",
        n: 10_000,
        protected_share: 0.31,
        sensitive: "sex",
        privileged: "Male",
        protected: "Female",
        target: "income-per-year",
        positive: ">50K",
        negative: "<=50K",
        intercept: -1.2,
        protected_offset: -0.8,
        columns: vec![
            N { name: "age", center: 38.0, scale: 13.0, decimals: 0 },
            C { name: "workclass", levels: &["Private", "Self-emp", "Government"] },
            C { name: "education", levels: &["HS-grad", "Some-college", "Bachelors", "Masters"] },
            N { name: "education-num", center: 10.0, scale: 2.5, decimals: 0 },
            C { name: "marital-status", levels: &["Never-married", "Divorced", "Married-civ-spouse"] },
            C { name: "occupation", levels: &["Other-service", "Craft-repair", "Sales", "Prof-specialty"] },
            C { name: "relationship", levels: &["Own-child", "Not-in-family", "Husband"] },
            C { name: "race", levels: &["Black", "White"] },
            N { name: "capital-gain", center: 1000.0, scale: 700.0, decimals: 0 },
            N { name: "capital-loss", center: 90.0, scale: 40.0, decimals: 0 },
            N { name: "hours-per-week", center: 40.0, scale: 12.0, decimals: 0 },
            C { name: "native-country", levels: &["Other", "United-States"] },
        ],
    }
}

pub fn compas() -> Profile {
    Profile {
        name: "compas",
        n: 7214,
        protected_share: 0.81,
        sensitive: "sex",
        privileged: "Female",
        protected: "Male",
        target: "two_year_recid",
        positive: "1",
        negative: "0",
        intercept: -0.3,
        protected_offset: 0.4,
        columns: vec![
            N { name: "age", center: 34.0, scale: 11.0, decimals: 0 },
            C { name: "age_cat", levels: &["Less than 25", "25 - 45", "Greater than 45"] },
            C { name: "race", levels: &["African-American", "Caucasian", "Hispanic", "Other"] },
            N { name: "juv_fel_count", center: 0.1, scale: 0.5, decimals: 1 },
            N { name: "juv_misd_count", center: 0.1, scale: 0.5, decimals: 1 },
            N { name: "juv_other_count", center: 0.1, scale: 0.5, decimals: 1 },
            N { name: "priors_count", center: 3.5, scale: 4.5, decimals: 1 },
            C { name: "c_charge_degree", levels: &["M", "F"] },
        ],
    }
}

pub fn dutch() -> Profile {
    Profile {
        name: "dutch",
        n: 6000,
        protected_share: 0.5,
        sensitive: "sex",
        privileged: "male",
        protected: "female",
        target: "occupation",
        positive: "2_1",
        negative: "5_4_9",
        intercept: 0.0,
        protected_offset: -0.6,
        columns: vec![
            C { name: "age", levels: &["4", "5", "6", "7"] },
            C { name: "household_position", levels: &["1110", "1121", "1122", "1131"] },
            C { name: "household_size", levels: &["111", "112", "113"] },
            C { name: "prev_residence_place", levels: &["1", "2"] },
            C { name: "citizenship", levels: &["1", "2"] },
            C { name: "country_birth", levels: &["1", "2"] },
            C { name: "edu_level", levels: &["1", "2", "3", "4"] },
            C { name: "economic_status", levels: &["111", "120", "122"] },
            C { name: "cur_eco_activity", levels: &["131", "135", "137", "138"] },
            C { name: "marital_status", levels: &["1", "2", "3"] },
        ],
    }
}

fn bin(z: f64, levels: usize) -> usize {
    (1..levels).filter(|&i| z > 2.0 * i as f64 / levels as f64 - 1.0).count()
}

/// Writes the stand-in CSV for `profile` into `dir` and returns its path.
pub fn write_stand_in(profile: &Profile, dir: &Path, seed: u64) -> PathBuf {
    let d = profile.columns.len();
    let beta: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { 0.8 } else { -0.5 } / (1.0 + j as f64 / 3.0)).collect();
    let spec = SynthSpec {
        n: profile.n,
        d,
        group1_share: profile.protected_share,
        group_shift: (0..d).map(|j| if j < 2 { 0.3 } else { 0.0 }).collect(),
        outcome: Outcome::Logistic { beta, intercept: profile.intercept, group_offsets: [0.0, profile.protected_offset] },
        paired_groups: false,
        sensitive_as_feature: true,
        seed,
    };
    let (table, _) = generate_table(&spec).unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = profile
        .columns
        .iter()
        .map(|c| match c {
            Column::Numeric { name, .. } | Column::Categorical { name, .. } => *name,
        })
        .collect();
    header.push(profile.sensitive);
    header.push(profile.target);
    w.write_record(&header).unwrap();
    for row in &table.rows {
        let mut out: Vec<String> = profile
            .columns
            .iter()
            .zip(row)
            .map(|(c, cell)| {
                let z: f64 = cell.parse().unwrap();
                match c {
                    Column::Numeric { center, scale, decimals, .. } => {
                        format!("{:.*}", *decimals, (center + scale * z).max(0.0))
                    }
                    Column::Categorical { levels, .. } => levels[bin(z, levels.len())].to_string(),
                }
            })
            .collect();
        out.push(if row[d] == "1" { profile.protected } else { profile.privileged }.to_string());
        out.push(if row[d + 1] == "1" { profile.positive } else { profile.negative }.to_string());
        w.write_record(&out).unwrap();
    }
    let path = dir.join(format!("{}.csv", profile.name));
    std::fs::write(&path, w.into_inner().unwrap()).unwrap();
    path
}

/// The real file if the data directory has one, else a fresh stand-in.
pub fn benchmark_csv(profile: &Profile, scratch: &Path) -> (PathBuf, bool) {
    if let Some(dir) = std::env::var_os(DATA_DIR_VAR) {
        let real = Path::new(&dir).join(format!("{}.csv", profile.name));
        if real.exists() {
            return (real, true);
        }
    }
    (write_stand_in(profile, scratch, 2024), false)
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.json"))
}

pub fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_fairsample"))
}

/// Runs the binary and returns (exit code, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String) {
    let out = std::process::Command::new(binary()).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

pub fn write_config(dir: &Path, name: &str, json: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(json).unwrap()).unwrap();
    path
}
