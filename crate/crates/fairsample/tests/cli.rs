mod common;

use std::fs;
use std::path::Path;

use common::{run_cli, schema_path, write_config, write_stand_in};
use fairsample::cli::{metrics_reports, prepare};
use fairsample::config::RunConfig;
use fairsample::io::{load_csv, read_schema};
use fairsample::output::group_cost_csv;
use fairsample_core::dataset::population_ratio;
use fairsample_core::Schema;
use serde_json::{json, Value};

fn synth_classification(n: usize) -> Value {
    json!({"n": n, "d": 3, "group1_share": 0.3, "outcome": {"model": "logistic", "beta": [1.0, -0.5, 0.3]}, "seed": 3})
}

fn synth_regression(n: usize) -> Value {
    json!({"n": n, "d": 2, "group1_share": 0.4, "outcome": {"model": "linear", "beta": [1.0, 0.5], "noise_sd": 0.5}, "seed": 4})
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn metrics_output_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"synth": synth_classification(800), "seed": 5, "output_dir": "out"});
    let path = write_config(dir.path(), "run.json", &cfg);
    let (code, err) = run_cli(&["metrics", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    let config = RunConfig::parse(&cfg.to_string()).unwrap();
    let prepared = prepare(&config, dir.path()).unwrap();
    let reports = metrics_reports(&prepared.split, &config.learner().unwrap(), &config.metrics_for(prepared.split.train.task())).unwrap();
    assert_eq!(read(&dir.path().join("out"), "group_costs.csv"), group_cost_csv(&reports).unwrap());

    let m = manifest(&dir.path().join("out"));
    for key in ["config", "seed", "dataset_sha256", "version", "started_at", "rows_written"] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(m["rows_written"], 6);
    assert_eq!(m["seed"], 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let csv = write_stand_in(&common::dutch(), dir.path(), 1);

    let missing_schema = write_config(dir.path(), "a.json", &json!({"data": {"csv": csv, "schema": "nope.json"}}));
    assert_eq!(run_cli(&["metrics", "--config", missing_schema.to_str().unwrap(), "--out", out]).0, 2);

    let missing_csv = write_config(dir.path(), "b.json", &json!({"data": {"csv": "nope.csv", "schema": schema_path("dutch")}}));
    assert_eq!(run_cli(&["metrics", "--config", missing_csv.to_str().unwrap(), "--out", out]).0, 3);

    let unknown_key = write_config(dir.path(), "c.json", &json!({"synth": synth_classification(200), "sead": 1}));
    let (code, err) = run_cli(&["metrics", "--config", unknown_key.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("sead"), "{err}");

    let no_config = dir.path().join("absent.json");
    assert_eq!(run_cli(&["sweep", "--config", no_config.to_str().unwrap()]).0, 2);

    // regression learner and metric on classification data
    let regression_on_classification = write_config(
        dir.path(),
        "d.json",
        &json!({
            "data": {"csv": csv, "schema": schema_path("dutch")},
            "learner": {"kind": "linear_regression"},
            "metrics": ["MSE"],
            "sweep": {"family": "decomposition", "grid": [20, 40], "replicates": 2}
        }),
    );
    assert_eq!(run_cli(&["decompose", "--config", regression_on_classification.to_str().unwrap(), "--out", out]).0, 2);

    let grid_too_big = write_config(
        dir.path(),
        "e.json",
        &json!({"synth": synth_classification(300), "sweep": {"family": "ssb_size", "grid": [10, 5000], "replicates": 2}}),
    );
    let (code, err) = run_cli(&["sweep", "--config", grid_too_big.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("5000"), "{err}");

    let bad_cell = dir.path().join("bad.csv");
    fs::write(&bad_cell, "x,g,y\n1,a,1\nzz,b,0\n1,a,0\n2,b,1\n").unwrap();
    let schema = dir.path().join("bad.json");
    fs::write(&schema, r#"{"target":"y","positive_label":"1","sensitive":"g","privileged_value":"a","task":"classification","features":[{"name":"x","kind":"numeric"}]}"#).unwrap();
    let unparsable = write_config(dir.path(), "f.json", &json!({"data": {"csv": bad_cell, "schema": schema}}));
    let (code, err) = run_cli(&["metrics", "--config", unparsable.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 3);
    assert!(err.contains("zz"), "{err}");

    assert_eq!(run_cli(&["frobnicate"]).0, 2);
}

#[test]
fn sweeps_are_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "synth": synth_classification(1500),
        "seed": 11,
        "metrics": ["FPR", "EO", "SD"],
        "sweep": {"family": "ssb_size", "grid": [20, 50, 200], "replicates": 4}
    });
    let path = write_config(dir.path(), "ssb.json", &cfg);
    let mut outputs = Vec::new();
    for threads in ["1", "4", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let (code, err) = run_cli(&["sweep", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code, 0, "{err}");
        outputs.push((read(&out, "sweep.csv"), read(&out, "estimates.csv")));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("family,grid_param,grid_value,metric,estimator,mean,stderr,k_defined,k_total"));
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("ssb_size,m,20,FPR,mean_over_models,"));

    // one ensemble row and 4 single-model rows per point and metric
    let est = String::from_utf8(outputs[0].1.clone()).unwrap();
    let rows: Vec<&str> = est.lines().collect();
    assert_eq!(rows[0], "kind,metric,estimator,grid_value,target,reference,value,k,replicate");
    assert_eq!(rows.len(), 1 + 3 * 3 * 5);
    assert!(rows[1].starts_with("SSB_M_ensemble,FPR,mean_over_models,20,"), "{}", rows[1]);
    assert!(rows[2].starts_with("SSB_single_set,FPR,,20,") && rows[2].ends_with(",1,0"), "{}", rows[2]);

    let out = dir.path().join("reseeded");
    run_cli(&["sweep", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(read(&out, "sweep.csv"), outputs[0].0);
    assert_eq!(manifest(&out)["seed"], 12);
}

#[test]
fn collect_manifest_records_the_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "synth": {"n": 3000, "d": 2, "group1_share": 0.5, "outcome": {"model": "logistic", "beta": [1.0, 0.5], "intercept": 0.5}, "seed": 2},
        "metrics": ["FNR", "ZOL"],
        "output_dir": "collect",
        "sweep": {"family": "collect", "grid": [2, 10, 30], "replicates": 3,
                  "collect": {"variant": "minority_positive_only", "fixed_majority": 40}}
    });
    let path = write_config(dir.path(), "collect.json", &cfg);
    let (code, err) = run_cli(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("collect");
    let m = manifest(&out);
    assert_eq!(m["variant"], "minority_positive_only");
    assert_eq!(m["family"], "collect");
    assert_eq!(m["rows_written"], 6);
    assert!(!out.join("estimates.csv").exists());
    assert!(String::from_utf8(read(&out, "sweep.csv")).unwrap().contains("collect,n1,30,FNR,holdout,"));
}

#[test]
fn decompose_writes_consistent_term_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "synth": synth_regression(2000),
        "learner": {"kind": "linear_regression"},
        "sweep": {"family": "decomposition", "grid": [20, 100, 400], "replicates": 5}
    });
    let path = write_config(dir.path(), "dec.json", &cfg);
    let out = dir.path().join("out");
    let (code, err) = run_cli(&["decompose", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let bytes = read(&out, "decomposition.csv");
    let mut reader = csv::Reader::from_reader(&bytes[..]);
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let get = |name: &str| r[col(name)].parse::<f64>().unwrap();
        assert!((get("estimate") - (get("bias_delta") + get("netvar_delta"))).abs() <= 1e-9);
    }
    let last = &rows[2];
    assert_eq!((&last[col("bias_delta")], &last[col("netvar_delta")], &last[col("estimate")]), ("0", "0", "0"));

    let ssb = write_config(dir.path(), "ssb.json", &json!({"synth": synth_regression(500), "learner": {"kind": "linear_regression"}, "sweep": {"family": "ssb_size"}}));
    assert_eq!(run_cli(&["decompose", "--config", ssb.to_str().unwrap(), "--out", out.to_str().unwrap()]).0, 2);
}

#[test]
fn synth_command_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"synth": synth_classification(400), "output_dir": "gen"});
    let path = write_config(dir.path(), "synth.json", &cfg);
    let (code, err) = run_cli(&["synth", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let gen = dir.path().join("gen");
    let schema = read_schema(&gen.join("schema.json")).unwrap();
    let ds = load_csv(&gen.join("data.csv"), &schema).unwrap();
    assert_eq!(ds.len(), 400);
    assert_eq!(ds.group_count(1), 120);
    let first = read(&gen, "data.csv");
    run_cli(&["synth", "--config", path.to_str().unwrap()]);
    assert_eq!(read(&gen, "data.csv"), first);
}

#[test]
fn loader_examples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    fs::write(&csv, "num,cat,g,y\n1,x,a,1\n2,y,b,0\n3,z,a,0\n4,x,b,1\n").unwrap();
    let schema: Schema = serde_json::from_value(json!({
        "target": "y", "positive_label": "1", "sensitive": "g", "privileged_value": "a", "task": "classification",
        "features": [{"name": "num", "kind": "numeric"}, {"name": "cat", "kind": "categorical"}],
        "sensitive_as_feature": false
    }))
    .unwrap();
    let ds = load_csv(&csv, &schema).unwrap();
    assert_eq!(ds.n_features(), 1 + 3);
    let sd = (5.0f64 / 4.0).sqrt();
    for (i, v) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
        assert!((ds.x().get(i, 0) - (v - 2.5) / sd).abs() < 1e-12);
    }
    // population sd: -1.5 / sqrt(5/4)
    assert!((ds.x().get(0, 0) + 1.3416).abs() < 1e-4);
    assert_eq!(load_csv(&csv, &schema).unwrap(), ds);

    fs::write(&csv, "num,cat,g,y\n1,x,a,1\n2,y,b,0\n3,z,c,0\n").unwrap();
    let err = load_csv(&csv, &schema).unwrap_err().to_string();
    assert!(err.contains("not binary"), "{err}");

    let adult = write_stand_in(&common::adult(), dir.path(), 7);
    let ds = load_csv(&adult, &read_schema(&schema_path("adult")).unwrap()).unwrap();
    assert!((population_ratio(&ds) - 0.31).abs() < 0.005);
    for name in ["compas", "dutch"] {
        assert!(read_schema(&schema_path(name)).is_ok());
    }
}
