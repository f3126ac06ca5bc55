//! Subcommands `metrics`, `sweep`, `decompose` and `synth`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
//! invariant violation, 1 failure to write output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use fairsample_core::dataset::Encoding;
use fairsample_core::experiments::{aggregate, run_sweep, Family, Split, SweepResult, SweepRow};
use fairsample_core::learners::fit;
use fairsample_core::metrics::disc_vector;
use fairsample_core::synth::generate_table;
use fairsample_core::{GroupCostReport, Learner, MetricKind, Task};

use crate::config::{resolve, RunConfig};
use crate::exec::Rayon;
use crate::io::{read_schema, read_table, sha256_hex, table_to_csv, write_file};
use crate::output::{estimates_csv, group_cost_csv, manifest_json, sweep_csv, Manifest};
use crate::CliError;

/// Largest tolerated gap between a decomposed total and the sum of its terms.
const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "fairsample", version, about = "Sample-size and underrepresentation bias in fairness measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write its per-group costs.
    Metrics(Common),
    /// Run the sweep described by the config's `sweep` section.
    Sweep(Common),
    /// Run a decomposition sweep and write its bias and net-variance deltas.
    Decompose(Common),
    /// Write the config's synthetic population as CSV plus schema.
    Synth(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command and returns the paths it wrote.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Metrics(c) => cmd_metrics(c),
        Command::Sweep(c) => cmd_sweep(c, false),
        Command::Decompose(c) => cmd_sweep(c, true),
        Command::Synth(c) => cmd_synth(c),
    }
}

/// Config with overrides applied, plus where its relative paths point.
struct Loaded {
    config: RunConfig,
    base: PathBuf,
    out_dir: PathBuf,
}

fn load_config(c: &Common) -> Result<Loaded, CliError> {
    let (mut config, base) = RunConfig::read(&c.config)?;
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(out) = &c.out {
        config.output_dir = Some(out.clone());
    }
    config.validate()?;
    let out_dir = match (&c.out, &config.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) => resolve(&base, dir),
        (None, None) => return Err(CliError::Config("no `output_dir` in the config and no --out".into())),
    };
    Ok(Loaded { config, base, out_dir })
}

/// Training pool and evaluation set with the fingerprints of their sources.
pub struct Prepared {
    pub split: Split,
    pub dataset_sha256: String,
    pub eval_dataset_sha256: Option<String>,
}

/// Loads or generates the data named by `config` and splits it.
pub fn prepare(config: &RunConfig, base: &Path) -> Result<Prepared, CliError> {
    let (encoding, table, sha) = match (&config.data, &config.synth) {
        (Some(src), _) => {
            let schema = read_schema(&resolve(base, &src.schema))?;
            let loaded = read_table(&resolve(base, &src.csv))?;
            (Encoding::fit(&schema, &loaded.table)?, loaded.table, loaded.sha256)
        }
        (None, Some(spec)) => {
            let (table, schema) = generate_table(spec)?;
            let sha = sha256_hex(&table_to_csv(&table)?);
            (Encoding::fit(&schema, &table)?, table, sha)
        }
        (None, None) => return Err(CliError::Config("one of `data` or `synth` is required".into())),
    };
    let ds = encoding.apply(&table)?;
    let (split, eval_sha) = match &config.eval_data {
        Some(eval) => {
            let loaded = read_table(&resolve(base, &eval.csv))?;
            (Split::with_eval(ds, encoding.apply(&loaded.table)?), Some(loaded.sha256))
        }
        None => (Split::holdout(&ds, config.test_fraction, config.seed)?, None),
    };
    Ok(Prepared { split, dataset_sha256: sha, eval_dataset_sha256: eval_sha })
}

fn check_task(learner: &Learner, metrics: &[MetricKind], task: Task) -> Result<(), CliError> {
    if learner.task() != task {
        return Err(CliError::Config(format!("learner {} does not fit a {task:?} task", learner.name())));
    }
    if let Some(m) = metrics.iter().find(|m| m.is_classification() != (task == Task::Classification)) {
        return Err(CliError::Config(format!("metric {m} does not apply to a {task:?} task")));
    }
    Ok(())
}

/// Per-group costs of one model trained on the whole training pool.
pub fn metrics_reports(split: &Split, learner: &Learner, metrics: &[MetricKind]) -> Result<Vec<GroupCostReport>, CliError> {
    let model = fit(learner, &split.train)?;
    let p = model.predict(split.test.x())?;
    disc_vector(split.test.y(), &p.labels, Some(&p.scores), split.test.a(), metrics)
        .map_err(|e| CliError::Invariant(e.to_string()))
}

fn manifest(
    command: &'static str,
    config: &RunConfig,
    prepared: &Prepared,
    learner: &Learner,
    rows_written: usize,
    files: &[PathBuf],
) -> Result<Manifest, CliError> {
    Ok(Manifest {
        command,
        config: serde_json::to_value(config).map_err(|e| CliError::Invariant(e.to_string()))?,
        seed: config.seed,
        dataset_sha256: prepared.dataset_sha256.clone(),
        eval_dataset_sha256: prepared.eval_dataset_sha256.clone(),
        version: env!("CARGO_PKG_VERSION"),
        started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        rows_written,
        population_ratio: prepared.split.population_ratio,
        train_rows: prepared.split.train.len(),
        test_rows: prepared.split.test.len(),
        family: None,
        variant: None,
        reference: None,
        replicates: None,
        evaluation: None,
        learner: learner.name(),
        files: files.iter().filter_map(|f| f.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
    })
}

fn cmd_metrics(c: &Common) -> Result<Vec<PathBuf>, CliError> {
    let Loaded { config, base, out_dir } = load_config(c)?;
    let prepared = prepare(&config, &base)?;
    let task = prepared.split.train.task();
    let learner = config.learner()?;
    let metrics = config.metrics_for(task);
    check_task(&learner, &metrics, task)?;
    let reports = metrics_reports(&prepared.split, &learner, &metrics)?;

    let csv_path = out_dir.join("group_costs.csv");
    write_file(&csv_path, &group_cost_csv(&reports)?)?;
    let manifest_path = out_dir.join("manifest.json");
    let m = manifest("metrics", &config, &prepared, &learner, reports.len(), std::slice::from_ref(&csv_path))?;
    write_file(&manifest_path, &manifest_json(&m)?)?;
    Ok(vec![csv_path, manifest_path])
}

fn threads(c: &Common) -> Result<Rayon, CliError> {
    let n = c.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if n == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    Rayon::new(n).map_err(|e| CliError::Invariant(format!("cannot start worker threads: {e}")))
}

fn check_identity(rows: &[SweepRow]) -> Result<(), CliError> {
    for r in rows {
        if let (Some(t), Some(b), Some(v)) = (r.estimate, r.bias_delta, r.netvar_delta) {
            if (t - (b + v)).abs() > IDENTITY_TOLERANCE {
                return Err(CliError::Invariant(format!(
                    "{} at {} = {}: total {t} is not bias {b} plus net variance {v}",
                    r.metric, r.grid_param, r.grid_value
                )));
            }
        }
    }
    Ok(())
}

fn cmd_sweep(c: &Common, decompose: bool) -> Result<Vec<PathBuf>, CliError> {
    let Loaded { config, base, out_dir } = load_config(c)?;
    let Some(sweep) = &config.sweep else {
        return Err(CliError::Config("the config has no `sweep` section".into()));
    };
    if decompose && sweep.family != Family::Decomposition {
        return Err(CliError::Config(format!("decompose needs sweep family decomposition, got {}", sweep.family.as_str())));
    }
    let exec = threads(c)?;
    let prepared = prepare(&config, &base)?;
    let task = prepared.split.train.task();
    let learner = config.learner()?;
    let metrics = config.metrics_for(task);
    check_task(&learner, &metrics, task)?;
    let spec = config.sweep_spec(sweep, &metrics)?;
    let result: SweepResult = run_sweep(&prepared.split, &spec, &exec)?;
    let rows = aggregate(&result);
    if result.family == Family::Decomposition {
        check_identity(&rows)?;
    }

    let name = if decompose { "decomposition.csv" } else { "sweep.csv" };
    let mut files = vec![out_dir.join(name)];
    write_file(&files[0], &sweep_csv(&rows)?)?;
    if result.family != Family::Collect {
        let path = out_dir.join("estimates.csv");
        write_file(&path, &estimates_csv(&result)?)?;
        files.push(path);
    }
    let mut m = manifest(if decompose { "decompose" } else { "sweep" }, &config, &prepared, &learner, rows.len(), &files)?;
    m.population_ratio = result.provenance.population_ratio;
    m.family = Some(result.family.as_str());
    m.variant = result.provenance.variant;
    m.reference = result.provenance.reference;
    m.replicates = Some(result.provenance.replicates);
    m.evaluation = Some(result.provenance.evaluation.clone());
    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, &manifest_json(&m)?)?;
    files.push(manifest_path);
    Ok(files)
}

fn cmd_synth(c: &Common) -> Result<Vec<PathBuf>, CliError> {
    let Loaded { config, out_dir, .. } = load_config(c)?;
    let Some(mut spec) = config.synth.clone() else {
        return Err(CliError::Config("synth needs a `synth` section".into()));
    };
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    let (table, schema) = generate_table(&spec)?;
    let data = out_dir.join("data.csv");
    write_file(&data, &table_to_csv(&table)?)?;
    let schema_path = out_dir.join("schema.json");
    let mut bytes = serde_json::to_vec_pretty(&schema).map_err(|e| CliError::Invariant(e.to_string()))?;
    bytes.push(b'\n');
    write_file(&schema_path, &bytes)?;
    Ok(vec![data, schema_path])
}
