//! CSV tables and JSON schemas on disk.

use std::fs;
use std::path::Path;

use fairsample_core::dataset::{encode, RawTable, Schema};
use fairsample_core::Dataset;
use sha2::{Digest, Sha256};

use crate::CliError;

/// A table with the bytes it was parsed from.
#[derive(Clone, Debug)]
pub struct LoadedTable {
    pub table: RawTable,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses RFC 4180 CSV with a header row.
pub fn parse_csv(bytes: &[u8]) -> Result<RawTable, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("unreadable CSV header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("unreadable CSV row {}: {e}", i + 1)))?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(RawTable { header, rows })
}

pub fn read_table(path: &Path) -> Result<LoadedTable, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(LoadedTable { table: parse_csv(&bytes)?, sha256: sha256_hex(&bytes) })
}

/// Reads a schema document; a missing or malformed schema is a configuration error.
pub fn read_schema(path: &Path) -> Result<Schema, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read schema {}: {e}", path.display())))?;
    let schema: Schema =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("schema {}: {e}", path.display())))?;
    schema.validate()?;
    Ok(schema)
}

/// Loads and encodes a CSV file under `schema`.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, CliError> {
    Ok(encode(schema, &read_table(path)?.table)?)
}

pub fn table_to_csv(table: &RawTable) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| CliError::Invariant(format!("CSV serialization failed: {e}"));
    w.write_record(&table.header).map_err(bad)?;
    for row in &table.rows {
        w.write_record(row).map_err(bad)?;
    }
    w.into_inner().map_err(|e| CliError::Invariant(format!("CSV serialization failed: {e}")))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.display().to_string(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}
