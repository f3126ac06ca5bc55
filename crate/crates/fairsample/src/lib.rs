//! File formats, configuration and the command line around `fairsample-core`.
//!
//! Every command reads one JSON [`RunConfig`](config::RunConfig), loads or
//! generates a dataset, runs the core computation and writes CSV and JSON
//! artifacts. Written bytes depend only on the config and the input files;
//! the thread count and the clock only show up in the manifest's
//! `started_at`.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod output;

pub use error::CliError;
