//! File formats, network ingestion, parallel grid search, verification
//! suites and the command-line front end for `ccg-core`.

pub mod cli;
pub mod clock;
pub mod config;
pub mod format;
pub mod grid;
pub mod ingest;
pub mod verify;
