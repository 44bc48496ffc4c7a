//! Library surface of the `kpf` batch tool: configuration parsing, CSV
//! ingestion/emission, deterministic report building, and the subcommand
//! implementations. The binary in `main.rs` is a thin argument-parsing shell
//! over `commands::dispatch`.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
