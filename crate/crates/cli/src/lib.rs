//! Library side of the `sweeplab` command-line tool: scenario-file
//! ingestion, report writers, packaged demos, and command execution. The
//! binary in `main.rs` only parses arguments and maps errors to exit codes.

pub mod commands;
pub mod demo;
pub mod report;
pub mod scenario;

pub use commands::{execute, Cli, CliError, Command};
