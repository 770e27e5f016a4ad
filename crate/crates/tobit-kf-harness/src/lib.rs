//! Simulation harness for the censored-measurement filtering library:
//! seed-replicated scenario execution ([`runner`]), CSV trace files
//! ([`trace`]), and aggregated metrics with JSON output ([`report`]).
//! The `tobitkf` binary wraps these into a command line.

pub mod report;
pub mod runner;
pub mod trace;
