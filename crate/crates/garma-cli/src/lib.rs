//! Command-line companion to `garma-core`: CSV ingestion, reports, built-in
//! scenarios, and the study drivers behind the `garma` binary.

pub mod io;
pub mod report;
pub mod scenario;
pub mod study;

/// Monthly polio surveillance counts bundled for the observational study.
pub const POLIO_CSV: &str = include_str!("../data/polio.csv");
