//! Experiment orchestration and reporting on top of [`simplex_core`].
//!
//! An [`ExperimentConfig`] names one experiment and its grid. [`run`] draws the
//! replicates in fixed-size blocks on a rayon pool, feeds them through the
//! core statistics and oracles, and returns an [`ExperimentReport`] that
//! serializes to CSV or JSON. Block `b` at dimension `n` always uses substream
//! `(n << 32) | b`, so a report depends on the seed and config only.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod parallel;
pub mod report;
pub mod tolerances;

pub use config::{ExperimentConfig, ExperimentKind, SnRule};
pub use error::{LabError, Result};
pub use experiments::run;
pub use report::{ExperimentReport, ReportRow, Verdict};
