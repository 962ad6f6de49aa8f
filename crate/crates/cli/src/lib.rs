//! Experiment harness for CAS power allocation: configuration, single-point
//! solves, SNR sweeps, iteration traces, and tidy CSV/JSON output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{DualInit, ExperimentConfig, FileConfig, OutputFormat, Scheme};
pub use error::{CliError, Result};
pub use output::{format_sig, Cell, SweepRecord};
pub use runner::{collect_sweep, emit_trace, run_point, run_sweep, summarize, trace_rows, SummaryRow};
