//! Experiment harness for the NMPC toolkit: scenario and sweep files, CSV
//! tables and SVG plots.

// Validation uses negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod plot;
pub mod report;
pub mod scenario_file;
pub mod sweep;

pub use error::{CliError, Result};
