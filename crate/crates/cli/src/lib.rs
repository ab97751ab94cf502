//! Library half of the `kelly-opt` command: config files, CSV output and the
//! command implementations, kept out of `main` so they can be tested
//! in-process.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{Overrides, SweepConfig, SweepGrid};
pub use output::{OutputRow, Unit, SWEEP_HEADER};
