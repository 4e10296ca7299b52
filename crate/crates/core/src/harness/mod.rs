//! Configuration, suite orchestration and report emission for the CLI.

pub mod config;
pub mod suite;

pub use config::{parse_integer_grid, parse_real_grid, OrbitSample, Resolved, RunConfig, RunMode, SuiteSelection};
pub use suite::{emit_plot_data, run_suite, PlotKind, ReportBundle, SuiteOutcome, SuiteResult, SCHEMA};
