//! Experiment orchestration: configuration, corpora, suites, reports and plot files.

pub mod config;
pub mod corpus;
pub mod report;
pub mod suites;

pub use config::{BauConfig, CotlarConfig, ExperimentConfig, LambdaSweep, ModuliConfig, Tolerances, Weak11Config};
pub use corpus::{generate_corpus, prolong, regression_inputs, restrict, spike_member, CorpusMember};
pub use report::{emit_plots, RunReport, Sweep, TestRecord, PLOT_HEADER, PLOT_SCHEMA, RUN_REPORT_SCHEMA};
pub use suites::{run_suite, run_suite_with_threads, Suite};
