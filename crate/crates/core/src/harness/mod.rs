//! Config-driven Monte Carlo runs: generate or load data, run the methods,
//! score them and write CSV tables and SVG charts.

mod config;
mod csv_in;
mod output;
mod runner;
mod svg;

pub use config::{CopoSettings, ExperimentConfig, GeneratorSpec, Method, OutputPaths, Sweep};
pub use csv_in::{ingest_csv, parse_csv};
pub use output::{charts, emit_outputs, fmt_f64, raw_csv, summary_csv, RAW_HEADER, SUMMARY_HEADER};
pub use runner::{
    mean_se, replicate_dataset, run_experiment, run_experiment_with, summarize, ExperimentOutput,
    RunOptions, RunRecord, SummaryRow, THREADS_ENV,
};
pub use svg::{line_chart, Series};
