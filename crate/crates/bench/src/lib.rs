//! Experiment harness: runs the optimizer variants over repeated seeds,
//! aggregates final metrics and writes traces, Pareto fronts, tables and plots.

pub mod error;
pub mod plots;
pub mod runner;
pub mod spec;
pub mod summary;

pub use error::{BenchError, Result};
pub use runner::{run_experiment, run_variant, ExperimentReport, RunOutcome};
pub use spec::{DataSource, ExperimentId, ExperimentSpec, Variant, VariantSettings};
pub use summary::{summarize, FinalMetrics, SummaryRow};
