//! Experiment drivers around `oscillab-core`: seeded input families,
//! deterministic CSV/JSON reports, and the named experiments exposed by
//! the `oscillab` binary.

pub mod config;
pub mod experiments;
pub mod inputs;
pub mod report;

pub use config::ExperimentConfig;
pub use report::NormReport;
