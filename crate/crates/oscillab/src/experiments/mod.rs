//! The named experiments. Each takes a validated [`ExperimentConfig`] and
//! returns a [`NormReport`]; gates inside the report decide the process
//! exit code.

use crate::config::ExperimentConfig;
use crate::report::NormReport;

pub mod bmo;
pub mod carleson;
pub mod composition;
pub mod fourier;
pub mod kernel;
pub mod lp;
pub mod sweep;

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "bmo-counterexample" => bmo::run(cfg),
        "lp-counterexample" => lp::run(cfg),
        "fourier-series" => fourier::run(cfg),
        "sweep" => sweep::run(cfg),
        "composition" => composition::run(cfg),
        "kernel-check" => kernel::run(cfg),
        "carleson-check" => carleson::run(cfg),
        other => anyhow::bail!("unknown experiment '{other}'"),
    }
}
