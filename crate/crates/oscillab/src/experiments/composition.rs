use crate::config::ExperimentConfig;
use crate::report::NormReport;

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    Ok(NormReport::new(&cfg.experiment))
}
