//! Unboundedness of the half-wave bilinear operator on L^inf x L^p:
//! with f the interval indicator and g_eps a shrinking indicator at the
//! log singularity, the norm ratio grows like |log eps|. The second
//! phase is linear, so T(f, g_eps) = h . g_eps with h the half-wave
//! image of f, and the full bilinear evaluation is cross-checked against
//! that product at a moderate grid size.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::ExperimentConfig;
use crate::report::NormReport;
use oscillab_core::fio::{BilinearFIO, LinearFIO};
use oscillab_core::grid::{indicator_interval, lebesgue_norm, GridFunction};
use oscillab_core::phases::{halfwave_phase, linear_phase};

use oscillab_core::symbols::{Amplitude, ComplexFreqFn};
use oscillab_core::Complex64;

fn one_freq() -> Arc<ComplexFreqFn> {
    Arc::new(|_xi: &[f64]| Complex64::new(1.0, 0.0))
}

fn one_amplitude(arity: usize) -> Amplitude {
    Amplitude::separable(
        "one",
        Arc::new(|_x: &[f64]| Complex64::new(1.0, 0.0)),
        (0..arity).map(|_| one_freq()).collect(),
        0.0,
        1,
        f64::INFINITY,
    )
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    let mut report = NormReport::new(&cfg.experiment);
    let seed = cfg.seed;
    let p = cfg.tol("p", 2.0);
    let spec = cfg.grid.spec()?;
    let n = spec.points_per_axis();

    let op = LinearFIO::new(one_amplitude(1), halfwave_phase(1)).map_err(|e| anyhow::anyhow!("{e}"))?;
    let h = op
        .apply(&indicator_interval(spec, -1.0, 1.0))
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    // norm ratios over the eps ladder; the oracle for the second moment
    // of log x over (0, eps) is its antiderivative
    let eps_ladder = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut ratios = Vec::new();
    for &eps in &eps_ladder {
        let g = indicator_interval(spec, 0.0, eps);
        let tg = GridFunction::from_samples(
            spec,
            (0..spec.len()).map(|i| h.value(i) * g.value(i)).collect(),
        )
        .expect("len");
        let ratio = lebesgue_norm(&tg, p) / lebesgue_norm(&g, p);
        report.push(&format!("lp_ratio eps={eps:e}"), n, seed, ratio);
        ratios.push(ratio);
    }
    let growth = ratios.last().unwrap() / ratios[0];
    report.push("lp_ratio_growth", n, seed, growth);
    report.gate_ge("lp_ratio_growth", growth, cfg.tol("growth_factor", 2.0));
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    report.gate_ge(
        "lp_ratio_monotone",
        if monotone { 1.0 } else { 0.0 },
        1.0,
    );

    // second-moment oracle at eps = 1e-2: (1/eps) int_0^eps (log x)^2 dx
    // equals (log eps)^2 - 2 log eps + 2. The raw ratio^p is smaller by
    // roughly pi^-2 plus cross terms (|h| ~ (1/pi)|log x| near 0, and the
    // indicator's jump part contributes 1/4); the gated comparison
    // extracts w = (log(4 - x^2) - 2 pi Im h)/2, which recovers log|x|
    // pointwise from the computed h, and takes its second moment.
    {
        let eps = 1e-2;
        let g = indicator_interval(spec, 0.0, eps);
        let mut moment = 0.0;
        let mut raw_sq = 0.0;
        for i in 0..spec.len() {
            let frac = g.value(i).re;
            if frac == 0.0 {
                continue;
            }
            let x = spec.point(i)[0];
            let w = ((4.0 - x * x).ln() - 2.0 * PI * h.value(i).im) / 2.0;
            moment += w * w * frac;
            raw_sq += h.value(i).norm_sqr() * frac;
        }
        moment *= spec.cell_volume() / eps;
        raw_sq *= spec.cell_volume() / eps;
        let le = eps.ln();
        let oracle = le * le - 2.0 * le + 2.0;
        report.push("log_moment_extracted", n, seed, moment);
        report.push("log_moment_oracle", n, seed, oracle);
        report.push("lp_ratio_sq_raw", n, seed, raw_sq);
        report.gate_le(
            "log_moment_rel_err",
            (moment / oracle - 1.0).abs(),
            cfg.tol("moment_rel_tol", 0.15),
        );
    }

    // bilinear evaluation against the h . g product on a moderate grid
    {
        let cn = cfg.tol("consistency_points", 16384.0) as usize;
        let cspec = cfg.grid.spec_at(cn)?;
        let f = indicator_interval(cspec, -1.0, 1.0);
        let g = indicator_interval(cspec, 0.0, 1e-2);
        let bop = BilinearFIO::new(one_amplitude(2), halfwave_phase(1), linear_phase(1))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        anyhow::ensure!(bop.fast_path_available(), "bilinear fast path unavailable");
        let direct = bop.apply(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?;
        let hc = LinearFIO::new(one_amplitude(1), halfwave_phase(1))
            .map_err(|e| anyhow::anyhow!("{e}"))?
            .apply(&f)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut err: f64 = 0.0;
        for i in 0..cspec.len() {
            err = err.max((direct.value(i) - hc.value(i) * g.value(i)).norm());
        }
        report.push("bilinear_vs_product_err", cn, seed, err);
        report.gate_le(
            "bilinear_vs_product_err",
            err,
            cfg.tol("consistency_tol", 1e-9),
        );
    }

    // zero first input: ratio is exactly zero
    {
        let g = indicator_interval(spec, 0.0, 1e-2);
        let zero = GridFunction::zeros(spec);
        let tg = GridFunction::from_samples(
            spec,
            (0..spec.len())
                .map(|i| zero.value(i) * g.value(i))
                .collect(),
        )
        .expect("len");
        let ratio = lebesgue_norm(&tg, p) / lebesgue_norm(&g, p);
        report.push("zero_input_ratio", n, seed, ratio);
        report.gate_le("zero_input_ratio", ratio, 0.0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_growth_and_consistency() {
        let mut cfg = ExperimentConfig::default_for("lp-counterexample").unwrap();
        cfg.grid.points_per_axis = 1 << 16;
        cfg.resolutions = vec![1 << 16];
        cfg.tolerances.insert("consistency_points".into(), 4096.0);
        // moments at this size are resolution-limited near the singular
        // cell; the canonical run pins the 15% gate at 2^22 points
        cfg.tolerances.insert("moment_rel_tol".into(), 0.5);
        cfg.tolerances.insert("growth_factor".into(), 1.5);
        let report = run(&cfg).unwrap();
        assert!(report.row_value("lp_ratio_growth").unwrap() > 1.5);
        assert!(report.row_value("bilinear_vs_product_err").unwrap() < 1e-9);
        assert_eq!(report.row_value("zero_input_ratio").unwrap(), 0.0);
    }
}
