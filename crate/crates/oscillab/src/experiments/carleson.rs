//! Measure-and-pairing checks: Carleson norms before and after kernel
//! smoothing, paraproduct symbol seminorms and their growth in the band
//! translation parameters, the doubling-cube average bound against the
//! BMO norm on compactly supported samples, and the scale-integrated
//! band pairing against its product bound.

use std::sync::Arc;

use crate::config::ExperimentConfig;
use crate::inputs::{gaussian_field, mean_zero_atom, normalized, rng_for, supported_sample};
use crate::report::NormReport;
use oscillab_core::grid::GridSpec;
use oscillab_core::littlewood_paley::{build_family, paraproduct_symbol, ScaleGrid, ScaleSymbolFn};
use oscillab_core::numeric::linear_fit;
use oscillab_core::spaces::{
    bmo_embedding_check, carleson_norm, corollary_49_check, smooth_carleson, CarlesonMeasure,
};
use oscillab_core::symbols::{seminorm_estimate, SeminormOptions};
use oscillab_core::Complex64;

fn scale_weight(t: f64, x: &[f64]) -> Complex64 {
    Complex64::new((x[0] + t).cos(), 0.3 * (2.0 * x[0]).sin())
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    let mut report = NormReport::new(&cfg.experiment);
    let seed = cfg.seed;
    let family = build_family("continuous").map_err(|e| anyhow::anyhow!("{e}"))?;
    let spec = cfg.grid.spec()?;
    let n = spec.points_per_axis();
    let scales = ScaleGrid::dyadic_unit(6, 2);

    // paraproduct symbol seminorms over the translation lattice
    let opts = SeminormOptions {
        min_radius: 0.5,
        max_radius: 64.0,
        radial_count: 8,
        directions: 32,
        spatial_per_axis: 5,
        spatial_fallback: 4.0,
    };
    let translation_max = cfg.tol("translation_max", 4.0) as usize;
    let indices: [([usize; 2], [usize; 1]); 10] = [
        ([0, 0], [0]),
        ([1, 0], [0]),
        ([0, 1], [0]),
        ([0, 0], [1]),
        ([2, 0], [0]),
        ([1, 1], [0]),
        ([0, 2], [0]),
        ([1, 0], [1]),
        ([0, 1], [1]),
        ([0, 0], [2]),
    ];
    let mut log_sizes = Vec::new();
    let mut log_shifts = Vec::new();
    let mut seminorm_max: f64 = 0.0;
    for u in 0..=translation_max {
        for v in 0..=translation_max {
            let lambda = paraproduct_symbol(
                &family,
                Arc::new(scale_weight) as Arc<ScaleSymbolFn>,
                &[u as f64],
                &[v as f64],
                &scales,
                1,
            );
            let mut worst: f64 = 0.0;
            for (alpha, beta) in &indices {
                let s = seminorm_estimate(&lambda, alpha, beta, &opts)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                worst = worst.max(s);
            }
            report.push(&format!("lambda_seminorm u={u} v={v}"), n, seed, worst);
            seminorm_max = seminorm_max.max(worst);
            if worst > 0.0 {
                let shift = (1.0 + ((u * u + v * v) as f64).sqrt()).ln();
                log_shifts.push(shift);
                log_sizes.push(worst.ln());
            }
        }
    }
    let (_, degree) = linear_fit(&log_shifts, &log_sizes);
    report.push("lambda_seminorm_max", n, seed, seminorm_max);
    report.push("lambda_growth_degree", n, seed, degree);
    report.gate_le(
        "lambda_seminorm_max",
        seminorm_max,
        cfg.tol("seminorm_bound", 260.0),
    );
    report.gate_le("lambda_growth_degree", degree, cfg.tol("growth_degree", 3.0));

    // Carleson smoothing ratios over random band-energy measures plus a
    // single-cell spike
    let m2 = cfg.tol("order_m2", -0.5);
    let kappa = cfg.tol("kappa", 0.5);
    let draws = cfg.tol("smoothing_draws", 50.0) as u64;
    let mut ratio_max: f64 = 0.0;
    for draw in 0..draws {
        let f = gaussian_field(spec, &mut rng_for(seed, 0x10_0000 + draw), 40, 0.7);
        let mu = CarlesonMeasure::from_band_energy(&family, &f, &scales)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let base = carleson_norm(&mu);
        if base <= 0.0 {
            continue;
        }
        let smoothed =
            smooth_carleson(&mu, &family, m2, kappa, 1.0).map_err(|e| anyhow::anyhow!("{e}"))?;
        let ratio = carleson_norm(&smoothed) / base;
        ratio_max = ratio_max.max(ratio);
    }
    {
        let mut density = vec![vec![0.0; spec.len()]; scales.nodes().len()];
        let mid_scale = scales.nodes().len() / 2;
        density[mid_scale][spec.len() / 2] = 1.0;
        let spike = CarlesonMeasure::new(spec, &scales, density).map_err(|e| anyhow::anyhow!("{e}"))?;
        let base = carleson_norm(&spike);
        let smoothed =
            smooth_carleson(&spike, &family, m2, kappa, 1.0).map_err(|e| anyhow::anyhow!("{e}"))?;
        let ratio = carleson_norm(&smoothed) / base;
        report.push("smoothing_ratio_spike", n, seed, ratio);
        ratio_max = ratio_max.max(ratio);
    }
    report.push("smoothing_ratio_max", n, seed, ratio_max);
    report.gate_le(
        "smoothing_ratio_max",
        ratio_max,
        cfg.tol("smoothing_ratio_bound", 2.5),
    );

    // doubling-cube average bound on supported samples, both dimensions
    let samples = cfg.tol("embedding_samples", 100.0) as u64;
    for dim in [1usize, 2] {
        let espec = if dim == 1 {
            spec
        } else {
            GridSpec::new(2, cfg.tol("embedding_points_2d", 64.0) as usize, spec.period())
                .map_err(|e| anyhow::anyhow!("{e}"))?
        };
        let radius = 3.0;
        let mut violations = 0u64;
        let mut worst_margin: f64 = 0.0;
        for k in 0..samples {
            let a = supported_sample(espec, &mut rng_for(seed, 0x20_0000 + (dim as u64) * 1000 + k), radius);
            let check = bmo_embedding_check(&a, 2.0, radius).map_err(|e| anyhow::anyhow!("{e}"))?;
            if !check.avg_bound_ok {
                violations += 1;
            }
            if check.bmo > 0.0 {
                worst_margin = worst_margin.max(check.avg_abs / (check.avg_bound_constant * check.bmo));
            }
        }
        report.push(
            &format!("embedding_violations n={dim}"),
            espec.points_per_axis(),
            seed,
            violations as f64,
        );
        report.push(
            &format!("embedding_margin n={dim}"),
            espec.points_per_axis(),
            seed,
            worst_margin,
        );
        report.gate_le(&format!("embedding_violations_n{dim}"), violations as f64, 0.0);
    }

    // scale-integrated band pairing against the product bound
    let pairs = cfg.tol("pairing_draws", 8.0) as u64;
    let mut pairing_max: f64 = 0.0;
    for k in 0..pairs {
        let f = mean_zero_atom(spec, &mut rng_for(seed, 0x30_0000 + 2 * k));
        let g = normalized(
            &gaussian_field(spec, &mut rng_for(seed, 0x30_0001 + 2 * k), 24, 0.8),
            f64::INFINITY,
        );
        let (_, rhs, ratio) = corollary_49_check(&f, &g, &scale_weight, &family, &scales)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        if rhs > 0.0 {
            pairing_max = pairing_max.max(ratio);
        }
    }
    report.push("pairing_ratio_max", n, seed, pairing_max);
    report.gate_le(
        "pairing_ratio_max",
        pairing_max,
        cfg.tol("pairing_bound", 1.0),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_has_all_sections() {
        let mut cfg = ExperimentConfig::default_for("carleson-check").unwrap();
        cfg.grid.points_per_axis = 128;
        cfg.tolerances.insert("translation_max".into(), 1.0);
        cfg.tolerances.insert("smoothing_draws".into(), 3.0);
        cfg.tolerances.insert("embedding_samples".into(), 5.0);
        cfg.tolerances.insert("embedding_points_2d".into(), 32.0);
        cfg.tolerances.insert("pairing_draws".into(), 2.0);
        let report = run(&cfg).unwrap();
        assert!(report.row_value("lambda_seminorm_max").unwrap() > 0.0);
        assert_eq!(report.row_value("embedding_violations n=1").unwrap(), 0.0);
        assert_eq!(report.row_value("embedding_violations n=2").unwrap(), 0.0);
        assert!(report.row_value("smoothing_ratio_max").unwrap() > 0.0);
    }
}
