//! Half-wave image of an interval indicator: spectral evaluation against
//! the closed form, a Hilbert-transform calibration, shrinking-interval
//! averages of the one-sided part against the log reference, and BMO
//! norms of truncations.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::ExperimentConfig;
use crate::report::NormReport;
use oscillab_core::fio::{hilbert_transform, LinearFIO};
use oscillab_core::grid::{
    apply_multiplier, band_limited_indicator_interval, indicator_interval, GridFunction, GridSpec,
};
use oscillab_core::numeric::correlation;
use oscillab_core::phases::halfwave_phase;
use oscillab_core::spaces::bmo_norm;
use oscillab_core::symbols::{Amplitude, ComplexFreqFn};
use oscillab_core::Complex64;

fn one_amplitude() -> Amplitude {
    Amplitude::separable(
        "one",
        Arc::new(|_x: &[f64]| Complex64::new(1.0, 0.0)),
        vec![Arc::new(|_xi: &[f64]| Complex64::new(1.0, 0.0)) as Arc<ComplexFreqFn>],
        0.0,
        1,
        f64::INFINITY,
    )
}

/// `(1/2) X_(-2,2)(x) + (i/2pi) log|(x+2)(x-2)/x^2|`.
fn closed_form(x: f64) -> Complex64 {
    let re = if x.abs() < 2.0 { 0.5 } else { 0.0 };
    let im = ((x + 2.0) * (x - 2.0) / (x * x)).abs().ln() / (2.0 * PI);
    Complex64::new(re, im)
}

/// `int_0^eps log((2+x)(2-x)/x^2) dx` in antiderivative form.
fn log_integral_exact(eps: f64) -> f64 {
    (2.0 + eps) * (2.0 + eps).ln() - (2.0 - eps) * (2.0 - eps).ln() - 2.0 * eps * eps.ln()
}

/// The same integral by quadrature: Simpson on the smooth factor
/// `log(4 - x^2)` plus the elementary `-2 int_0^eps log x dx`.
fn log_integral_quadrature(eps: f64) -> f64 {
    let panels = 128;
    let h = eps / panels as f64;
    let f = |x: f64| (4.0 - x * x).ln();
    let mut acc = f(0.0) + f(eps);
    for j in 1..panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(j as f64 * h);
    }
    acc * h / 3.0 - 2.0 * eps * (eps.ln() - 1.0)
}

fn spectral_h(spec: GridSpec) -> anyhow::Result<GridFunction> {
    let op = LinearFIO::new(one_amplitude(), halfwave_phase(1)).map_err(|e| anyhow::anyhow!("{e}"))?;
    op.apply(&indicator_interval(spec, -1.0, 1.0))
        .map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    let mut report = NormReport::new(&cfg.experiment);
    let seed = cfg.seed;
    let period = cfg.grid.period;

    // spectral h against the closed form across the resolution ladder;
    // the gate applies at the finest level, on 0.05 <= |x| <= 1.9
    let mut top_err = f64::NAN;
    let mut top_res = 0;
    for &n in &cfg.resolutions {
        let spec = cfg.grid.spec_at(n)?;
        let h = spectral_h(spec)?;
        let mut err: f64 = 0.0;
        for idx in 0..spec.len() {
            let x = spec.point(idx)[0];
            if (0.05..=1.9).contains(&x.abs()) {
                err = err.max((h.value(idx) - closed_form(x)).norm());
            }
        }
        report.push("h_closed_form_err", n, seed, err);
        top_err = err;
        top_res = n;
    }
    report.gate_le("h_closed_form_err", top_err, cfg.tol("h_tol", 5e-3));

    {
        let spec = cfg.grid.spec_at(top_res)?;
        let h = spectral_h(spec)?;
        let idx3 = (0..spec.len())
            .min_by(|&a, &b| {
                let da = (spec.point(a)[0] - 3.0).abs();
                let db = (spec.point(b)[0] - 3.0).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let x3 = spec.point(idx3)[0];
        report.push("h_abs_at_3_spectral", top_res, seed, h.value(idx3).norm());
        report.push("h_abs_at_3_closed", top_res, seed, closed_form(3.0).norm());
        report.gate_le(
            "h_at_3_err",
            (h.value(idx3).norm() - closed_form(x3).norm()).abs(),
            cfg.tol("h_tol", 5e-3),
        );
        report.gate_le(
            "h_at_3_vs_reference",
            (closed_form(3.0).norm() - (9.0f64 / 5.0).ln() / (2.0 * PI)).abs(),
            1e-12,
        );
    }

    // Hilbert transform calibration: H(X_[-1,1]) against the line formula
    // (1/pi) log|(x+1)/(x-1)| away from the jump points. A raw pointwise
    // maximum is dominated by the Nyquist truncation tail of the log
    // singularity (~1/(pi Nyq d), about 2e-2 at d = 0.1 for N = 4096) and,
    // half a period out, by the wrapped tail of the line formula (~2.5e-2
    // at every N), so the gated comparison runs both sides through the
    // same Gaussian spectral low-pass on {|x| <= 3}; the raw maxima are
    // reported as diagnostics.
    {
        let hn = cfg.tol("hilbert_points", 4096.0) as usize;
        let spec = GridSpec::new(1, hn, period).map_err(|e| anyhow::anyhow!("{e}"))?;
        let nyq = spec.nyquist();
        let window = move |xi: &[f64]| {
            Complex64::new((-(4.0 * xi[0] / nyq) * (4.0 * xi[0] / nyq)).exp(), 0.0)
        };
        let oracle = |x: f64| ((x + 1.0) / (x - 1.0)).abs().ln() / PI;

        let chi = band_limited_indicator_interval(spec, -1.0, 1.0);
        let hf = hilbert_transform(&chi).map_err(|e| anyhow::anyhow!("{e}"))?;
        let hs = apply_multiplier(&hf, window, 1.0).map_err(|e| anyhow::anyhow!("{e}"))?;
        let fine = GridSpec::new(1, 16 * hn, period).map_err(|e| anyhow::anyhow!("{e}"))?;
        let formula = GridFunction::from_fn(fine, |x| Complex64::new(oracle(x[0]), 0.0));
        let reference = apply_multiplier(&formula, window, 1.0).map_err(|e| anyhow::anyhow!("{e}"))?;

        let mut err_smoothed: f64 = 0.0;
        let mut err_raw_near: f64 = 0.0;
        let mut err_raw_full: f64 = 0.0;
        for idx in 0..spec.len() {
            let x = spec.point(idx)[0];
            if (x - 1.0).abs() <= 0.1 || (x + 1.0).abs() <= 0.1 {
                continue;
            }
            let raw = (hf.value(idx) - Complex64::new(oracle(x), 0.0)).norm();
            err_raw_full = err_raw_full.max(raw);
            if x.abs() <= 3.0 {
                err_raw_near = err_raw_near.max(raw);
                err_smoothed =
                    err_smoothed.max((hs.value(idx).re - reference.value(16 * idx).re).abs());
            }
        }
        report.push("hilbert_err", hn, seed, err_smoothed);
        report.push("hilbert_err_raw", hn, seed, err_raw_near);
        report.push("hilbert_err_raw_full_domain", hn, seed, err_raw_full);
        report.gate_le("hilbert_err", err_smoothed, cfg.tol("hilbert_tol", 5e-3));
    }

    // shrinking-interval averages of h_plus = h.X_[0,1]:
    // Avg_(-eps,eps) h_plus = 1/4 + i I(eps)/(4 pi eps) with
    // I(eps) = int_0^eps log((2+x)(2-x)/x^2) dx, by quadrature with the
    // antiderivative as cross-check, against the (1/2pi)|log eps|
    // reference. The displayed-formula variant with the extra "-2" in
    // the second parenthesis is reported alongside; it differs from the
    // antiderivative by about -4 at small eps.
    let eps_ladder = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let mut quad_gap: f64 = 0.0;
    let mut avg_abs = Vec::new();
    let mut log_eps_abs = Vec::new();
    let mut rel_gap_1e3 = f64::NAN;
    for &eps in &eps_ladder {
        let iq = log_integral_quadrature(eps);
        let ie = log_integral_exact(eps);
        quad_gap = quad_gap.max((iq - ie).abs());
        let avg = Complex64::new(0.25, iq / (4.0 * PI * eps));
        let reference = eps.ln().abs() / (2.0 * PI);
        let displayed = eps * ((eps + 2.0).ln() + (2.0 - eps).ln() - 2.0 * eps.ln())
            + 2.0 * ((eps + 2.0).ln() - (2.0 - eps).ln() - 2.0);
        report.push(&format!("avg_abs eps={eps:e}"), top_res, seed, avg.norm());
        report.push(&format!("avg_reference eps={eps:e}"), top_res, seed, reference);
        report.push(
            &format!("displayed_formula_minus_antiderivative eps={eps:e}"),
            top_res,
            seed,
            displayed - ie,
        );
        avg_abs.push(avg.norm());
        log_eps_abs.push(eps.ln().abs());
        if (eps - 1e-3).abs() < 1e-12 {
            rel_gap_1e3 = (avg.norm() / reference - 1.0).abs();
        }
    }
    report.push("avg_quadrature_gap", top_res, seed, quad_gap);
    report.gate_le("avg_quadrature_gap", quad_gap, cfg.tol("quad_tol", 1e-8));
    report.gate_le(
        "avg_rel_gap_at_1e-3",
        rel_gap_1e3,
        cfg.tol("avg_rel_tol", 0.05),
    );
    let corr = correlation(&log_eps_abs, &avg_abs);
    report.push("avg_growth_correlation", top_res, seed, corr);
    report.gate_ge("avg_growth_correlation", corr, cfg.tol("avg_corr", 0.999));

    // BMO norms of h_plus with the singular cell at 0 cut out at radius
    // delta: divergence shows up as log(1/delta) growth
    {
        let bn = cfg.tol("bmo_points", 8192.0) as usize;
        let spec = cfg.grid.spec_at(bn)?;
        let h = spectral_h(spec)?;
        let deltas = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let mut norms = Vec::new();
        let mut log_delta = Vec::new();
        for &delta in &deltas {
            let samples = (0..spec.len())
                .map(|idx| {
                    let x = spec.point(idx)[0];
                    if x >= delta && x <= 1.0 {
                        h.value(idx)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let f = GridFunction::from_samples(spec, samples).expect("len");
            let b = bmo_norm(&f);
            report.push(&format!("bmo_truncation delta={delta}"), bn, seed, b);
            norms.push(b);
            log_delta.push(delta.ln().abs());
        }
        let nondecreasing = norms.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        report.gate_ge(
            "bmo_truncation_monotone",
            if nondecreasing { 1.0 } else { 0.0 },
            1.0,
        );
        let bcorr = correlation(&log_delta, &norms);
        report.push("bmo_growth_correlation", bn, seed, bcorr);
        report.gate_ge(
            "bmo_growth_correlation",
            bcorr,
            cfg.tol("bmo_corr", 0.99),
        );
    }
    Ok(report)
}
