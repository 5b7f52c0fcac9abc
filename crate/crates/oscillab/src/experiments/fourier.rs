//! Fourier-series localization of the frozen-function amplitude: expand
//! a_g(x, .) over a xi-cube into coefficients a_k(x), check their decay in
//! |k|, and rebuild the operator as sum_k a_k . T_zeta(f shifted by
//! 2 pi k / L) against the direct evaluation.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::config::ExperimentConfig;
use crate::inputs::{gaussian_field, normalized, rng_for};
use crate::report::NormReport;
use oscillab_core::fio::LinearFIO;
use oscillab_core::grid::{lebesgue_norm, translate, GridFunction, GridSpec};
use oscillab_core::numeric::{linear_fit, smoothstep_between};
use oscillab_core::phases::{halfwave_phase, linear_phase};
use oscillab_core::symbols::{
    amplitude_by_name, gp_lowfreq_amplitude, Amplitude, AmplitudeParams, ComplexFreqFn,
    RealFreqFn,
};
use oscillab_core::Complex64;

/// Half-width of the xi-cube the series is periodized over.
const Q_HALF: f64 = 10.0;
/// Gaussian frequency window, hard-cut inside the cube so the support is
/// genuinely compact; the cut sits where the Gaussian is ~1e-11.
const PSI_CUT: f64 = 5.0;

fn psi_window() -> Arc<RealFreqFn> {
    Arc::new(|xi: &[f64]| {
        if xi[0].abs() <= PSI_CUT {
            (-xi[0] * xi[0]).exp()
        } else {
            0.0
        }
    })
}

/// The series only represents a_g inside the cube, so anything the grid
/// sees outside must come through a cutoff that vanishes there.
fn zeta_amplitude() -> Amplitude {
    let zeta: Arc<ComplexFreqFn> = Arc::new(|xi: &[f64]| {
        Complex64::new(1.0 - smoothstep_between(xi[0].abs(), 6.0, 9.0), 0.0)
    });
    Amplitude::separable(
        "zeta",
        Arc::new(|_x: &[f64]| Complex64::new(1.0, 0.0)),
        vec![zeta],
        0.0,
        1,
        f64::INFINITY,
    )
}

/// Errors when the window is nonzero at or beyond the cube boundary.
fn check_compact_support(psi: &Arc<RealFreqFn>, q_half: f64) -> anyhow::Result<()> {
    let mut probe = q_half;
    while probe <= 4.0 * q_half {
        if psi(&[probe]) != 0.0 || psi(&[-probe]) != 0.0 {
            anyhow::bail!("frequency window is not compactly supported inside |xi| < {q_half}");
        }
        probe += 0.25 * q_half;
    }
    Ok(())
}

/// Coefficients a_k(x_j) = (1/M) sum_m a(x_j, xi_m) e^{-i 2 pi k xi_m / L}
/// for k in [-k_max, k_max], sampled on M uniform nodes of the cube.
fn series_coefficients(
    amp: &Amplitude,
    spec: GridSpec,
    samples: usize,
    k_max: i64,
) -> Vec<Vec<Complex64>> {
    let cube_len = 2.0 * Q_HALF;
    let dxi = cube_len / samples as f64;
    let nodes: Vec<f64> = (0..samples).map(|m| -Q_HALF + m as f64 * dxi).collect();
    let table: Vec<Vec<Complex64>> = (0..spec.len())
        .map(|j| {
            let x = spec.point(j);
            nodes.iter().map(|&xi| amp.eval(&x, &[xi])).collect()
        })
        .collect();
    let mut coeffs = Vec::with_capacity((2 * k_max + 1) as usize);
    for k in -k_max..=k_max {
        let twiddle: Vec<Complex64> = nodes
            .iter()
            .map(|&xi| {
                let ph = -TAU * k as f64 * xi / cube_len;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        let ck: Vec<Complex64> = table
            .iter()
            .map(|row| {
                let sum: Complex64 = row.iter().zip(&twiddle).map(|(a, w)| a * w).sum();
                sum / samples as f64
            })
            .collect();
        coeffs.push(ck);
    }
    coeffs
}

/// Max of ||a_k||_2 over the +-k pair, indexed by |k|.
fn norms_by_abs_k(coeffs: &[Vec<Complex64>], spec: GridSpec, k_max: i64) -> Vec<f64> {
    (0..=k_max)
        .map(|k| {
            let mut best: f64 = 0.0;
            for &signed in &[k_max + k, k_max - k] {
                let f = GridFunction::from_samples(spec, coeffs[signed as usize].clone())
                    .expect("len");
                best = best.max(lebesgue_norm(&f, 2.0));
            }
            best
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    let mut report = NormReport::new(&cfg.experiment);
    let seed = cfg.seed;
    let spec = cfg.grid.spec()?;
    let n = spec.points_per_axis();
    let k_max = cfg.tol("k_max", 32.0) as i64;
    let samples = cfg.tol("cube_samples", 256.0) as usize;

    let psi = psi_window();
    check_compact_support(&psi, Q_HALF)?;

    let mut rng = rng_for(seed, 1);
    let g = gaussian_field(spec, &mut rng, 8, 0.7);
    let sigma = amplitude_by_name("grafakos_sin", 1, 2, &AmplitudeParams::default())
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let frozen = gp_lowfreq_amplitude(&sigma, &linear_phase(1), &g, psi.clone())
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    // the window must have died out by the cube edge, or periodization
    // would alias mass back into the retained coefficients
    let mut edge: f64 = 0.0;
    for j in (0..spec.len()).step_by(8) {
        let x = spec.point(j);
        for xi in [-1.5 * Q_HALF, -Q_HALF, Q_HALF, 1.5 * Q_HALF] {
            edge = edge.max(frozen.eval(&x, &[xi]).norm());
        }
    }
    report.push("support_edge_max", n, seed, edge);
    report.gate_le("support_check", edge, cfg.tol("support_tol", 1e-12));

    // coefficient decay: fit log ||a_k||_2 against log(1 + |k|)
    let coeffs = series_coefficients(&frozen, spec, samples, k_max);
    let norms = norms_by_abs_k(&coeffs, spec, k_max);
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    for (k, &v) in norms.iter().enumerate() {
        report.push(&format!("fourier_coeff k={k}"), n, seed, v);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &v) in norms.iter().enumerate() {
        if v > 1e-13 * peak {
            xs.push((1.0 + k as f64).ln());
            ys.push(v.ln());
        }
    }
    let (_, slope) = linear_fit(&xs, &ys);
    let exponent = -slope;
    report.push("fourier_decay_exponent", n, seed, exponent);
    report.gate_ge(
        "fourier_decay_exponent",
        exponent,
        cfg.tol("decay_target", 6.0),
    );

    // reconstruction: sum_k a_k(x) T_zeta(f(. + 2 pi k / L))(x) against the
    // direct double-sum evaluation of T_{a_g} f
    let mut rng_f = rng_for(seed, 2);
    let f = normalized(&gaussian_field(spec, &mut rng_f, 32, 0.5), 2.0);
    let direct_op =
        LinearFIO::new(frozen.clone(), halfwave_phase(1)).map_err(|e| anyhow::anyhow!("{e}"))?;
    let direct = direct_op.apply(&f).map_err(|e| anyhow::anyhow!("{e}"))?;
    let zeta_op =
        LinearFIO::new(zeta_amplitude(), halfwave_phase(1)).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut recon = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (ci, k) in (-k_max..=k_max).enumerate() {
        let shift = -TAU * k as f64 / (2.0 * Q_HALF);
        let fk = translate(&f, &[shift]);
        let tk = zeta_op.apply(&fk).map_err(|e| anyhow::anyhow!("{e}"))?;
        for j in 0..spec.len() {
            recon[j] += coeffs[ci][j] * tk.value(j);
        }
    }
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..spec.len() {
        err = err.max((recon[j] - direct.value(j)).norm());
        scale = scale.max(direct.value(j).norm());
    }
    report.push("reconstruction_err", n, seed, err);
    report.push("reconstruction_err_rel", n, seed, err / scale.max(1e-300));
    report.gate_le(
        "reconstruction_err",
        err,
        cfg.tol("reconstruction_tol", 1e-6),
    );

    // xi-independent sigma: the xi profile is the window itself, so only
    // low-|k| coefficients survive beyond smoothing tails
    let sigma_one = amplitude_by_name("one", 1, 2, &AmplitudeParams::default())
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let trivial = gp_lowfreq_amplitude(&sigma_one, &linear_phase(1), &g, psi)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let tcoeffs = series_coefficients(&trivial, spec, samples, k_max);
    let tnorms = norms_by_abs_k(&tcoeffs, spec, k_max);
    let low = tnorms[0].max(1e-300);
    let high = tnorms[(k_max / 2) as usize..]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    report.push("trivial_highk_ratio", n, seed, high / low);
    report.gate_le("trivial_highk_ratio", high / low, cfg.tol("trivial_tail", 1e-2));

    Ok(report)
}
