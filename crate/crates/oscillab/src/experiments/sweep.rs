//! Norm-ratio sweeps for the half-wave bilinear operator over seeded
//! band-limited inputs. Bounded directions must hold their max ratio
//! across a resolution ladder; the unbounded direction must grow; the
//! fast transform paths must agree with the direct quadrature sums.

use std::sync::Arc;
use std::thread;

use crate::config::ExperimentConfig;
use crate::inputs::{gaussian_field, mean_zero_atom, normalized, rng_for};
use crate::report::NormReport;
use oscillab_core::fio::{
    default_bracket_expansion, BilinearFIO, LinearFIO, SeparableBilinearFIO, SeparableTerm,
};
use oscillab_core::grid::{indicator_interval, lebesgue_norm, GridFunction, GridSpec};
use oscillab_core::littlewood_paley::build_family;
use oscillab_core::numeric::norm_sq;
use oscillab_core::phases::{halfwave_phase, linear_phase};
use oscillab_core::spaces::hardy_norm;
use oscillab_core::symbols::{Amplitude, ComplexFreqFn};
use oscillab_core::Complex64;

fn one_amplitude(dim: usize) -> Amplitude {
    let one: Arc<ComplexFreqFn> = Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0));
    Amplitude::separable(
        "one",
        Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)),
        vec![one.clone(), one],
        0.0,
        dim,
        f64::INFINITY,
    )
}

/// The target exponent must satisfy 1/r = 1/p + 1/q (with 1/inf = 0).
fn check_conjugate(p: f64, q: f64, r: f64) -> anyhow::Result<()> {
    let inv = |e: f64| if e == f64::INFINITY { 0.0 } else { 1.0 / e };
    let gap = (inv(r) - inv(p) - inv(q)).abs();
    anyhow::ensure!(
        gap <= 1e-12,
        "exponents ({p}, {q}) -> {r} are not conjugate (gap {gap:.3e})"
    );
    Ok(())
}

/// Runs `trials` independent evaluations on worker threads and returns
/// the results in trial order, so reductions never depend on scheduling.
fn run_trials<F>(trials: usize, worker: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    let mut out = vec![0.0f64; trials];
    if trials == 0 {
        return out;
    }
    let threads = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(trials);
    let chunk = trials.div_ceil(threads);
    thread::scope(|scope| {
        for (ci, slots) in out.chunks_mut(chunk).enumerate() {
            let worker = &worker;
            scope.spawn(move || {
                for (off, slot) in slots.iter_mut().enumerate() {
                    *slot = worker(ci * chunk + off);
                }
            });
        }
    });
    out
}

fn max_and_median(ratios: &[f64]) -> (f64, f64) {
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = *sorted.last().expect("nonempty");
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    (max, median)
}

fn a_maxerr(a: &GridFunction, b: &GridFunction) -> f64 {
    (0..a.spec().len())
        .map(|i| (a.value(i) - b.value(i)).norm())
        .fold(0.0, f64::max)
}

/// One bounded-direction sweep: per-resolution max/median rows plus the
/// drift of the max ratio across the ladder.
struct SweepOutcome {
    maxima: Vec<f64>,
}

impl SweepOutcome {
    fn drift(&self) -> f64 {
        let hi = self.maxima.iter().cloned().fold(f64::MIN, f64::max);
        let lo = self.maxima.iter().cloned().fold(f64::MAX, f64::min);
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bounded_sweep<A>(
    report: &mut NormReport,
    label: &str,
    specs: &[GridSpec],
    trials: usize,
    seed: u64,
    stream_base: u64,
    band: i64,
    exponents: (f64, f64, f64),
    apply: A,
) -> anyhow::Result<SweepOutcome>
where
    A: Fn(GridSpec, &GridFunction, &GridFunction) -> anyhow::Result<GridFunction> + Sync,
{
    let (p, q, r) = exponents;
    check_conjugate(p, q, r)?;
    let mut maxima = Vec::with_capacity(specs.len());
    for (ri, &spec) in specs.iter().enumerate() {
        let n = spec.points_per_axis();
        // the input class is fixed across the ladder (same seeded
        // coefficients on the same physical band), so refining the grid
        // probes discretization of identical ratios, not a growing sup
        let max_mode = band.min(n as i64 / 4).max(4);
        let ratios = run_trials(trials, |trial| {
            let mut rng = rng_for(seed, stream_base + ri as u64 * 1000 + trial as u64);
            let f = normalized(&gaussian_field(spec, &mut rng, max_mode, 0.5), p);
            let g = normalized(&gaussian_field(spec, &mut rng, max_mode, 0.5), q);
            match apply(spec, &f, &g) {
                Ok(out) => lebesgue_norm(&out, r),
                Err(_) => f64::NAN,
            }
        });
        anyhow::ensure!(
            ratios.iter().all(|v| v.is_finite()),
            "{label}: operator failed on a trial at N={n}"
        );
        let (max, median) = max_and_median(&ratios);
        report.push(&format!("{label} N={n} max"), n, seed, max);
        report.push(&format!("{label} N={n} median"), n, seed, median);
        maxima.push(max);
    }
    Ok(SweepOutcome { maxima })
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<NormReport> {
    let mut report = NormReport::new(&cfg.experiment);
    let seed = cfg.seed;
    let trials = cfg.tol("trials", 50.0) as usize;
    let drift_bound = cfg.tol("drift_bound", 2.0);
    let inf = f64::INFINITY;

    let specs1: Vec<GridSpec> = cfg
        .resolutions
        .iter()
        .map(|&n| cfg.grid.spec_at(n))
        .collect::<Result<_, _>>()?;
    let top1 = *specs1.last().expect("nonempty resolutions");

    // n=1, order zero, L2 x L2 -> L1
    let op1 = BilinearFIO::new(one_amplitude(1), halfwave_phase(1), linear_phase(1))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let sweep1 = bounded_sweep(
        &mut report,
        "sweep_l2_l2_l1 n=1",
        &specs1,
        trials,
        seed,
        0x0A_0000,
        cfg.tol("band_n1", 64.0) as i64,
        (2.0, 2.0, 1.0),
        |_, f, g| op1.apply(f, g).map_err(|e| anyhow::anyhow!("{e}")),
    )?;
    report.gate_le("l2_l2_l1_n1_drift", sweep1.drift(), drift_bound);

    // n=2 ladder up to the configured top; order zero first
    let top2 = cfg.tol("points_2d", 128.0) as usize;
    let mut ladder2: Vec<usize> = [top2 / 4, top2 / 2, top2]
        .iter()
        .map(|&n| n.max(16))
        .collect();
    ladder2.dedup();
    let specs2: Vec<GridSpec> = ladder2
        .iter()
        .map(|&n| GridSpec::new(2, n, cfg.grid.period).map_err(|e| anyhow::anyhow!("{e}")))
        .collect::<Result<_, _>>()?;
    let op2 = BilinearFIO::new(one_amplitude(2), halfwave_phase(2), linear_phase(2))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let sweep2 = bounded_sweep(
        &mut report,
        "sweep_l2_l2_l1 n=2",
        &specs2,
        trials,
        seed,
        0x0B_0000,
        cfg.tol("band_n2", 8.0) as i64,
        (2.0, 2.0, 1.0),
        |_, f, g| op2.apply(f, g).map_err(|e| anyhow::anyhow!("{e}")),
    )?;
    report.gate_le("l2_l2_l1_n2_drift", sweep2.drift(), drift_bound);

    // n=2, order -1/2, L2 x Linf -> L2, through the separable Gaussian
    // expansion of the joint bracket power
    let m2 = cfg.tol("order_m2", -0.5);
    let terms: Vec<SeparableTerm> = default_bracket_expansion(m2)
        .map_err(|e| anyhow::anyhow!("{e}"))?
        .into_iter()
        .map(|(s, w)| SeparableTerm {
            weight: Complex64::new(w, 0.0),
            spatial: None,
            factor1: Arc::new(move |xi: &[f64]| Complex64::new((-s * norm_sq(xi)).exp(), 0.0)),
            factor2: Arc::new(move |eta: &[f64]| Complex64::new((-s * norm_sq(eta)).exp(), 0.0)),
        })
        .collect();
    let op_frac = SeparableBilinearFIO::new(halfwave_phase(2), linear_phase(2), terms)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let sweep_frac = bounded_sweep(
        &mut report,
        "sweep_l2_linf_l2 n=2",
        &specs2,
        trials,
        seed,
        0x0C_0000,
        cfg.tol("band_n2", 8.0) as i64,
        (2.0, inf, 2.0),
        |_, f, g| op_frac.apply(f, g).map_err(|e| anyhow::anyhow!("{e}")),
    )?;
    report.gate_le("l2_linf_l2_n2_drift", sweep_frac.drift(), drift_bound);

    // Hardy slot: atoms in the second input, measured against their
    // maximal-function norm at the conjugate target exponent
    let family = build_family("continuous").map_err(|e| anyhow::anyhow!("{e}"))?;
    check_conjugate(2.0, 1.0, 2.0 / 3.0)?;
    let h1_trials = cfg.tol("h1_trials", 16.0) as usize;
    let mut h1_maxima = Vec::new();
    for (ri, &spec) in specs1.iter().enumerate() {
        let n = spec.points_per_axis();
        let ratios = run_trials(h1_trials, |trial| {
            let mut rng = rng_for(seed, 0x0D_0000 + ri as u64 * 1000 + trial as u64);
            let band = (cfg.tol("band_n1", 64.0) as i64).min(n as i64 / 4).max(4);
            let f = normalized(&gaussian_field(spec, &mut rng, band, 0.5), 2.0);
            let g = mean_zero_atom(spec, &mut rng);
            let hn = match hardy_norm(&g, &family, 1.0, false) {
                Ok(v) if v > 0.0 => v,
                _ => return f64::NAN,
            };
            match op1.apply(&f, &g) {
                Ok(out) => lebesgue_norm(&out, 2.0 / 3.0) / hn,
                Err(_) => f64::NAN,
            }
        });
        anyhow::ensure!(
            ratios.iter().all(|v| v.is_finite()),
            "hardy slot failed at N={n}"
        );
        let (max, median) = max_and_median(&ratios);
        report.push(&format!("sweep_l2_h1 n=1 N={n} max"), n, seed, max);
        report.push(&format!("sweep_l2_h1 n=1 N={n} median"), n, seed, median);
        h1_maxima.push(max);
    }
    let h1 = SweepOutcome { maxima: h1_maxima };
    report.gate_le("l2_h1_n1_drift", h1.drift(), cfg.tol("h1_drift_bound", 2.0));

    // unbounded direction: Linf x L2 -> L2 against indicators shrinking
    // with the grid; the max ratio must grow along the ladder
    check_conjugate(inf, 2.0, 2.0)?;
    let mut growth_ratios = Vec::new();
    for &spec in &specs1 {
        let n = spec.points_per_axis();
        let eps = 8.0 * spec.spacing();
        let f = indicator_interval(spec, -1.0, 1.0);
        let g = indicator_interval(spec, 0.0, eps);
        let out = op1.apply(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?;
        let ratio = lebesgue_norm(&out, 2.0) / lebesgue_norm(&g, 2.0);
        report.push(&format!("sweep_counterexample n=1 N={n}"), n, seed, ratio);
        growth_ratios.push(ratio);
    }
    let growth = growth_ratios.last().unwrap() / growth_ratios.first().unwrap();
    report.gate_ge(
        "counterexample_growth",
        growth,
        cfg.tol("counterexample_growth", 1.2),
    );

    // zero amplitude: every ratio is exactly zero
    let zero: Arc<ComplexFreqFn> = Arc::new(|_: &[f64]| Complex64::new(0.0, 0.0));
    let zero_amp = Amplitude::separable(
        "zero",
        Arc::new(|_: &[f64]| Complex64::new(0.0, 0.0)),
        vec![zero.clone(), zero],
        0.0,
        1,
        f64::INFINITY,
    );
    let op_zero = BilinearFIO::new(zero_amp, halfwave_phase(1), linear_phase(1))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    {
        let mut rng = rng_for(seed, 0x0E_0000);
        let spec = specs1[0];
        let f = normalized(&gaussian_field(spec, &mut rng, 16, 0.5), 2.0);
        let g = normalized(&gaussian_field(spec, &mut rng, 16, 0.5), 2.0);
        let out = op_zero.apply(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?;
        let ratio = lebesgue_norm(&out, 1.0);
        report.push("zero_sigma_ratio", spec.points_per_axis(), seed, ratio);
        report.gate_le("zero_sigma_ratio", ratio, 0.0);
    }

    // fast paths against the direct quadrature sums
    let oracle_tol = cfg.tol("oracle_tol", 1e-9);
    {
        let spec = cfg.grid.spec_at(top1.points_per_axis().min(256))?;
        let mut rng = rng_for(seed, 0x0F_0000);
        let f = normalized(&gaussian_field(spec, &mut rng, 16, 0.5), 2.0);
        let g = normalized(&gaussian_field(spec, &mut rng, 16, 0.5), 2.0);
        let lin = LinearFIO::new(
            Amplitude::separable(
                "one",
                Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)),
                vec![Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)) as Arc<ComplexFreqFn>],
                0.0,
                1,
                f64::INFINITY,
            ),
            halfwave_phase(1),
        )
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        let lerr = a_maxerr(
            &lin.apply(&f).map_err(|e| anyhow::anyhow!("{e}"))?,
            &lin.apply_direct(&f).map_err(|e| anyhow::anyhow!("{e}"))?,
        );
        report.push("linear_oracle_err", spec.points_per_axis(), seed, lerr);
        report.gate_le("linear_oracle_err", lerr, oracle_tol);

        let berr = a_maxerr(
            &op1.apply(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?,
            &op1.apply_direct(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?,
        );
        report.push("bilinear_oracle_err n=1", spec.points_per_axis(), seed, berr);
        report.gate_le("bilinear_oracle_err_n1", berr, oracle_tol);
    }
    {
        let spec = GridSpec::new(2, 16, cfg.grid.period).map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut rng = rng_for(seed, 0x0F_0001);
        let f = normalized(&gaussian_field(spec, &mut rng, 4, 0.5), 2.0);
        let g = normalized(&gaussian_field(spec, &mut rng, 4, 0.5), 2.0);
        let berr = a_maxerr(
            &op2.apply(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?,
            &op2.apply_direct(&f, &g).map_err(|e| anyhow::anyhow!("{e}"))?,
        );
        report.push("bilinear_oracle_err n=2", spec.points_per_axis(), seed, berr);
        report.gate_le("bilinear_oracle_err_n2", berr, oracle_tol);
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugacy_is_enforced() {
        assert!(check_conjugate(2.0, 2.0, 1.0).is_ok());
        assert!(check_conjugate(2.0, f64::INFINITY, 2.0).is_ok());
        assert!(check_conjugate(2.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        let (max, med) = max_and_median(&[3.0, 1.0, 2.0]);
        assert_eq!((max, med), (3.0, 2.0));
        let (_, med) = max_and_median(&[4.0, 1.0, 2.0, 3.0]);
        assert!((med - 2.5).abs() < 1e-15);
    }

    #[test]
    fn small_sweep_is_stable() {
        let mut cfg = ExperimentConfig::default_for("sweep").unwrap();
        cfg.resolutions = vec![64, 128];
        cfg.grid.points_per_axis = 128;
        cfg.tolerances.insert("trials".into(), 4.0);
        cfg.tolerances.insert("h1_trials".into(), 2.0);
        cfg.tolerances.insert("points_2d".into(), 16.0);
        cfg.tolerances.insert("counterexample_growth".into(), 1.05);
        let report = run(&cfg).unwrap();
        assert!(report.all_pass(), "{}", report.summary());
    }
}
