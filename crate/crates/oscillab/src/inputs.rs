//! Seeded input families for the sweeps and checks: band-limited Gaussian
//! fields with a spectral slope, mean-zero atom differences, and compactly
//! supported smooth samples. Draw order is fixed and independent of the
//! grid resolution, so one (seed, stream) pair names one continuum input
//! across a refinement ladder.

use oscillab_core::grid::{inverse_transform, lebesgue_norm, GridFunction, GridSpec};
use oscillab_core::numeric::smoothstep_between;
use oscillab_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent deterministic stream for one (experiment, case, trial) slot.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Box-Muller standard normal.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Band-limited complex Gaussian field: independent coefficients on the
/// modes `|k|_inf <= max_mode`, damped by `(1 + |k|)^{-slope}`. Modes are
/// drawn in a canonical lattice order (draws happen even for modes the
/// grid cannot carry), so the same stream yields the same function at
/// every resolution with Nyquist above the band.
pub fn gaussian_field(
    spec: GridSpec,
    rng: &mut ChaCha8Rng,
    max_mode: i64,
    slope: f64,
) -> GridFunction {
    let mut modes = vec![Complex64::new(0.0, 0.0); spec.len()];
    let m = max_mode.max(0);
    let mut place = |k: [i64; 2], rng: &mut ChaCha8Rng| {
        let norm = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let coeff = complex_normal(rng) * (1.0 + norm).powf(-slope);
        if let Some(idx) = spec.index_of_mode(k) {
            modes[idx] = coeff;
        }
    };
    match spec.dim() {
        1 => {
            for k1 in -m..=m {
                place([k1, 0], rng);
            }
        }
        _ => {
            for k1 in -m..=m {
                for k2 in -m..=m {
                    place([k1, k2], rng);
                }
            }
        }
    }
    inverse_transform(&GridFunction::from_samples(spec, modes).expect("len"))
}

/// Random field carried by the integer modes `k_lo <= |k| <= k_hi` only,
/// unit-variance complex Gaussian coefficients. Draws run over the full
/// square `|k|_inf <= k_hi` so the stream consumption does not depend on
/// the annulus, keeping streams comparable across bands.
pub fn bandpass_field(
    spec: GridSpec,
    rng: &mut ChaCha8Rng,
    k_lo: i64,
    k_hi: i64,
) -> GridFunction {
    let mut modes = vec![Complex64::new(0.0, 0.0); spec.len()];
    let hi = k_hi.max(1);
    let lo = k_lo.clamp(1, hi);
    let mut place = |k: [i64; 2], rng: &mut ChaCha8Rng| {
        let coeff = complex_normal(rng);
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        if r >= lo as f64 && r <= hi as f64 {
            if let Some(idx) = spec.index_of_mode(k) {
                modes[idx] = coeff;
            }
        }
    };
    match spec.dim() {
        1 => {
            for k1 in -hi..=hi {
                place([k1, 0], rng);
            }
        }
        _ => {
            for k1 in -hi..=hi {
                for k2 in -hi..=hi {
                    place([k1, k2], rng);
                }
            }
        }
    }
    inverse_transform(&GridFunction::from_samples(spec, modes).expect("len"))
}

/// Rescale so that `lebesgue_norm(out, p) == 1`; a zero field is returned
/// unchanged.
pub fn normalized(f: &GridFunction, p: f64) -> GridFunction {
    let n = lebesgue_norm(f, p);
    if n > 0.0 {
        f.scaled(Complex64::new(1.0 / n, 0.0))
    } else {
        f.clone()
    }
}

/// Mean-zero atom: the difference of one Gaussian bump and a copy
/// translated by a whole number of cells, so the two sample multisets
/// agree and the grid integral vanishes to roundoff.
pub fn mean_zero_atom(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let n = spec.points_per_axis();
    let l = spec.period();
    let dim = spec.dim();
    let width = 0.5 + rng.gen::<f64>();
    let mut c1 = [0.0f64; 2];
    let mut c2 = [0.0f64; 2];
    for a in 0..dim {
        c1[a] = spec.spacing() * rng.gen_range(0..n as u64) as f64 - l / 2.0;
        c2[a] = spec.spacing() * rng.gen_range(0..n as u64) as f64 - l / 2.0;
    }
    let bump = |x: &[f64], c: &[f64; 2]| -> f64 {
        let mut d2 = 0.0;
        for a in 0..dim {
            let mut d = (x[a] - c[a]).rem_euclid(l);
            if d > l / 2.0 {
                d -= l;
            }
            d2 += d * d;
        }
        (-d2 / (width * width)).exp()
    };
    GridFunction::from_fn(spec, move |x| {
        Complex64::new(bump(x, &c1) - bump(x, &c2), 0.0)
    })
}

/// Smooth random field windowed to exact support in the centered cube of
/// half-width `radius`: the window factors hit zero identically outside.
pub fn supported_sample(spec: GridSpec, rng: &mut ChaCha8Rng, radius: f64) -> GridFunction {
    let field = gaussian_field(spec, rng, 8, 1.0);
    let dim = spec.dim();
    GridFunction::from_samples(
        spec,
        (0..spec.len())
            .map(|idx| {
                let x = spec.point(idx);
                let mut w = 1.0;
                for a in 0..dim {
                    w *= 1.0 - smoothstep_between(x[a].abs(), 0.5 * radius, 0.98 * radius);
                }
                field.value(idx) * w
            })
            .collect(),
    )
    .expect("len")
}
