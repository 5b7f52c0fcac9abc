//! Linear and bilinear oscillatory integral operators evaluated by direct
//! frequency quadrature, with a separable fast path (shift-form phase plus
//! factorized amplitude) that reduces each application to Fourier
//! multipliers, and the classical Hilbert and Riesz transforms.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{
    apply_multiplier, forward_transform, inverse_transform, GridError, GridFunction, GridSpec,
};
use crate::phases::{nondegeneracy_constant, Phase, PhaseError, PhaseSampling, SpatialBox};
use crate::symbols::{Amplitude, ComplexFreqFn, SpatialFn};

#[derive(Debug, Clone, PartialEq)]
pub enum FioError {
    DimMismatch {
        operator_dim: usize,
        grid_dim: usize,
    },
    ArityMismatch {
        expected: usize,
        got: usize,
    },
    SpecMismatch,
    SupportExceedsBox {
        radius: f64,
        half_period: f64,
    },
    DegeneratePhase {
        x: [f64; 2],
        xi: [f64; 2],
    },
    NotShiftForm(&'static str),
    BadOrder(f64),
    NonFiniteOutput {
        index: usize,
    },
    Grid(GridError),
}

impl fmt::Display for FioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FioError::DimMismatch {
                operator_dim,
                grid_dim,
            } => write!(f, "operator dimension {operator_dim}, grid dimension {grid_dim}"),
            FioError::ArityMismatch { expected, got } => {
                write!(f, "amplitude arity {got}, expected {expected}")
            }
            FioError::SpecMismatch => write!(f, "input functions live on different grids"),
            FioError::SupportExceedsBox {
                radius,
                half_period,
            } => write!(
                f,
                "amplitude support radius {radius} exceeds half period {half_period}"
            ),
            FioError::DegeneratePhase { x, xi } => write!(
                f,
                "phase mixed Hessian degenerates near x=({}, {}), xi=({}, {})",
                x[0], x[1], xi[0], xi[1]
            ),
            FioError::NotShiftForm(which) => {
                write!(f, "{which} phase is not of shift form x.xi + omega(xi)")
            }
            FioError::BadOrder(m) => write!(f, "order {m} not expandable (need m <= 0)"),
            FioError::NonFiniteOutput { index } => {
                write!(f, "non-finite output value at sample {index}")
            }
            FioError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl From<GridError> for FioError {
    fn from(e: GridError) -> Self {
        FioError::Grid(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FioError {}

fn check_support(amplitude: &Amplitude, spec: &GridSpec) -> Result<(), FioError> {
    if amplitude.dim() != spec.dim() {
        return Err(FioError::DimMismatch {
            operator_dim: amplitude.dim(),
            grid_dim: spec.dim(),
        });
    }
    let r = amplitude.spatial_support_radius();
    if r.is_finite() && r > spec.period() / 2.0 {
        return Err(FioError::SupportExceedsBox {
            radius: r,
            half_period: spec.period() / 2.0,
        });
    }
    Ok(())
}

fn degenerate_err(e: PhaseError) -> FioError {
    match e {
        PhaseError::Degenerate { x, xi, .. } => FioError::DegeneratePhase { x, xi },
        PhaseError::GradientCollapse { x, xi, .. } => FioError::DegeneratePhase { x, xi },
        _ => FioError::DegeneratePhase {
            x: [0.0; 2],
            xi: [0.0; 2],
        },
    }
}

fn light_sampling() -> PhaseSampling {
    PhaseSampling {
        spatial_per_axis: 5,
        directions: 8,
        radial_scales: 4,
        ..PhaseSampling::default()
    }
}

#[inline]
fn cis(t: f64) -> Complex64 {
    Complex64::new(t.cos(), t.sin())
}

/// Remultiply the modes of `fhat` by `factor(xi) e^{i omega(xi)}` and
/// return the inverse transform; the shared stage of every fast path.
fn modulated_inverse(
    fhat: &GridFunction,
    factor: &Arc<ComplexFreqFn>,
    omega: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
) -> Result<GridFunction, FioError> {
    let spec = fhat.spec();
    let mut out = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        let xi = spec.frequency(idx);
        let v = factor(&xi) * cis(omega(&xi));
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(FioError::Grid(GridError::NonFiniteMultiplier {
                index: idx,
                frequency: [xi[0], if spec.dim() > 1 { xi[1] } else { 0.0 }],
            }));
        }
        out.push(fhat.value(idx) * v);
    }
    let g = GridFunction::from_samples(spec, out)?;
    Ok(inverse_transform(&g))
}

fn spatial_scale(u: &GridFunction, spatial: &Arc<SpatialFn>) -> GridFunction {
    let spec = u.spec();
    let mut out = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        let x = spec.point(idx);
        out.push(spatial(&x) * u.value(idx));
    }
    GridFunction::from_samples(spec, out).expect("length preserved")
}

fn nonzero_modes(fhat: &GridFunction) -> Vec<(usize, Complex64)> {
    (0..fhat.spec().len())
        .filter_map(|idx| {
            let v = fhat.value(idx);
            if v.norm_sqr() > 0.0 {
                Some((idx, v))
            } else {
                None
            }
        })
        .collect()
}

/// `T f(x) = sum_xi sigma(x, xi) f_hat(xi) e^{i phi(x, xi)} / L^n`,
/// the frequency-quadrature realization of the linear operator.
#[derive(Clone)]
pub struct LinearFIO {
    amplitude: Amplitude,
    phase: Phase,
}

impl LinearFIO {
    pub fn new(amplitude: Amplitude, phase: Phase) -> Result<Self, FioError> {
        if amplitude.arity_d() != 1 {
            return Err(FioError::ArityMismatch {
                expected: 1,
                got: amplitude.arity_d(),
            });
        }
        if amplitude.dim() != phase.dim() {
            return Err(FioError::DimMismatch {
                operator_dim: phase.dim(),
                grid_dim: amplitude.dim(),
            });
        }
        Ok(LinearFIO { amplitude, phase })
    }

    pub fn amplitude(&self) -> &Amplitude {
        &self.amplitude
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    /// True when application can run through Fourier multipliers: the phase
    /// splits as `x.xi + omega(xi)` and the amplitude factorizes.
    pub fn fast_path_available(&self) -> bool {
        self.phase.shift_part().is_some() && self.amplitude.factors().is_some()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction, FioError> {
        if self.fast_path_available() {
            self.apply_fast(f)
        } else {
            self.apply_direct(f)
        }
    }

    fn apply_fast(&self, f: &GridFunction) -> Result<GridFunction, FioError> {
        check_support(&self.amplitude, &f.spec())?;
        let factors = self.amplitude.factors().expect("fast path checked");
        let omega = self.phase.shift_part().expect("fast path checked");
        let fhat = forward_transform(f);
        let u = modulated_inverse(&fhat, &factors.frequency[0], omega)?;
        let out = spatial_scale(&u, &factors.spatial);
        out.check_finite()?;
        Ok(out)
    }

    /// Direct double sum over output points and grid frequencies; the
    /// correctness reference for the fast path.
    pub fn apply_direct(&self, f: &GridFunction) -> Result<GridFunction, FioError> {
        check_support(&self.amplitude, &f.spec())?;
        let spec = f.spec();
        let fhat = forward_transform(f);
        let modes = nonzero_modes(&fhat);
        let weight = spec.period().powi(-(spec.dim() as i32));
        let freqs: Vec<_> = modes.iter().map(|&(idx, _)| spec.frequency(idx)).collect();
        let mut out = Vec::with_capacity(spec.len());
        for j in 0..spec.len() {
            let x = spec.point(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (mi, &(_, coeff)) in modes.iter().enumerate() {
                let xi = &freqs[mi];
                let sig = self.amplitude.eval(&x, xi);
                if sig.norm_sqr() == 0.0 {
                    continue;
                }
                acc += sig * coeff * cis(self.phase.eval(&x, xi));
            }
            if !(acc.re.is_finite() && acc.im.is_finite()) {
                return Err(FioError::NonFiniteOutput { index: j });
            }
            out.push(acc * weight);
        }
        Ok(GridFunction::from_samples(spec, out)?)
    }
}

/// `T(f, g)(x) = sum_xi sum_eta sigma(x, xi, eta) f_hat(xi) g_hat(eta)
/// e^{i phi1(x, xi) + i phi2(x, eta)} / L^{2n}`.
#[derive(Clone)]
pub struct BilinearFIO {
    amplitude: Amplitude,
    phase1: Phase,
    phase2: Phase,
}

impl BilinearFIO {
    pub fn new(amplitude: Amplitude, phase1: Phase, phase2: Phase) -> Result<Self, FioError> {
        if amplitude.arity_d() != 2 {
            return Err(FioError::ArityMismatch {
                expected: 2,
                got: amplitude.arity_d(),
            });
        }
        if amplitude.dim() != phase1.dim() || amplitude.dim() != phase2.dim() {
            return Err(FioError::DimMismatch {
                operator_dim: phase1.dim(),
                grid_dim: amplitude.dim(),
            });
        }
        let r = amplitude.spatial_support_radius();
        let region = SpatialBox::centered(amplitude.dim(), if r.is_finite() { r } else { 8.0 });
        let sampling = light_sampling();
        nondegeneracy_constant(&phase1, &region, &sampling).map_err(degenerate_err)?;
        nondegeneracy_constant(&phase2, &region, &sampling).map_err(degenerate_err)?;
        Ok(BilinearFIO {
            amplitude,
            phase1,
            phase2,
        })
    }

    pub fn amplitude(&self) -> &Amplitude {
        &self.amplitude
    }

    pub fn phases(&self) -> (&Phase, &Phase) {
        (&self.phase1, &self.phase2)
    }

    pub fn fast_path_available(&self) -> bool {
        self.phase1.shift_part().is_some()
            && self.phase2.shift_part().is_some()
            && self.amplitude.factors().is_some()
    }

    pub fn apply(&self, f: &GridFunction, g: &GridFunction) -> Result<GridFunction, FioError> {
        if self.fast_path_available() {
            self.apply_fast(f, g)
        } else {
            self.apply_direct(f, g)
        }
    }

    fn apply_fast(&self, f: &GridFunction, g: &GridFunction) -> Result<GridFunction, FioError> {
        if f.spec() != g.spec() {
            return Err(FioError::SpecMismatch);
        }
        check_support(&self.amplitude, &f.spec())?;
        let factors = self.amplitude.factors().expect("fast path checked");
        let u1 = modulated_inverse(
            &forward_transform(f),
            &factors.frequency[0],
            self.phase1.shift_part().expect("fast path checked"),
        )?;
        let u2 = modulated_inverse(
            &forward_transform(g),
            &factors.frequency[1],
            self.phase2.shift_part().expect("fast path checked"),
        )?;
        let out = spatial_scale(&u1.pointwise_product(&u2), &factors.spatial);
        out.check_finite()?;
        Ok(out)
    }

    /// Direct triple sum; the correctness reference.
    pub fn apply_direct(&self, f: &GridFunction, g: &GridFunction) -> Result<GridFunction, FioError> {
        if f.spec() != g.spec() {
            return Err(FioError::SpecMismatch);
        }
        check_support(&self.amplitude, &f.spec())?;
        let spec = f.spec();
        let n = spec.dim();
        let fmodes = nonzero_modes(&forward_transform(f));
        let gmodes = nonzero_modes(&forward_transform(g));
        let weight = spec.period().powi(-2 * n as i32);
        let ffreqs: Vec<_> = fmodes.iter().map(|&(i, _)| spec.frequency(i)).collect();
        let gfreqs: Vec<_> = gmodes.iter().map(|&(i, _)| spec.frequency(i)).collect();
        let mut out = Vec::with_capacity(spec.len());
        let mut joint = [0.0f64; 4];
        for j in 0..spec.len() {
            let x = spec.point(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (fi, &(_, fc)) in fmodes.iter().enumerate() {
                let xi = &ffreqs[fi];
                joint[..n].copy_from_slice(&xi[..n]);
                let ph1 = self.phase1.eval(&x, xi);
                let partial = fc * cis(ph1);
                for (gi, &(_, gc)) in gmodes.iter().enumerate() {
                    let eta = &gfreqs[gi];
                    joint[n..2 * n].copy_from_slice(&eta[..n]);
                    let sig = self.amplitude.eval(&x, &joint[..2 * n]);
                    if sig.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += sig * partial * gc * cis(self.phase2.eval(&x, eta));
                }
            }
            if !(acc.re.is_finite() && acc.im.is_finite()) {
                return Err(FioError::NonFiniteOutput { index: j });
            }
            out.push(acc * weight);
        }
        Ok(GridFunction::from_samples(spec, out)?)
    }
}

/// One separable term `weight * c(x) * a1(xi) * a2(eta)` of an expanded
/// bilinear amplitude.
#[derive(Clone)]
pub struct SeparableTerm {
    pub weight: Complex64,
    pub spatial: Option<Arc<SpatialFn>>,
    pub factor1: Arc<ComplexFreqFn>,
    pub factor2: Arc<ComplexFreqFn>,
}

/// A bilinear operator whose amplitude is a short sum of separable terms;
/// each application costs one transform pair per input plus two per term.
/// Both phases must be of shift form.
#[derive(Clone)]
pub struct SeparableBilinearFIO {
    phase1: Phase,
    phase2: Phase,
    terms: Vec<SeparableTerm>,
}

impl SeparableBilinearFIO {
    pub fn new(phase1: Phase, phase2: Phase, terms: Vec<SeparableTerm>) -> Result<Self, FioError> {
        if phase1.shift_part().is_none() {
            return Err(FioError::NotShiftForm("first"));
        }
        if phase2.shift_part().is_none() {
            return Err(FioError::NotShiftForm("second"));
        }
        if phase1.dim() != phase2.dim() {
            return Err(FioError::DimMismatch {
                operator_dim: phase1.dim(),
                grid_dim: phase2.dim(),
            });
        }
        Ok(SeparableBilinearFIO {
            phase1,
            phase2,
            terms,
        })
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn apply(&self, f: &GridFunction, g: &GridFunction) -> Result<GridFunction, FioError> {
        if f.spec() != g.spec() {
            return Err(FioError::SpecMismatch);
        }
        let spec = f.spec();
        if spec.dim() != self.phase1.dim() {
            return Err(FioError::DimMismatch {
                operator_dim: self.phase1.dim(),
                grid_dim: spec.dim(),
            });
        }
        let fhat = forward_transform(f);
        let ghat = forward_transform(g);
        let omega1 = self.phase1.shift_part().expect("checked at construction");
        let omega2 = self.phase2.shift_part().expect("checked at construction");
        let mut acc = alloc::vec![Complex64::new(0.0, 0.0); spec.len()];
        for term in &self.terms {
            let u1 = modulated_inverse(&fhat, &term.factor1, omega1)?;
            let u2 = modulated_inverse(&ghat, &term.factor2, omega2)?;
            match &term.spatial {
                Some(c) => {
                    for idx in 0..spec.len() {
                        let x = spec.point(idx);
                        acc[idx] += term.weight * c(&x) * u1.value(idx) * u2.value(idx);
                    }
                }
                None => {
                    for idx in 0..spec.len() {
                        acc[idx] += term.weight * u1.value(idx) * u2.value(idx);
                    }
                }
            }
        }
        let out = GridFunction::from_samples(spec, acc)?;
        out.check_finite()?;
        Ok(out)
    }
}

/// Gaussian expansion of the joint bracket power: nodes and weights with
/// `<Xi>^m = sum_i w_i e^{-s_i |Xi|^2}` to high relative accuracy for
/// `m < 0`, from the log-trapezoid discretization of
/// `A^{-p} = Gamma(p)^{-1} int_0^inf s^{p-1} e^{-sA} ds` with `p = -m/2`.
/// `m = 0` returns the single exact term.
pub fn bracket_power_expansion(
    m: f64,
    du: f64,
    u_lo: f64,
    u_hi: f64,
) -> Result<Vec<(f64, f64)>, FioError> {
    if m == 0.0 {
        return Ok(alloc::vec![(0.0, 1.0)]);
    }
    if !(m < 0.0) || !du.is_finite() || du <= 0.0 || u_hi <= u_lo {
        return Err(FioError::BadOrder(m));
    }
    let p = -m / 2.0;
    let gamma_p = libm::tgamma(p);
    let steps = ((u_hi - u_lo) / du).round() as usize;
    let mut terms = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let u = u_lo + du * i as f64;
        let s = u.exp();
        let trapezoid = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let w = trapezoid * du * s.powf(p) * (-s).exp() / gamma_p;
        terms.push((s, w));
    }
    Ok(terms)
}

/// Default expansion grid: wide enough that the relative error is below
/// 1e-7 uniformly in `|Xi|`.
pub fn default_bracket_expansion(m: f64) -> Result<Vec<(f64, f64)>, FioError> {
    bracket_power_expansion(m, 0.5, -80.0, 5.0)
}

/// `H f`: the Fourier multiplier `-i sgn(xi)`, with `sgn(0) = 0`.
pub fn hilbert_transform(f: &GridFunction) -> Result<GridFunction, FioError> {
    let spec = f.spec();
    if spec.dim() != 1 {
        return Err(FioError::DimMismatch {
            operator_dim: 1,
            grid_dim: spec.dim(),
        });
    }
    Ok(apply_multiplier(
        f,
        |xi: &[f64]| {
            if xi[0] > 0.0 {
                Complex64::new(0.0, -1.0)
            } else if xi[0] < 0.0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        },
        1.0,
    )?)
}

/// `R_j f`: the Fourier multiplier `-i xi_j / |xi|`, zero at the origin
/// (which also projects out the mean).
pub fn riesz_transform(f: &GridFunction, j: usize) -> Result<GridFunction, FioError> {
    let spec = f.spec();
    if j >= spec.dim() {
        return Err(FioError::DimMismatch {
            operator_dim: j + 1,
            grid_dim: spec.dim(),
        });
    }
    Ok(apply_multiplier(
        f,
        |xi: &[f64]| {
            let r = crate::numeric::norm(xi);
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -xi[j] / r)
            }
        },
        1.0,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lebesgue_norm, translate};
    use crate::numeric::bracket;
    use crate::phases::{halfwave_phase, linear_phase, sine_phase};
    use crate::symbols::{amplitude_by_name, chi0, AmplitudeParams};

    fn flat_amplitude(dim: usize, arity: usize) -> Amplitude {
        let freq: Vec<Arc<ComplexFreqFn>> = (0..arity)
            .map(|_| Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)) as Arc<ComplexFreqFn>)
            .collect();
        Amplitude::separable(
            "flat",
            Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)),
            freq,
            0.0,
            dim,
            f64::INFINITY,
        )
    }

    fn band_limited(spec: GridSpec, seed: u64, band: i64) -> GridFunction {
        let mut state = seed;
        let mut rand = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mut samples = alloc::vec![Complex64::new(0.0, 0.0); spec.len()];
        for (idx, slot) in samples.iter_mut().enumerate() {
            let k = spec.mode(idx);
            if k[0].abs() <= band && k[1].abs() <= band {
                *slot = Complex64::new(rand(), rand());
            }
        }
        let fhat = GridFunction::from_samples(spec, samples).unwrap();
        inverse_transform(&fhat)
    }

    #[test]
    fn identity_operator() {
        let spec = GridSpec::new(1, 128, 16.0).unwrap();
        let f = band_limited(spec, 7, 20);
        let op = LinearFIO::new(flat_amplitude(1, 1), linear_phase(1)).unwrap();
        let out = op.apply(&f).unwrap();
        for idx in 0..spec.len() {
            assert!((out.value(idx) - f.value(idx)).norm() < 1e-12);
        }
    }

    #[test]
    fn spatial_cutoff_identity() {
        let spec = GridSpec::new(1, 128, 16.0).unwrap();
        let f = band_limited(spec, 11, 20);
        let a = amplitude_by_name("one", 1, 1, &AmplitudeParams::default()).unwrap();
        let op = LinearFIO::new(a, linear_phase(1)).unwrap();
        let out = op.apply(&f).unwrap();
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            let expect = f.value(idx) * chi0(&x);
            assert!((out.value(idx) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn fast_and_direct_paths_agree() {
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f = band_limited(spec, 3, 31);
        let a = amplitude_by_name(
            "order_m",
            1,
            1,
            &AmplitudeParams {
                order_m: -0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let op = LinearFIO::new(a, halfwave_phase(1)).unwrap();
        assert!(op.fast_path_available());
        let fast = op.apply(&f).unwrap();
        let direct = op.apply_direct(&f).unwrap();
        let scale = lebesgue_norm(&direct, f64::INFINITY);
        for idx in 0..spec.len() {
            assert!((fast.value(idx) - direct.value(idx)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn halfwave_matches_shift_formula() {
        let spec = GridSpec::new(1, 256, 16.0 * core::f64::consts::PI).unwrap();
        let f = band_limited(spec, 23, 40);
        let a = amplitude_by_name("one", 1, 1, &AmplitudeParams::default()).unwrap();
        let op = LinearFIO::new(a, halfwave_phase(1)).unwrap();
        let out = op.apply(&f).unwrap();

        let fp = translate(&f, &[-1.0]);
        let fm = translate(&f, &[1.0]);
        let hfp = translate(&hilbert_transform(&f).unwrap(), &[-1.0]);
        let hfm = translate(&hilbert_transform(&f).unwrap(), &[1.0]);
        let i = Complex64::new(0.0, 1.0);
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            let expect = chi0(&x)
                * ((fp.value(idx) + fm.value(idx)) * 0.5
                    + i * (hfp.value(idx) - hfm.value(idx)) * 0.5);
            assert!(
                (out.value(idx) - expect).norm() < 1e-10,
                "x = {}",
                x[0]
            );
        }
    }

    #[test]
    fn modulated_amplitude_matches_brute_force() {
        let spec = GridSpec::new(1, 256, 16.0 * core::f64::consts::PI).unwrap();
        let k0 = spec.freq_spacing() * 5.0;
        let f = GridFunction::from_fn(spec, |x| cis(k0 * x[0]));
        let a = amplitude_by_name(
            "grafakos_sin",
            1,
            1,
            &AmplitudeParams {
                eps: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let op = LinearFIO::new(a.clone(), linear_phase(1)).unwrap();
        assert!(!op.fast_path_available());
        let out = op.apply(&f).unwrap();

        // brute-force double sum, no pruning, no factoring
        let fhat = forward_transform(&f);
        let w = 1.0 / spec.period();
        for j in (0..spec.len()).step_by(5) {
            let x = spec.point(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..spec.len() {
                let xi = spec.frequency(k);
                acc += a.eval(&x, &xi) * fhat.value(k) * cis(x[0] * xi[0]);
            }
            acc *= w;
            assert!((out.value(j) - acc).norm() < 1e-9);
        }
    }

    #[test]
    fn linear_phase_flat_amplitude_is_multiplier() {
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f = band_limited(spec, 31, 30);
        let a = Amplitude::separable(
            "bracket",
            Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)),
            alloc::vec![
                Arc::new(|xi: &[f64]| Complex64::new(bracket(xi).powf(-1.0), 0.0))
                    as Arc<ComplexFreqFn>
            ],
            -1.0,
            1,
            f64::INFINITY,
        );
        let op = LinearFIO::new(a, linear_phase(1)).unwrap();
        let out = op.apply(&f).unwrap();
        let oracle = apply_multiplier(
            &f,
            |xi: &[f64]| Complex64::new(bracket(xi).powf(-1.0), 0.0),
            1.0,
        )
        .unwrap();
        for idx in 0..spec.len() {
            assert!((out.value(idx) - oracle.value(idx)).norm() < 1e-12);
        }
    }

    #[test]
    fn linearity() {
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f1 = band_limited(spec, 101, 25);
        let f2 = band_limited(spec, 202, 25);
        let a = amplitude_by_name("one", 1, 1, &AmplitudeParams::default()).unwrap();
        let op = LinearFIO::new(a, halfwave_phase(1)).unwrap();
        let ca = Complex64::new(0.3, -0.8);
        let cb = Complex64::new(-1.1, 0.2);
        let combo = f1.scaled(ca).added(&f2.scaled(cb));
        let lhs = op.apply(&combo).unwrap();
        let rhs = op.apply(&f1).unwrap().scaled(ca).added(&op.apply(&f2).unwrap().scaled(cb));
        for idx in 0..spec.len() {
            assert!((lhs.value(idx) - rhs.value(idx)).norm() < 1e-11);
        }
    }

    #[test]
    fn bilinear_product_identity() {
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f = band_limited(spec, 5, 10);
        let g = band_limited(spec, 6, 10);
        let op = BilinearFIO::new(flat_amplitude(1, 2), linear_phase(1), linear_phase(1)).unwrap();
        let fast = op.apply(&f, &g).unwrap();
        let direct = op.apply_direct(&f, &g).unwrap();
        for idx in 0..spec.len() {
            let expect = f.value(idx) * g.value(idx);
            assert!((fast.value(idx) - expect).norm() < 1e-12);
            assert!((direct.value(idx) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn bilinear_vs_triple_loop_oracle() {
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f = band_limited(spec, 41, 8);
        let g = band_limited(spec, 42, 8);
        let a = amplitude_by_name("order_m", 1, 2, &AmplitudeParams { order_m: -0.5, ..Default::default() })
            .unwrap();
        let op = BilinearFIO::new(a.clone(), halfwave_phase(1), linear_phase(1)).unwrap();
        let out = op.apply(&f, &g).unwrap();

        let fhat = forward_transform(&f);
        let ghat = forward_transform(&g);
        let w = spec.period().powi(-2);
        let p1 = halfwave_phase(1);
        let p2 = linear_phase(1);
        for j in (0..spec.len()).step_by(7) {
            let x = spec.point(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..spec.len() {
                let xi = spec.frequency(k);
                for l in 0..spec.len() {
                    let eta = spec.frequency(l);
                    let joint = [xi[0], eta[0]];
                    acc += a.eval(&x, &joint)
                        * fhat.value(k)
                        * ghat.value(l)
                        * cis(p1.eval(&x, &xi) + p2.eval(&x, &eta));
                }
            }
            acc *= w;
            assert!((out.value(j) - acc).norm() < 1e-9, "x = {}", x[0]);
        }
    }

    #[test]
    fn bilinear_zero_input() {
        let spec = GridSpec::new(1, 32, 16.0).unwrap();
        let f = band_limited(spec, 1, 5);
        let z = GridFunction::zeros(spec);
        let op = BilinearFIO::new(flat_amplitude(1, 2), linear_phase(1), linear_phase(1)).unwrap();
        let out = op.apply_direct(&f, &z).unwrap();
        assert!(lebesgue_norm(&out, f64::INFINITY) == 0.0);
    }

    #[test]
    fn bilinear_model_factorization() {
        // sigma = chi0(x), phi2 = x.eta: output = chi0 . T1(f) . g
        let spec = GridSpec::new(1, 128, 16.0 * core::f64::consts::PI).unwrap();
        let f = band_limited(spec, 8, 20);
        let g = band_limited(spec, 9, 20);
        let a = amplitude_by_name("one", 1, 2, &AmplitudeParams::default()).unwrap();
        let op = BilinearFIO::new(a, halfwave_phase(1), linear_phase(1)).unwrap();
        let out = op.apply(&f, &g).unwrap();

        let t1 = LinearFIO::new(flat_amplitude(1, 1), halfwave_phase(1)).unwrap();
        let t1f = t1.apply(&f).unwrap();
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            let expect = chi0(&x) * t1f.value(idx) * g.value(idx);
            assert!((out.value(idx) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn bilinearity_in_first_argument() {
        let spec = GridSpec::new(1, 32, 16.0).unwrap();
        let f1 = band_limited(spec, 51, 6);
        let f2 = band_limited(spec, 52, 6);
        let g = band_limited(spec, 53, 6);
        let a = amplitude_by_name("one", 1, 2, &AmplitudeParams::default()).unwrap();
        let op = BilinearFIO::new(a, linear_phase(1), halfwave_phase(1)).unwrap();
        let ca = Complex64::new(0.7, 0.1);
        let cb = Complex64::new(-0.2, 1.3);
        let combo = f1.scaled(ca).added(&f2.scaled(cb));
        let lhs = op.apply_direct(&combo, &g).unwrap();
        let rhs = op
            .apply_direct(&f1, &g)
            .unwrap()
            .scaled(ca)
            .added(&op.apply_direct(&f2, &g).unwrap().scaled(cb));
        for idx in 0..spec.len() {
            assert!((lhs.value(idx) - rhs.value(idx)).norm() < 1e-11);
        }
    }

    #[test]
    fn bracket_expansion_accuracy() {
        let terms = default_bracket_expansion(-0.5).unwrap();
        assert!(terms.len() > 100);
        let mut worst = 0.0f64;
        for i in 0..200 {
            let r = 0.01 * (1500.0f64 / 0.01).powf(i as f64 / 199.0);
            let approx: f64 = terms.iter().map(|&(s, w)| w * (-s * r * r).exp()).sum();
            let exact = (1.0 + r * r).powf(-0.25);
            worst = worst.max((approx - exact).abs() / exact);
        }
        // r = 0 included
        let at0: f64 = terms.iter().map(|&(_, w)| w).sum();
        worst = worst.max((at0 - 1.0).abs());
        assert!(worst < 1e-7, "worst relative error {worst}");
    }

    #[test]
    fn bracket_expansion_trivial_and_errors() {
        let t = bracket_power_expansion(0.0, 0.5, -10.0, 5.0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0], (0.0, 1.0));
        assert!(bracket_power_expansion(0.5, 0.5, -10.0, 5.0).is_err());
    }

    #[test]
    fn separable_bilinear_matches_direct() {
        let spec = GridSpec::new(1, 32, 16.0).unwrap();
        let f = band_limited(spec, 71, 8);
        let g = band_limited(spec, 72, 8);
        let m = -0.5;
        let a = Amplitude::new(
            "joint_bracket",
            Arc::new(move |_x: &[f64], xi: &[f64]| Complex64::new(bracket(xi).powf(m), 0.0)),
            m,
            1.0,
            0.0,
            2,
            1,
            f64::INFINITY,
            false,
        );
        let reference = BilinearFIO::new(a, halfwave_phase(1), linear_phase(1))
            .unwrap()
            .apply_direct(&f, &g)
            .unwrap();

        let terms: Vec<SeparableTerm> = default_bracket_expansion(m)
            .unwrap()
            .into_iter()
            .map(|(s, w)| SeparableTerm {
                weight: Complex64::new(w, 0.0),
                spatial: None,
                factor1: Arc::new(move |xi: &[f64]| {
                    Complex64::new((-s * crate::numeric::norm_sq(xi)).exp(), 0.0)
                }),
                factor2: Arc::new(move |eta: &[f64]| {
                    Complex64::new((-s * crate::numeric::norm_sq(eta)).exp(), 0.0)
                }),
            })
            .collect();
        let fastop = SeparableBilinearFIO::new(halfwave_phase(1), linear_phase(1), terms).unwrap();
        let out = fastop.apply(&f, &g).unwrap();
        let scale = lebesgue_norm(&reference, 2.0);
        let mut err = 0.0f64;
        for idx in 0..spec.len() {
            err += (out.value(idx) - reference.value(idx)).norm_sqr();
        }
        let err = (err * spec.cell_volume()).sqrt();
        assert!(err <= 1e-5 * scale, "L2 error {err} vs scale {scale}");
    }

    #[test]
    fn separable_bilinear_rejects_bad_phase() {
        let sine = sine_phase(0.3).unwrap();
        assert!(matches!(
            SeparableBilinearFIO::new(sine, linear_phase(1), Vec::new()),
            Err(FioError::NotShiftForm("first"))
        ));
    }

    #[test]
    fn hilbert_on_modes() {
        let spec = GridSpec::new(1, 64, 2.0 * core::f64::consts::PI).unwrap();
        let f = GridFunction::from_fn(spec, |x| Complex64::new((3.0 * x[0]).cos(), 0.0));
        let h = hilbert_transform(&f).unwrap();
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            assert!((h.value(idx) - Complex64::new((3.0 * x[0]).sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn hilbert_squared_is_negation_on_mean_zero() {
        let spec = GridSpec::new(1, 128, 16.0).unwrap();
        let mut f = band_limited(spec, 88, 30);
        // remove the mean
        let mean = crate::grid::integral(&f) / spec.period();
        f = f.map(|_, v| v - mean);
        let hh = hilbert_transform(&hilbert_transform(&f).unwrap()).unwrap();
        for idx in 0..spec.len() {
            assert!((hh.value(idx) + f.value(idx)).norm() < 1e-10);
        }
    }

    #[test]
    fn hilbert_rejects_2d() {
        let spec = GridSpec::new(2, 16, 16.0).unwrap();
        let f = GridFunction::zeros(spec);
        assert!(hilbert_transform(&f).is_err());
    }

    #[test]
    fn hilbert_of_indicator_matches_log_formula() {
        // Pointwise comparison against the closed form is dominated by the
        // Nyquist truncation tail of the log singularity (~1/(pi Nyq d), a
        // few 1e-2 at d = 0.1), so both sides pass through the same Gaussian
        // low-pass before comparing on the smooth region.
        let n = 4096;
        let l = 16.0 * core::f64::consts::PI;
        let spec = GridSpec::new(1, n, l).unwrap();
        let nyq = spec.nyquist();
        let window = move |xi: &[f64]| {
            Complex64::new((-(4.0 * xi[0] / nyq) * (4.0 * xi[0] / nyq)).exp(), 0.0)
        };

        let chi = crate::grid::band_limited_indicator_interval(spec, -1.0, 1.0);
        let h = apply_multiplier(&hilbert_transform(&chi).unwrap(), window, 1.0).unwrap();

        let fine = GridSpec::new(1, 16 * n, l).unwrap();
        let formula = GridFunction::from_fn(fine, |x| {
            Complex64::new(
                (1.0 / core::f64::consts::PI) * (((x[0] + 1.0) / (x[0] - 1.0)).abs()).ln(),
                0.0,
            )
        });
        let smoothed = apply_multiplier(&formula, window, 1.0).unwrap();

        let mut worst = 0.0f64;
        for idx in 0..spec.len() {
            let x = spec.point(idx)[0];
            if x.abs() > 3.0 || (x - 1.0).abs() <= 0.1 || (x + 1.0).abs() <= 0.1 {
                continue;
            }
            let reference = smoothed.value(16 * idx).re;
            worst = worst.max((h.value(idx).re - reference).abs());
        }
        assert!(worst <= 5e-3, "max deviation {worst}");
    }

    #[test]
    fn riesz_marginals() {
        // 1D: Riesz coincides with Hilbert.
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        let f = band_limited(spec, 15, 20);
        let r = riesz_transform(&f, 0).unwrap();
        let h = hilbert_transform(&f).unwrap();
        for idx in 0..spec.len() {
            assert!((r.value(idx) - h.value(idx)).norm() < 1e-12);
        }
        assert!(riesz_transform(&f, 1).is_err());
    }

    #[test]
    fn riesz_single_mode_2d() {
        let spec = GridSpec::new(2, 16, 2.0 * core::f64::consts::PI).unwrap();
        let k = [3.0, 4.0];
        let f = GridFunction::from_fn(spec, |x| cis(k[0] * x[0] + k[1] * x[1]));
        for j in 0..2 {
            let r = riesz_transform(&f, j).unwrap();
            let expect = Complex64::new(0.0, -k[j] / 5.0);
            for idx in 0..spec.len() {
                assert!((r.value(idx) - expect * f.value(idx)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn riesz_squares_sum_to_negation() {
        let spec = GridSpec::new(2, 32, 16.0).unwrap();
        let mut f = band_limited(spec, 99, 10);
        let mean = crate::grid::integral(&f) / spec.period().powi(2);
        f = f.map(|_, v| v - mean);
        let mut acc = GridFunction::zeros(spec);
        for j in 0..2 {
            let rj = riesz_transform(&riesz_transform(&f, j).unwrap(), j).unwrap();
            acc = acc.added(&rj);
        }
        for idx in 0..spec.len() {
            assert!((acc.value(idx) + f.value(idx)).norm() < 1e-10);
        }
    }

    #[test]
    fn dimension_and_arity_validation() {
        let a2 = amplitude_by_name("one", 1, 2, &AmplitudeParams::default()).unwrap();
        assert!(matches!(
            LinearFIO::new(a2, linear_phase(1)),
            Err(FioError::ArityMismatch { .. })
        ));
        let a1 = amplitude_by_name("one", 1, 1, &AmplitudeParams::default()).unwrap();
        assert!(matches!(
            LinearFIO::new(a1.clone(), linear_phase(2)),
            Err(FioError::DimMismatch { .. })
        ));
        let op = LinearFIO::new(a1, linear_phase(1)).unwrap();
        let spec2 = GridSpec::new(2, 16, 16.0).unwrap();
        assert!(op.apply(&GridFunction::zeros(spec2)).is_err());
    }

    #[test]
    fn support_must_fit_in_box() {
        let a = amplitude_by_name(
            "one",
            1,
            1,
            &AmplitudeParams {
                support_radius: 40.0,
                ..Default::default()
            },
        )
        .unwrap();
        let op = LinearFIO::new(a, linear_phase(1)).unwrap();
        let spec = GridSpec::new(1, 64, 16.0).unwrap();
        assert!(matches!(
            op.apply(&GridFunction::zeros(spec)),
            Err(FioError::SupportExceedsBox { .. })
        ));
    }
}
