//! Composition of a frequency cutoff with an oscillatory-integral operator.
//!
//! For a cutoff `rho` in S^0, an amplitude `a(y, xi)` vanishing on the unit
//! frequency ball and a phase `phi`, the composed operator `rho(tD) T` is
//! again an oscillatory-integral operator with amplitude
//!
//! `sigma_t(x, xi) = int int a(y, xi) rho(t eta)
//!     e^{i (x-y).eta + i phi(y, xi) - i phi(x, xi)} dbar eta dy`.
//!
//! The module evaluates `sigma_t` exactly by lattice quadrature, expands it
//! into the main term `rho(t grad_x phi) a` plus graded corrections
//! `(t^|alpha| / alpha!) sigma_alpha`, and measures how fast the remainder
//! shrinks with the scale.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{forward_transform, inverse_transform, GridError, GridFunction, GridSpec};
use crate::littlewood_paley::ScaleGrid;
use crate::numeric::{bracket, linear_fit, norm, norm_sq, smoothstep_between, unit_directions};
use crate::phases::{
    halfwave_phase, lambda_constant, linear_phase, nondegeneracy_constant, Phase, PhaseError,
    PhaseSampling, SpatialBox,
};
use crate::symbols::{build_cutoffs, chi0, Amplitude};

/// Frequency cutoff symbol, called with the already scaled argument `t eta`.
pub type RhoFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

#[derive(Debug)]
pub enum CompError {
    /// The amplitude must take a single frequency argument.
    BadArity(usize),
    /// The amplitude order must satisfy `m <= 0`.
    BadOrder(f64),
    /// Expansion order outside `1..=3`.
    BadExpansionOrder(usize),
    /// `epsilon` outside the open interval `(0, 1/2)`.
    BadEpsilon(f64),
    /// Scale outside `(0, 1]`.
    BadScale(f64),
    /// Amplitude, phase and quadrature grid dimensions disagree.
    DimMismatch,
    /// The amplitude fails to vanish on the unit frequency ball.
    SupportCondition { xi_norm: f64, magnitude: f64 },
    /// The periodized cutoff kernel carries too much far-field mass for
    /// the quadrature box to be trusted.
    QuadratureLeakage { mass_fraction: f64 },
    /// The scale ladder spans fewer than five octaves.
    ScaleRangeTooNarrow { octaves: f64 },
    /// The frequency box cannot host samples with `|xi| in [2, nyquist/8]`.
    CoarseFrequencyBox { nyquist: f64 },
    /// Residuals sit below the quadrature noise floor at every scale.
    ExactToPrecision,
    Phase(PhaseError),
    Grid(GridError),
}

impl fmt::Display for CompError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompError::BadArity(d) => write!(f, "amplitude arity {d}, expected 1"),
            CompError::BadOrder(m) => write!(f, "amplitude order {m} must be <= 0"),
            CompError::BadExpansionOrder(m) => write!(f, "expansion order {m} outside 1..=3"),
            CompError::BadEpsilon(e) => write!(f, "epsilon {e} outside (0, 1/2)"),
            CompError::BadScale(t) => write!(f, "scale {t} outside (0, 1]"),
            CompError::DimMismatch => write!(f, "dimension mismatch"),
            CompError::SupportCondition { xi_norm, magnitude } => write!(
                f,
                "amplitude reaches {magnitude:e} at |xi| = {xi_norm} <= 1"
            ),
            CompError::QuadratureLeakage { mass_fraction } => write!(
                f,
                "cutoff kernel leaks {mass_fraction:e} of its mass outside the near field"
            ),
            CompError::ScaleRangeTooNarrow { octaves } => {
                write!(f, "scale ladder spans {octaves} octaves, need at least 5")
            }
            CompError::CoarseFrequencyBox { nyquist } => {
                write!(f, "nyquist {nyquist} too small for samples with |xi| >= 2")
            }
            CompError::ExactToPrecision => {
                write!(f, "expansion exact to precision; decay unmeasurable")
            }
            CompError::Phase(e) => write!(f, "phase: {e}"),
            CompError::Grid(e) => write!(f, "grid: {e}"),
        }
    }
}

impl From<PhaseError> for CompError {
    fn from(e: PhaseError) -> Self {
        CompError::Phase(e)
    }
}

impl From<GridError> for CompError {
    fn from(e: GridError) -> Self {
        CompError::Grid(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CompError {}

/// Health of the frequency-box quadrature behind [`CompositionStudy::exact_sigma`].
#[derive(Clone, Copy, Debug)]
pub struct QuadratureHealth {
    /// Largest `|rho(t eta)|` on the box edge relative to the peak.
    pub boundary_value_ratio: f64,
    /// Fraction of the periodized kernel's mass at offsets `|z|_inf > L/4`.
    pub far_field_mass: f64,
    /// Set when the boundary value exceeds `1e-6` of the peak.
    pub warn: bool,
}

/// One graded correction `sigma_alpha` of the expansion.
#[derive(Clone, Debug)]
pub struct Correction {
    pub alpha: [usize; 2],
    pub sigma_alpha: Complex64,
    /// `t^{|alpha|} / alpha!`, the prefactor it enters the expansion with.
    pub weight: f64,
}

/// Main term plus corrections of the composed amplitude at one `(t, x, xi)`.
#[derive(Clone, Debug)]
pub struct ExpansionTerms {
    pub main: Complex64,
    pub corrections: Vec<Correction>,
}

impl ExpansionTerms {
    /// `main + sum (t^|alpha|/alpha!) sigma_alpha`.
    pub fn reconstruction(&self) -> Complex64 {
        self.corrections
            .iter()
            .fold(self.main, |acc, c| acc + c.sigma_alpha * c.weight)
    }
}

/// Empirical constant of one correction against its scaling envelope
/// `t^{|alpha|(eps-1)} <xi>^{m - |alpha|(1/2-eps)}`.
#[derive(Clone, Debug)]
pub struct AlphaEnvelope {
    pub alpha: [usize; 2],
    pub constant: f64,
}

/// Per-scale residuals of the expansion and the fitted decay exponent.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub t_values: Vec<f64>,
    /// `max |exact - reconstruction|` over the sampled `(x, xi)` set.
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log t`.
    pub slope: f64,
    pub intercept: f64,
    pub envelopes: Vec<AlphaEnvelope>,
}

/// A composition `rho(tD) T^phi_a` under study: the cutoff, the operator
/// data, the expansion order, the grading parameter and the scale ladder,
/// quadratures running on a fixed periodic grid.
pub struct CompositionStudy {
    rho: Arc<RhoFn>,
    a: Amplitude,
    phi: Phase,
    big_m: usize,
    epsilon: f64,
    scales: ScaleGrid,
    quad: GridSpec,
}

const FAR_FIELD_LIMIT: f64 = 1e-3;
const NOISE_FLOOR: f64 = 1e-9;
const RHO_STEP: f64 = 1e-3;

fn box_lattice(dim: usize, radius: f64, per_axis: usize) -> Vec<[f64; 2]> {
    let steps = per_axis.max(2);
    let coord = |i: usize| -radius + 2.0 * radius * i as f64 / (steps - 1) as f64;
    let mut out = Vec::new();
    if dim == 1 {
        for i in 0..steps {
            out.push([coord(i), 0.0]);
        }
    } else {
        for i in 0..steps {
            for j in 0..steps {
                out.push([coord(i), coord(j)]);
            }
        }
    }
    out
}

impl CompositionStudy {
    pub fn new(
        rho: Arc<RhoFn>,
        a: Amplitude,
        phi: Phase,
        big_m: usize,
        epsilon: f64,
        scales: ScaleGrid,
        quad: GridSpec,
    ) -> Result<Self, CompError> {
        if a.arity_d() != 1 {
            return Err(CompError::BadArity(a.arity_d()));
        }
        if a.order_m() > 0.0 {
            return Err(CompError::BadOrder(a.order_m()));
        }
        if !(1..=3).contains(&big_m) {
            return Err(CompError::BadExpansionOrder(big_m));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(CompError::BadEpsilon(epsilon));
        }
        if a.dim() != phi.dim() || a.dim() != quad.dim() {
            return Err(CompError::DimMismatch);
        }
        let dim = quad.dim();

        // support condition: a vanishes on the closed unit frequency ball
        let x_radius = if a.spatial_support_radius().is_finite() {
            a.spatial_support_radius().min(0.5 * quad.period())
        } else {
            0.5 * quad.period()
        };
        let dirs = unit_directions(dim, if dim == 1 { 2 } else { 8 });
        for x in box_lattice(dim, x_radius, 5) {
            for d in &dirs {
                for &r in &[0.0, 0.2, 0.45, 0.7, 0.9, 1.0] {
                    let mut xi = [0.0f64; 2];
                    for (axis, da) in d.iter().enumerate() {
                        xi[axis] = r * da;
                    }
                    let v = a.eval(&x[..dim], &xi[..dim]).norm();
                    if v > 1e-10 {
                        return Err(CompError::SupportCondition {
                            xi_norm: r,
                            magnitude: v,
                        });
                    }
                }
            }
        }

        // phase nondegeneracy and gradient comparability on the box
        let sampling = PhaseSampling {
            spatial_per_axis: 7,
            directions: if dim == 1 { 2 } else { 16 },
            radial_scales: 5,
            min_radius: 1.0,
            max_radius: quad.nyquist().max(2.0),
        };
        let region = SpatialBox::centered(dim, 0.5 * quad.period());
        nondegeneracy_constant(&phi, &region, &sampling)?;
        lambda_constant(&phi, &region, &sampling)?;

        Ok(CompositionStudy {
            rho,
            a,
            phi,
            big_m,
            epsilon,
            scales,
            quad,
        })
    }

    pub fn cutoff(&self) -> Arc<RhoFn> {
        self.rho.clone()
    }

    pub fn amplitude(&self) -> &Amplitude {
        &self.a
    }

    pub fn phase(&self) -> &Phase {
        &self.phi
    }

    pub fn expansion_order(&self) -> usize {
        self.big_m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    pub fn quad_grid(&self) -> GridSpec {
        self.quad
    }

    fn rho_at(&self, t: f64, eta: &[f64]) -> Complex64 {
        let mut ts = [0.0f64; 2];
        for (axis, v) in eta.iter().enumerate() {
            ts[axis] = t * v;
        }
        (self.rho)(&ts[..eta.len()])
    }

    /// Boundary decay and kernel locality of the `rho(t eta)` lattice.
    pub fn quadrature_health(&self, t: f64) -> Result<QuadratureHealth, CompError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CompError::BadScale(t));
        }
        let spec = self.quad;
        let dim = spec.dim();
        let n = spec.points_per_axis();
        let modes = GridFunction::from_freq_fn(spec, |eta| self.rho_at(t, eta));
        let mut peak = 0.0f64;
        let mut boundary = 0.0f64;
        for s in 0..spec.len() {
            let v = modes.value(s).norm();
            peak = peak.max(v);
            let ax = spec.axes_of(s);
            if ax[..dim].iter().any(|&a| a == 0 || a == n - 1) {
                boundary = boundary.max(v);
            }
        }
        let kernel = inverse_transform(&modes);
        let quarter = 0.25 * spec.period();
        let mut total = 0.0f64;
        let mut far = 0.0f64;
        for j in 0..spec.len() {
            let mass = kernel.value(j).norm();
            total += mass;
            let z = spec.point(j);
            if z.iter().fold(0.0f64, |m, &c| m.max(c.abs())) > quarter {
                far += mass;
            }
        }
        let boundary_value_ratio = if peak > 0.0 { boundary / peak } else { 0.0 };
        let far_field_mass = if total > 0.0 { far / total } else { 0.0 };
        Ok(QuadratureHealth {
            boundary_value_ratio,
            far_field_mass,
            warn: boundary_value_ratio > 1e-6,
        })
    }

    /// Forward modes of `y -> a(y, xi) e^{i phi(y, xi)}`; the `xi`-dependent
    /// half of the quadrature, reusable across scales and output points.
    fn oscillatory_modes(&self, xi: &[f64]) -> GridFunction {
        let f = GridFunction::from_fn(self.quad, |y| {
            self.a.eval(y, xi) * Complex64::new(0.0, self.phi.eval(y, xi)).exp()
        });
        forward_transform(&f)
    }

    fn sigma_from_tables(
        &self,
        rho_t: &[Complex64],
        w: &GridFunction,
        x: &[f64],
        xi: &[f64],
    ) -> Complex64 {
        let spec = self.quad;
        let dim = spec.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..spec.len() {
            let r = rho_t[s];
            if r.re == 0.0 && r.im == 0.0 {
                continue;
            }
            let eta = spec.frequency(s);
            let mut dot = 0.0f64;
            for a in 0..dim {
                dot += x[a] * eta[a];
            }
            acc += r * w.value(s) * Complex64::new(0.0, dot).exp();
        }
        let inv_vol = spec.period().powi(-(dim as i32));
        acc * inv_vol * Complex64::new(0.0, -self.phi.eval(x, xi)).exp()
    }

    /// The composed amplitude `sigma_t(x, xi)` by lattice quadrature. `x`
    /// may sit off the grid; `xi` is meaningful on the frequency lattice.
    pub fn exact_sigma(&self, t: f64, x: &[f64], xi: &[f64]) -> Result<Complex64, CompError> {
        let dim = self.quad.dim();
        if x.len() != dim || xi.len() != dim {
            return Err(CompError::DimMismatch);
        }
        let health = self.quadrature_health(t)?;
        if health.far_field_mass > FAR_FIELD_LIMIT {
            return Err(CompError::QuadratureLeakage {
                mass_fraction: health.far_field_mass,
            });
        }
        let w = self.oscillatory_modes(xi);
        let rho_t: Vec<Complex64> = (0..self.quad.len())
            .map(|s| self.rho_at(t, &self.quad.frequency(s)))
            .collect();
        Ok(self.sigma_from_tables(&rho_t, &w, x, xi))
    }

    fn fd_step(&self) -> f64 {
        let r = self.a.spatial_support_radius();
        if r.is_finite() {
            1e-2 * r
        } else {
            1e-2
        }
    }

    /// `D_y^alpha [e^{i Phi(x, y, xi)} a(y, xi)]` at `y = x` with
    /// `D = -i d/dy` and
    /// `Phi(x, y, xi) = phi(y, xi) - phi(x, xi) + (x - y).grad_x phi(x, xi)`.
    fn y_derivative(&self, x: &[f64], xi: &[f64], alpha: [usize; 2]) -> Complex64 {
        let dim = self.quad.dim();
        let phase_x = self.phi.eval(x, xi);
        let grad = self.phi.grad_x(x, xi);
        let g = |y: &[f64]| {
            let mut big_phi = self.phi.eval(y, xi) - phase_x;
            for a in 0..dim {
                big_phi += (x[a] - y[a]) * grad[a];
            }
            self.a.eval(y, xi) * Complex64::new(0.0, big_phi).exp()
        };
        let order = alpha[0] + alpha[1];
        fd_partial(&g, &x[..dim], alpha, self.fd_step()) * d_convention(order)
    }

    fn rho_derivative(&self, arg: &[f64], alpha: [usize; 2]) -> Complex64 {
        let g = |z: &[f64]| (self.rho)(z);
        fd_partial(&g, arg, alpha, RHO_STEP)
    }

    /// Main term `rho(t grad_x phi) a` and the corrections `sigma_alpha`
    /// for `0 < |alpha| < M`.
    pub fn expansion_terms(
        &self,
        t: f64,
        x: &[f64],
        xi: &[f64],
    ) -> Result<ExpansionTerms, CompError> {
        let dim = self.quad.dim();
        if x.len() != dim || xi.len() != dim {
            return Err(CompError::DimMismatch);
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(CompError::BadScale(t));
        }
        let grad = self.phi.grad_x(x, xi);
        let mut arg = [0.0f64; 2];
        for a in 0..dim {
            arg[a] = t * grad[a];
        }
        let main = (self.rho)(&arg[..dim]) * self.a.eval(x, xi);
        let mut corrections = Vec::new();
        for alpha in multi_indices(dim, self.big_m) {
            let order: usize = alpha.iter().sum();
            let rho_part = self.rho_derivative(&arg[..dim], alpha);
            let y_part = self.y_derivative(x, xi, alpha);
            let fact = (factorial(alpha[0]) * factorial(alpha[1])) as f64;
            corrections.push(Correction {
                alpha,
                sigma_alpha: rho_part * y_part,
                weight: t.powi(order as i32) / fact,
            });
        }
        Ok(ExpansionTerms { main, corrections })
    }

    fn decay_frequencies(&self) -> Result<Vec<[f64; 2]>, CompError> {
        let spec = self.quad;
        let hi = spec.nyquist() / 8.0;
        if hi < 2.0 {
            return Err(CompError::CoarseFrequencyBox {
                nyquist: spec.nyquist(),
            });
        }
        let dxi = 2.0 * core::f64::consts::PI / spec.period();
        let mut out = Vec::with_capacity(16);
        if spec.dim() == 1 {
            let k_min = (2.0 / dxi).ceil();
            for i in 0..16 {
                let r = 2.0 * (hi / 2.0).powf(i as f64 / 15.0);
                let k = (r / dxi).round().max(k_min);
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                out.push([sign * k * dxi, 0.0]);
            }
        } else {
            let s = core::f64::consts::FRAC_1_SQRT_2;
            let dirs = [[1.0, 0.0], [0.0, 1.0], [s, s], [-s, s]];
            for d in &dirs {
                for i in 0..4 {
                    let r = 2.0 * (hi / 2.0).powf(i as f64 / 3.0);
                    let mut v = [0.0f64; 2];
                    for a in 0..2 {
                        v[a] = (r * d[a] / dxi).round() * dxi;
                    }
                    while norm(&v) < 2.0 {
                        for a in 0..2 {
                            if d[a] != 0.0 {
                                v[a] += dxi * d[a].signum();
                            }
                        }
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    fn decay_positions(&self) -> Vec<[f64; 2]> {
        let dim = self.quad.dim();
        let r_sup = self.a.spatial_support_radius();
        let r = if r_sup.is_finite() {
            (0.9 * r_sup).min(0.45 * self.quad.period())
        } else {
            0.25 * self.quad.period()
        };
        box_lattice(dim, r, if dim == 1 { 16 } else { 4 })
    }

    /// Residual `max |exact - reconstruction|` per scale, the fitted decay
    /// exponent, and the empirical constants of the correction envelopes.
    pub fn remainder_decay(&self) -> Result<DecayReport, CompError> {
        let nodes = self.scales.nodes();
        let t_hi = self.scales.max_t();
        let t_lo = self.scales.min_t();
        let octaves = (t_hi / t_lo).log2();
        if octaves < 5.0 - 1e-9 {
            return Err(CompError::ScaleRangeTooNarrow { octaves });
        }
        let spec = self.quad;
        let dim = spec.dim();
        let xi_set = self.decay_frequencies()?;
        let x_set = self.decay_positions();
        let w_tables: Vec<GridFunction> = xi_set
            .iter()
            .map(|xi| self.oscillatory_modes(&xi[..dim]))
            .collect();
        let alphas = multi_indices(dim, self.big_m);
        let mut env = alloc::vec![0.0f64; alphas.len()];
        let mut t_values = Vec::with_capacity(nodes.len());
        let mut residuals = Vec::with_capacity(nodes.len());
        for &(t, _) in nodes {
            let health = self.quadrature_health(t)?;
            if health.far_field_mass > FAR_FIELD_LIMIT {
                return Err(CompError::QuadratureLeakage {
                    mass_fraction: health.far_field_mass,
                });
            }
            let rho_t: Vec<Complex64> = (0..spec.len())
                .map(|s| self.rho_at(t, &spec.frequency(s)))
                .collect();
            let mut worst = 0.0f64;
            for (xi, w) in xi_set.iter().zip(w_tables.iter()) {
                let xi = &xi[..dim];
                let xi_bracket = bracket(xi);
                for x in &x_set {
                    let x = &x[..dim];
                    let exact = self.sigma_from_tables(&rho_t, w, x, xi);
                    let terms = self.expansion_terms(t, x, xi)?;
                    worst = worst.max((exact - terms.reconstruction()).norm());
                    for (k, c) in terms.corrections.iter().enumerate() {
                        let order = (c.alpha[0] + c.alpha[1]) as f64;
                        let envelope = t.powf(order * (self.epsilon - 1.0))
                            * xi_bracket
                                .powf(self.a.order_m() - order * (0.5 - self.epsilon));
                        env[k] = env[k].max(c.sigma_alpha.norm() / envelope);
                    }
                }
            }
            t_values.push(t);
            residuals.push(worst);
        }
        let mut lt = Vec::new();
        let mut lr = Vec::new();
        for (&t, &r) in t_values.iter().zip(residuals.iter()) {
            if r >= NOISE_FLOOR {
                lt.push(t.ln());
                lr.push(r.ln());
            }
        }
        if lt.len() < 2 {
            return Err(CompError::ExactToPrecision);
        }
        let (slope, intercept) = linear_fit(&lt, &lr);
        let envelopes = alphas
            .into_iter()
            .zip(env)
            .map(|(alpha, constant)| AlphaEnvelope { alpha, constant })
            .collect();
        Ok(DecayReport {
            t_values,
            residuals,
            slope,
            intercept,
            envelopes,
        })
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

/// `(-i)^k`, converting plain partials into `D = -i d/dy` derivatives.
fn d_convention(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

fn multi_indices(dim: usize, big_m: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for total in 1..big_m {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a0 in (0..=total).rev() {
                out.push([a0, total - a0]);
            }
        }
    }
    out
}

const D1_OFF: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
const D1_COEF: [f64; 4] = [1.0, -8.0, 8.0, -1.0];
const D2_OFF: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
const D2_COEF: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Fourth-order central difference `partial^alpha g` at `base`, for
/// `|alpha| <= 2` over at most two axes.
fn fd_partial(
    g: &dyn Fn(&[f64]) -> Complex64,
    base: &[f64],
    alpha: [usize; 2],
    h: f64,
) -> Complex64 {
    let dim = base.len();
    let total = alpha[0] + alpha[1];
    let mut pt = [0.0f64; 2];
    match total {
        1 => {
            let axis = if alpha[0] == 1 { 0 } else { 1 };
            let mut acc = Complex64::new(0.0, 0.0);
            for (o, c) in D1_OFF.iter().zip(D1_COEF.iter()) {
                pt[..dim].copy_from_slice(base);
                pt[axis] += o * h;
                acc += g(&pt[..dim]) * *c;
            }
            acc / (12.0 * h)
        }
        2 if alpha[0] == 1 && alpha[1] == 1 => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (o0, c0) in D1_OFF.iter().zip(D1_COEF.iter()) {
                for (o1, c1) in D1_OFF.iter().zip(D1_COEF.iter()) {
                    pt[0] = base[0] + o0 * h;
                    pt[1] = base[1] + o1 * h;
                    acc += g(&pt[..dim]) * (c0 * c1);
                }
            }
            acc / (144.0 * h * h)
        }
        2 => {
            let axis = if alpha[0] == 2 { 0 } else { 1 };
            let mut acc = Complex64::new(0.0, 0.0);
            for (o, c) in D2_OFF.iter().zip(D2_COEF.iter()) {
                pt[..dim].copy_from_slice(base);
                pt[axis] += o * h;
                acc += g(&pt[..dim]) * *c;
            }
            acc / (12.0 * h * h)
        }
        _ => unreachable!("derivative order above two"),
    }
}

/// `rho(z) = e^{-|z|^2}`: a Schwartz cutoff with analytic derivatives.
pub fn gaussian_cutoff() -> Arc<RhoFn> {
    Arc::new(|z: &[f64]| Complex64::new((-norm_sq(z)).exp(), 0.0))
}

/// `rho = 1`: the composition reduces to the operator itself.
pub fn identity_cutoff() -> Arc<RhoFn> {
    Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0))
}

/// Radial window vanishing on the unit ball, one outside radius two.
pub fn omega_window(xi: &[f64]) -> f64 {
    smoothstep_between(norm(xi), 1.0, 2.0)
}

/// Standard study: halfwave phase `x.xi + |xi|`, amplitude
/// `mu(xi) <xi>^m chi0(x)` with the low-frequency cutoff pushed out to the
/// unit ball, Gaussian cutoff, scales on `[t_lo, t_hi]`.
#[allow(clippy::too_many_arguments)]
pub fn halfwave_study(
    points: usize,
    period: f64,
    order_m: f64,
    big_m: usize,
    epsilon: f64,
    t_hi: f64,
    t_lo: f64,
    per_octave: usize,
) -> Result<CompositionStudy, CompError> {
    let quad = GridSpec::new(1, points, period)?;
    let cut = build_cutoffs(0.25).expect("valid lambda");
    let mu = cut.mu_fn();
    let a = Amplitude::new(
        "halfwave window",
        Arc::new(move |x: &[f64], xi: &[f64]| {
            Complex64::new(mu(xi) * chi0(x) * bracket(xi).powf(order_m), 0.0)
        }),
        order_m,
        1.0,
        0.0,
        1,
        1,
        2.0,
        false,
    );
    CompositionStudy::new(
        gaussian_cutoff(),
        a,
        halfwave_phase(1),
        big_m,
        epsilon,
        ScaleGrid::dyadic_between(t_hi, t_lo, per_octave),
        quad,
    )
}

/// Degenerate reference study: linear phase, x-independent amplitude. The
/// expansion reproduces the exact amplitude, so decay is unmeasurable.
pub fn trivial_study(
    points: usize,
    period: f64,
    big_m: usize,
    epsilon: f64,
    t_hi: f64,
    t_lo: f64,
    per_octave: usize,
) -> Result<CompositionStudy, CompError> {
    let quad = GridSpec::new(1, points, period)?;
    let a = Amplitude::new(
        "frequency bump",
        Arc::new(|_x: &[f64], xi: &[f64]| {
            let r = norm(xi);
            Complex64::new(omega_window(xi) * (-(r - 3.0) * (r - 3.0) / 4.0).exp(), 0.0)
        }),
        0.0,
        1.0,
        0.0,
        1,
        1,
        f64::INFINITY,
        false,
    );
    CompositionStudy::new(
        gaussian_cutoff(),
        a,
        linear_phase(1),
        big_m,
        epsilon,
        ScaleGrid::dyadic_between(t_hi, t_lo, per_octave),
        quad,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn linear_phase_collapses_to_multiplier() {
        let study = trivial_study(256, 16.0, 1, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        let dxi = 2.0 * PI / 16.0;
        for &k in &[6i64, -11, 23] {
            let xi = [k as f64 * dxi];
            let want_amp = study.amplitude().eval(&[0.0], &xi);
            for &t in &[0.5, 0.1, 0.05] {
                let want = Complex64::new((-(t * xi[0]) * (t * xi[0])).exp(), 0.0) * want_amp;
                for &x in &[0.0, 0.37, -1.912] {
                    let got = study.exact_sigma(t, &[x], &xi).unwrap();
                    assert!(
                        close(got, want, 1e-10),
                        "t={t} x={x} xi={} got {got} want {want}",
                        xi[0]
                    );
                }
            }
        }
    }

    #[test]
    fn identity_cutoff_returns_amplitude_on_grid() {
        let quad = GridSpec::new(1, 256, 16.0).unwrap();
        let cut = build_cutoffs(0.25).unwrap();
        let mu = cut.mu_fn();
        let a = Amplitude::new(
            "window",
            Arc::new(move |x: &[f64], xi: &[f64]| Complex64::new(mu(xi) * chi0(x), 0.0)),
            0.0,
            1.0,
            0.0,
            1,
            1,
            2.0,
            false,
        );
        let study = CompositionStudy::new(
            identity_cutoff(),
            a,
            halfwave_phase(1),
            1,
            0.25,
            ScaleGrid::dyadic_between(0.25, 1.0 / 64.0, 1),
            quad,
        )
        .unwrap();
        let dxi = 2.0 * PI / 16.0;
        for &j in &[128usize, 140, 200] {
            let x = quad.point(j);
            for &k in &[5i64, -17] {
                let xi = [k as f64 * dxi];
                let got = study.exact_sigma(0.125, &x, &xi).unwrap();
                let want = study.amplitude().eval(&x, &xi);
                assert!(close(got, want, 1e-10), "x={} got {got} want {want}", x[0]);
            }
        }
        let health = study.quadrature_health(0.125).unwrap();
        assert!(health.warn);
        assert!(health.far_field_mass < 1e-12);
    }

    #[test]
    fn halfwave_matches_direct_double_summation() {
        let study = halfwave_study(512, 16.0, -0.5, 1, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        let spec = study.quad_grid();
        let n = spec.len();
        let t = 0.15;
        let dxi = 2.0 * PI / 16.0;
        let vol = 16.0 / 512.0;
        for &(x, k) in &[(0.3137f64, 17i64), (2.71, -40)] {
            let xi = [k as f64 * dxi];
            let mut want = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let y = spec.point(j);
                let mut inner = Complex64::new(0.0, 0.0);
                for s in 0..n {
                    let eta = spec.frequency(s)[0];
                    let rho = (-(t * eta) * (t * eta)).exp();
                    inner += Complex64::new(rho, 0.0)
                        * Complex64::new(0.0, (x - y[0]) * eta).exp();
                }
                inner /= 16.0;
                let amp = study.amplitude().eval(&y, &xi);
                let ph = study.phase().eval(&y, &xi) - study.phase().eval(&[x], &xi);
                want += inner * amp * Complex64::new(0.0, ph).exp() * vol;
            }
            let got = study.exact_sigma(t, &[x], &xi).unwrap();
            assert!(
                (got - want).norm() <= 1e-8 * (1.0 + want.norm()),
                "x={x} k={k} got {got} want {want}"
            );
        }
    }

    #[test]
    fn corrections_vanish_for_linear_phase_and_flat_amplitude() {
        let study = trivial_study(256, 16.0, 3, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        for &t in &[0.25, 0.05] {
            for &x in &[0.0, 1.3] {
                let terms = study.expansion_terms(t, &[x], &[3.1]).unwrap();
                assert_eq!(terms.corrections.len(), 2);
                for c in &terms.corrections {
                    assert!(
                        c.sigma_alpha.norm() < 1e-8,
                        "alpha {:?} gave {}",
                        c.alpha,
                        c.sigma_alpha
                    );
                }
            }
        }
    }

    #[test]
    fn finite_difference_corrections_match_analytic() {
        // polynomial x-dependence, linear phase: Phi = 0, so
        // sigma_alpha = rho^(alpha)(t xi) d_x^alpha a with everything known
        let quad = GridSpec::new(1, 256, 16.0).unwrap();
        let a = Amplitude::new(
            "poly window",
            Arc::new(|x: &[f64], xi: &[f64]| {
                let p = 0.3 + 0.7 * x[0] + 0.25 * x[0] * x[0];
                let r = norm(xi);
                Complex64::new(p * omega_window(xi) * (-(r - 3.0) * (r - 3.0)).exp(), 0.0)
            }),
            0.0,
            1.0,
            0.0,
            1,
            1,
            f64::INFINITY,
            false,
        );
        let study = CompositionStudy::new(
            gaussian_cutoff(),
            a,
            linear_phase(1),
            3,
            0.25,
            ScaleGrid::dyadic_between(0.25, 1.0 / 256.0, 2),
            quad,
        )
        .unwrap();
        let g = |xi: f64| (-(norm(&[xi]) - 3.0) * (norm(&[xi]) - 3.0)).exp();
        for &t in &[0.3, 0.08] {
            for &x in &[0.4, -1.1] {
                for &xi in &[2.6, 3.4] {
                    let terms = study.expansion_terms(t, &[x], &[xi]).unwrap();
                    let z = t * xi;
                    let rho1 = -2.0 * z * (-z * z).exp();
                    let rho2 = (4.0 * z * z - 2.0) * (-z * z).exp();
                    let da = (0.7 + 0.5 * x) * g(xi);
                    let dda = 0.5 * g(xi);
                    // D = -i d/dy convention: first order picks up -i,
                    // second order -1
                    let want = [
                        Complex64::new(0.0, -rho1 * da),
                        Complex64::new(-rho2 * dda, 0.0),
                    ];
                    for (c, w) in terms.corrections.iter().zip(want.iter()) {
                        assert!(
                            (c.sigma_alpha - w).norm() <= 1e-8 * (1.0 + w.norm()),
                            "t={t} x={x} xi={xi} alpha {:?}: {} vs {w}",
                            c.alpha,
                            c.sigma_alpha
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn exact_sigma_stable_under_grid_doubling() {
        let make = |points: usize| {
            let quad = GridSpec::new(1, points, 16.0).unwrap();
            let a = Amplitude::new(
                "gaussian window",
                Arc::new(|x: &[f64], xi: &[f64]| {
                    Complex64::new(omega_window(xi) * (-x[0] * x[0]).exp(), 0.0)
                }),
                0.0,
                1.0,
                0.0,
                1,
                1,
                f64::INFINITY,
                false,
            );
            CompositionStudy::new(
                gaussian_cutoff(),
                a,
                halfwave_phase(1),
                1,
                0.25,
                ScaleGrid::dyadic_between(0.25, 1.0 / 64.0, 1),
                quad,
            )
            .unwrap()
        };
        let coarse = make(512);
        let fine = make(1024);
        let dxi = 2.0 * PI / 16.0;
        for &k in &[8i64, -29] {
            let xi = [k as f64 * dxi];
            for &t in &[0.3, 1.0 / 32.0] {
                for &x in &[0.3137, -2.0] {
                    let lo = coarse.exact_sigma(t, &[x], &xi).unwrap();
                    let hi = fine.exact_sigma(t, &[x], &xi).unwrap();
                    assert!(
                        (lo - hi).norm() <= 1e-9 * (1.0 + hi.norm()),
                        "t={t} x={x} xi={}: {lo} vs {hi}",
                        xi[0]
                    );
                }
            }
        }
    }

    #[test]
    fn trivial_study_is_exact_to_precision() {
        let study = trivial_study(2048, 8.0, 2, 0.25, 0.25, 1.0 / 256.0, 1).unwrap();
        match study.remainder_decay() {
            Err(CompError::ExactToPrecision) => {}
            other => panic!("expected exact-to-precision error, got {other:?}"),
        }
    }

    #[test]
    fn halfwave_decay_slope_and_order_comparison() {
        let m1 = halfwave_study(2048, 8.0, 0.0, 1, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        let r1 = m1.remainder_decay().unwrap();
        assert!(
            r1.slope >= 0.20,
            "first-order slope {} below epsilon - 0.05",
            r1.slope
        );
        let m2 = halfwave_study(2048, 8.0, 0.0, 2, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        let r2 = m2.remainder_decay().unwrap();
        assert!(r2.slope >= r1.slope, "slopes {} vs {}", r2.slope, r1.slope);
        for ((t, a), b) in r1
            .t_values
            .iter()
            .zip(r1.residuals.iter())
            .zip(r2.residuals.iter())
        {
            if *t <= 1.0 / 16.0 + 1e-12 {
                assert!(
                    *b <= *a * (1.0 + 1e-9),
                    "t={t}: M=2 residual {b} above M=1 residual {a}"
                );
            }
        }
        for e in &r2.envelopes {
            assert!(
                e.constant.is_finite() && e.constant > 0.0 && e.constant < 1e4,
                "envelope {:?} constant {}",
                e.alpha,
                e.constant
            );
        }
    }

    #[test]
    fn leaky_frequency_box_is_rejected() {
        let quad = GridSpec::new(1, 512, 16.0).unwrap();
        let a = Amplitude::new(
            "window",
            Arc::new(|x: &[f64], xi: &[f64]| {
                Complex64::new(omega_window(xi) * chi0(x), 0.0)
            }),
            0.0,
            1.0,
            0.0,
            1,
            1,
            2.0,
            false,
        );
        // one-sided logistic cutoff: even symmetry fails, so the multiplier
        // jumps across the frequency seam and the kernel rings far afield
        let rho: Arc<RhoFn> =
            Arc::new(|z: &[f64]| Complex64::new(1.0 / (1.0 + z[0].exp()), 0.0));
        let study = CompositionStudy::new(
            rho,
            a,
            halfwave_phase(1),
            1,
            0.25,
            ScaleGrid::dyadic_between(0.25, 1.0 / 256.0, 1),
            quad,
        )
        .unwrap();
        for &t in &[0.25, 1.0 / 256.0] {
            match study.exact_sigma(t, &[0.0], &[2.36]) {
                Err(CompError::QuadratureLeakage { mass_fraction }) => {
                    assert!(mass_fraction > 1e-3);
                }
                other => panic!("expected leakage error at t={t}, got {other:?}"),
            }
        }
        let even = halfwave_study(512, 16.0, 0.0, 1, 0.25, 0.25, 1.0 / 256.0, 2).unwrap();
        assert!(even.exact_sigma(0.25, &[0.0], &[2.36]).is_ok());
    }

    #[test]
    fn constructor_rejects_bad_studies() {
        let quad = GridSpec::new(1, 256, 16.0).unwrap();
        let ok_amp = || {
            Amplitude::new(
                "window",
                Arc::new(|x: &[f64], xi: &[f64]| {
                    Complex64::new(omega_window(xi) * chi0(x), 0.0)
                }),
                0.0,
                1.0,
                0.0,
                1,
                1,
                2.0,
                false,
            )
        };
        let scales = || ScaleGrid::dyadic_between(0.25, 1.0 / 256.0, 1);
        let wide = Amplitude::new(
            "flat",
            Arc::new(|_: &[f64], _: &[f64]| Complex64::new(1.0, 0.0)),
            0.0,
            1.0,
            0.0,
            1,
            1,
            2.0,
            false,
        );
        assert!(matches!(
            CompositionStudy::new(
                gaussian_cutoff(),
                wide,
                halfwave_phase(1),
                1,
                0.25,
                scales(),
                quad
            ),
            Err(CompError::SupportCondition { .. })
        ));
        let bilinear = Amplitude::new(
            "pair",
            Arc::new(|_: &[f64], _: &[f64]| Complex64::new(0.0, 0.0)),
            0.0,
            1.0,
            0.0,
            2,
            1,
            2.0,
            false,
        );
        assert!(matches!(
            CompositionStudy::new(
                gaussian_cutoff(),
                bilinear,
                halfwave_phase(1),
                1,
                0.25,
                scales(),
                quad
            ),
            Err(CompError::BadArity(2))
        ));
        let positive_order = Amplitude::new(
            "growing",
            Arc::new(|x: &[f64], xi: &[f64]| {
                Complex64::new(omega_window(xi) * chi0(x) * bracket(xi), 0.0)
            }),
            1.0,
            1.0,
            0.0,
            1,
            1,
            2.0,
            false,
        );
        assert!(matches!(
            CompositionStudy::new(
                gaussian_cutoff(),
                positive_order,
                halfwave_phase(1),
                1,
                0.25,
                scales(),
                quad
            ),
            Err(CompError::BadOrder(_))
        ));
        for bad_m in [0usize, 4] {
            assert!(matches!(
                CompositionStudy::new(
                    gaussian_cutoff(),
                    ok_amp(),
                    halfwave_phase(1),
                    bad_m,
                    0.25,
                    scales(),
                    quad
                ),
                Err(CompError::BadExpansionOrder(_))
            ));
        }
        for bad_eps in [0.0, 0.5, -0.1] {
            assert!(matches!(
                CompositionStudy::new(
                    gaussian_cutoff(),
                    ok_amp(),
                    halfwave_phase(1),
                    1,
                    bad_eps,
                    scales(),
                    quad
                ),
                Err(CompError::BadEpsilon(_))
            ));
        }
        assert!(matches!(
            CompositionStudy::new(
                gaussian_cutoff(),
                ok_amp(),
                halfwave_phase(2),
                1,
                0.25,
                scales(),
                quad
            ),
            Err(CompError::DimMismatch)
        ));
        let narrow = ScaleGrid::dyadic_between(0.25, 1.0 / 8.0, 1);
        let study = CompositionStudy::new(
            gaussian_cutoff(),
            ok_amp(),
            halfwave_phase(1),
            1,
            0.25,
            narrow,
            quad,
        )
        .unwrap();
        assert!(matches!(
            study.remainder_decay(),
            Err(CompError::ScaleRangeTooNarrow { .. })
        ));
    }

    #[test]
    fn main_term_obeys_chain_rule_envelope() {
        // |d_xi (rho'(t grad_x phi))| <= C t^{eps-1} <xi>^{-(1-eps)-1} with
        // eps = 1/4; the halfwave gradient is xi itself
        let phi = halfwave_phase(1);
        let eps = 0.25;
        let rho1 = |z: f64| -2.0 * z * (-z * z).exp();
        let fd = 1e-4;
        let mut worst: f64 = 0.0;
        for &t in &[0.25, 1.0 / 16.0, 1.0 / 64.0] {
            for &x in &[-1.0, 0.5] {
                for &xi in &[2.2, 5.0, 12.0] {
                    let comp = |xi_v: f64| {
                        let g = phi.grad_x(&[x], &[xi_v]);
                        rho1(t * g[0])
                    };
                    let d_xi = (comp(xi + fd) - comp(xi - fd)) / (2.0 * fd);
                    let envelope = t.powf(eps - 1.0) * bracket(&[xi]).powf(-(1.0 - eps) - 1.0);
                    worst = worst.max(d_xi.abs() / envelope);
                    let comp_x = |x_v: f64| {
                        let g = phi.grad_x(&[x_v], &[xi]);
                        rho1(t * g[0])
                    };
                    let d_x = (comp_x(x + fd) - comp_x(x - fd)) / (2.0 * fd);
                    assert!(d_x.abs() / envelope < 10.0);
                }
            }
        }
        assert!(worst.is_finite() && worst < 10.0, "constant {worst}");
    }

    #[test]
    fn scale_grid_between_covers_requested_range() {
        let g = ScaleGrid::dyadic_between(0.25, 1.0 / 256.0, 2);
        assert_eq!(g.nodes().len(), 13);
        assert!((g.max_t() - 0.25).abs() < 1e-15);
        assert!((g.min_t() - 1.0 / 256.0).abs() < 1e-15);
        for pair in g.nodes().windows(2) {
            assert!(pair[0].0 > pair[1].0);
        }
    }
}
