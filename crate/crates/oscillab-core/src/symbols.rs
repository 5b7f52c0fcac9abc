//! Amplitudes with declared symbol-class metadata, empirical seminorm
//! estimation by finite differences, the frequency cutoffs `mu`, `chi`,
//! `nu`, and the induced splitting of a bilinear symbol into its two
//! high-frequency cone pieces.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{forward_transform, GridFunction};
use crate::numeric::{bracket, norm, smoothstep_between, unit_directions};
use crate::phases::Phase;

pub type AmpFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;
pub type RealFreqFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type ComplexFreqFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;
pub type SpatialFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolError {
    RoughSpatialDerivative,
    ArityMismatch { expected: usize, got: usize },
    BadLambda(f64),
    BadMultiIndex { expected_len: usize, got: usize },
    UnknownAmplitude(String),
    BadParameter(&'static str),
}

impl fmt::Display for SymbolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolError::RoughSpatialDerivative => {
                write!(f, "spatial derivatives undefined for L-infinity S class")
            }
            SymbolError::ArityMismatch { expected, got } => {
                write!(f, "amplitude arity {got}, expected {expected}")
            }
            SymbolError::BadLambda(l) => write!(f, "lambda {l} outside (0, 1]"),
            SymbolError::BadMultiIndex { expected_len, got } => {
                write!(f, "multi-index length {got}, expected {expected_len}")
            }
            SymbolError::UnknownAmplitude(name) => write!(f, "unknown amplitude '{name}'"),
            SymbolError::BadParameter(what) => write!(f, "bad amplitude parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SymbolError {}

/// Explicit tensor factorization `sigma(x, Xi) = c(x) * prod_j a_j(Xi_j)`,
/// carried alongside the evaluator so operators can take a separable fast
/// path without inspecting closures.
#[derive(Clone)]
pub struct AmplitudeFactors {
    pub spatial: Arc<SpatialFn>,
    pub frequency: Vec<Arc<ComplexFreqFn>>,
}

/// A symbol `sigma(x, Xi)` on `R^n x R^{dn}` with its declared class data:
/// order `m`, type `(rho, delta)`, arity `d`, spatial support radius, and
/// whether the symbol is rough in `x` (no spatial derivatives declared).
#[derive(Clone)]
pub struct Amplitude {
    name: String,
    eval: Arc<AmpFn>,
    order_m: f64,
    rho: f64,
    delta: f64,
    arity_d: usize,
    dim: usize,
    spatial_support_radius: f64,
    rough: bool,
    factors: Option<AmplitudeFactors>,
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Amplitude")
            .field("name", &self.name)
            .field("order_m", &self.order_m)
            .field("rho", &self.rho)
            .field("delta", &self.delta)
            .field("arity_d", &self.arity_d)
            .field("dim", &self.dim)
            .field("rough", &self.rough)
            .finish()
    }
}

impl Amplitude {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        eval: Arc<AmpFn>,
        order_m: f64,
        rho: f64,
        delta: f64,
        arity_d: usize,
        dim: usize,
        spatial_support_radius: f64,
        rough: bool,
    ) -> Self {
        assert!(arity_d == 1 || arity_d == 2, "arity must be 1 or 2");
        assert!(dim == 1 || dim == 2, "dim must be 1 or 2");
        Amplitude {
            name: String::from(name),
            eval,
            order_m,
            rho,
            delta,
            arity_d,
            dim,
            spatial_support_radius,
            rough,
            factors: None,
        }
    }

    /// Build a separable amplitude from a spatial factor and one frequency
    /// factor per argument; the factorization is retained for fast paths.
    pub fn separable(
        name: &str,
        spatial: Arc<SpatialFn>,
        frequency: Vec<Arc<ComplexFreqFn>>,
        order_m: f64,
        dim: usize,
        spatial_support_radius: f64,
    ) -> Self {
        let arity = frequency.len();
        assert!(arity == 1 || arity == 2);
        let sp = spatial.clone();
        let fr = frequency.clone();
        let eval: Arc<AmpFn> = Arc::new(move |x: &[f64], xi: &[f64]| {
            let n = x.len();
            let mut v = sp(x);
            for (j, f) in fr.iter().enumerate() {
                v *= f(&xi[j * n..(j + 1) * n]);
            }
            v
        });
        let mut a = Amplitude::new(
            name,
            eval,
            order_m,
            1.0,
            0.0,
            arity,
            dim,
            spatial_support_radius,
            false,
        );
        a.factors = Some(AmplitudeFactors { spatial, frequency });
        a
    }

    #[inline]
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.eval)(x, xi)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn order_m(&self) -> f64 {
        self.order_m
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn arity_d(&self) -> usize {
        self.arity_d
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn spatial_support_radius(&self) -> f64 {
        self.spatial_support_radius
    }
    pub fn rough(&self) -> bool {
        self.rough
    }
    pub fn factors(&self) -> Option<&AmplitudeFactors> {
        self.factors.as_ref()
    }

    /// Frequency length `dim * arity`.
    pub fn freq_len(&self) -> usize {
        self.dim * self.arity_d
    }

    /// Multiply by a scalar frequency window (e.g. the `mu` cutoff);
    /// factorization survives only in the single-argument case.
    pub fn windowed(&self, name: &str, window: Arc<RealFreqFn>) -> Amplitude {
        let eval = self.eval.clone();
        let w = window.clone();
        let mut out = Amplitude::new(
            name,
            Arc::new(move |x: &[f64], xi: &[f64]| eval(x, xi) * w(xi)),
            self.order_m,
            self.rho,
            self.delta,
            self.arity_d,
            self.dim,
            self.spatial_support_radius,
            self.rough,
        );
        if self.arity_d == 1 {
            if let Some(f) = &self.factors {
                let base = f.frequency[0].clone();
                let w2 = window;
                out.factors = Some(AmplitudeFactors {
                    spatial: f.spatial.clone(),
                    frequency: alloc::vec![Arc::new(move |xi: &[f64]| base(xi) * w2(xi))
                        as Arc<ComplexFreqFn>],
                });
            }
        }
        out
    }
}

/// The smooth radial plateau `1` on `|x| <= 1`, vanishing for `|x| >= 2`.
pub fn chi0(x: &[f64]) -> f64 {
    1.0 - smoothstep_between(norm(x), 1.0, 2.0)
}

/// Frequency cutoffs at comparability constant `lambda`:
/// `mu` kills the low-frequency ball (vanishes for `|xi| <= 1/(4 lambda)`,
/// one for `|xi| >= 1/(3 lambda)`), `chi` is one on the unit ball of the
/// joint frequency space and vanishes outside radius two, and `nu` selects
/// the cone `64 |eta| <= lambda^2 |xi|` (vanishing when
/// `lambda^2 |xi| <= 16 |eta|`).
#[derive(Clone)]
pub struct CutoffSet {
    lambda: f64,
    mu: Arc<RealFreqFn>,
    chi: Arc<RealFreqFn>,
    nu: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
}

impl CutoffSet {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn mu(&self, xi: &[f64]) -> f64 {
        (self.mu)(xi)
    }

    #[inline]
    pub fn chi(&self, joint: &[f64]) -> f64 {
        (self.chi)(joint)
    }

    #[inline]
    pub fn nu(&self, xi: &[f64], eta: &[f64]) -> f64 {
        (self.nu)(xi, eta)
    }

    pub fn mu_fn(&self) -> Arc<RealFreqFn> {
        self.mu.clone()
    }
}

pub fn build_cutoffs(lambda: f64) -> Result<CutoffSet, SymbolError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(SymbolError::BadLambda(lambda));
    }
    let mu_lo = 1.0 / (4.0 * lambda);
    let mu_hi = 1.0 / (3.0 * lambda);
    let lam_sq = lambda * lambda;
    Ok(CutoffSet {
        lambda,
        mu: Arc::new(move |xi: &[f64]| smoothstep_between(norm(xi), mu_lo, mu_hi)),
        chi: Arc::new(move |joint: &[f64]| 1.0 - smoothstep_between(norm(joint), 1.0, 2.0)),
        nu: Arc::new(move |xi: &[f64], eta: &[f64]| {
            let rx = norm(xi);
            let re = norm(eta);
            if re == 0.0 {
                return if rx == 0.0 { 0.0 } else { 1.0 };
            }
            smoothstep_between(lam_sq * rx / re, 16.0, 64.0)
        }),
    })
}

/// `sigma -> ((1 - chi) nu sigma, (1 - chi)(1 - nu) sigma)`: the two cone
/// pieces of the high-frequency part. Their sum reconstructs
/// `(1 - chi) sigma` pointwise.
pub fn split_sigma(a: &Amplitude, c: &CutoffSet) -> Result<(Amplitude, Amplitude), SymbolError> {
    if a.arity_d != 2 {
        return Err(SymbolError::ArityMismatch {
            expected: 2,
            got: a.arity_d,
        });
    }
    let n = a.dim;
    let make = |cone_first: bool| -> Amplitude {
        let eval = a.eval.clone();
        let cut = c.clone();
        Amplitude::new(
            if cone_first { "sigma1" } else { "sigma2" },
            Arc::new(move |x: &[f64], xi: &[f64]| {
                let high = 1.0 - cut.chi(xi);
                if high == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let cone = cut.nu(&xi[..n], &xi[n..]);
                let w = if cone_first { cone } else { 1.0 - cone };
                eval(x, xi) * (high * w)
            }),
            a.order_m,
            a.rho,
            a.delta,
            2,
            n,
            a.spatial_support_radius,
            a.rough,
        )
    };
    Ok((make(true), make(false)))
}

/// Sampling controls for [`seminorm_estimate`].
#[derive(Clone, Copy, Debug)]
pub struct SeminormOptions {
    pub min_radius: f64,
    pub max_radius: f64,
    pub radial_count: usize,
    pub directions: usize,
    pub spatial_per_axis: usize,
    /// Spatial sampling box half-width when the support radius is infinite.
    pub spatial_fallback: f64,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        SeminormOptions {
            min_radius: 0.5,
            max_radius: 64.0,
            radial_count: 12,
            directions: 32,
            spatial_per_axis: 7,
            spatial_fallback: 4.0,
        }
    }
}

fn spatial_samples(radius: f64, dim: usize, per_axis: usize) -> Vec<[f64; 2]> {
    let r = radius;
    let steps = per_axis.max(2);
    let mut out = Vec::new();
    match dim {
        1 => {
            for i in 0..steps {
                let t = i as f64 / (steps - 1) as f64;
                out.push([-r + 2.0 * r * t, 0.0]);
            }
        }
        _ => {
            for i in 0..steps {
                for j in 0..steps {
                    let t = i as f64 / (steps - 1) as f64;
                    let u = j as f64 / (steps - 1) as f64;
                    out.push([-r + 2.0 * r * t, -r + 2.0 * r * u]);
                }
            }
        }
    }
    out
}

/// Central finite difference of `a` of multi-index orders `alpha` (frequency
/// axes) and `beta` (spatial axes), applied recursively one order at a time.
fn fd_derivative(
    a: &Amplitude,
    x: &mut [f64],
    xi: &mut [f64],
    alpha: &mut [usize],
    beta: &mut [usize],
    h_space: f64,
) -> Complex64 {
    if let Some(j) = alpha.iter().position(|&o| o > 0) {
        let h = (1e-2 * bracket(xi)).max(1e-3);
        alpha[j] -= 1;
        xi[j] += h;
        let plus = fd_derivative(a, x, xi, alpha, beta, h_space);
        xi[j] -= 2.0 * h;
        let minus = fd_derivative(a, x, xi, alpha, beta, h_space);
        xi[j] += h;
        alpha[j] += 1;
        return (plus - minus) / (2.0 * h);
    }
    if let Some(j) = beta.iter().position(|&o| o > 0) {
        beta[j] -= 1;
        x[j] += h_space;
        let plus = fd_derivative(a, x, xi, alpha, beta, h_space);
        x[j] -= 2.0 * h_space;
        let minus = fd_derivative(a, x, xi, alpha, beta, h_space);
        x[j] += h_space;
        beta[j] += 1;
        return (plus - minus) / (2.0 * h_space);
    }
    a.eval(x, xi)
}

/// Empirical symbol-class seminorm: the sup over a sample grid of
/// `|d^alpha_Xi d^beta_x a| <Xi>^{-m + rho |alpha| - delta |beta|}`.
/// A sampling estimate (lower bound of the true sup). Rough amplitudes
/// reject nonzero `beta`.
pub fn seminorm_estimate(
    a: &Amplitude,
    alpha: &[usize],
    beta: &[usize],
    opts: &SeminormOptions,
) -> Result<f64, SymbolError> {
    let flen = a.freq_len();
    if alpha.len() != flen {
        return Err(SymbolError::BadMultiIndex {
            expected_len: flen,
            got: alpha.len(),
        });
    }
    if beta.len() != a.dim {
        return Err(SymbolError::BadMultiIndex {
            expected_len: a.dim,
            got: beta.len(),
        });
    }
    let beta_order: usize = beta.iter().sum();
    if a.rough && beta_order > 0 {
        return Err(SymbolError::RoughSpatialDerivative);
    }
    let alpha_order: usize = alpha.iter().sum();
    let exponent = -a.order_m + a.rho * alpha_order as f64 - a.delta * beta_order as f64;

    let spatial_radius = if a.spatial_support_radius.is_finite() {
        a.spatial_support_radius
    } else {
        opts.spatial_fallback
    };
    let h_space = 1e-3 * spatial_radius;
    let xs = spatial_samples(spatial_radius, a.dim, opts.spatial_per_axis);
    let dirs = unit_directions(flen, opts.directions);

    let mut alpha_buf: Vec<usize> = alpha.to_vec();
    let mut beta_buf: Vec<usize> = beta.to_vec();
    let mut best: f64 = 0.0;
    for ri in 0..opts.radial_count {
        let t = if opts.radial_count == 1 {
            0.0
        } else {
            ri as f64 / (opts.radial_count - 1) as f64
        };
        let r = opts.min_radius * (opts.max_radius / opts.min_radius).powf(t);
        for d in &dirs {
            let mut xi: Vec<f64> = d.iter().map(|c| c * r).collect();
            let weight = bracket(&xi).powf(exponent);
            for xp in &xs {
                let mut x = [xp[0], xp[1]];
                let v = fd_derivative(
                    a,
                    &mut x[..a.dim],
                    &mut xi,
                    &mut alpha_buf,
                    &mut beta_buf,
                    h_space,
                );
                let c = v.norm() * weight;
                if c > best {
                    best = c;
                }
            }
        }
    }
    Ok(best)
}

/// The low-frequency linear-FIO family obtained by freezing `g`:
/// `a_g(x, xi) = psi(xi) \int sigma(x, xi, eta) g_hat(eta) e^{i phi2(x, eta)} dbar eta`,
/// realized as a grid-frequency sum. The result is rough in `x` and usable
/// as an arity-1 amplitude.
pub fn gp_lowfreq_amplitude(
    a: &Amplitude,
    phi2: &Phase,
    g: &GridFunction,
    psi_cut: Arc<RealFreqFn>,
) -> Result<Amplitude, SymbolError> {
    if a.arity_d != 2 {
        return Err(SymbolError::ArityMismatch {
            expected: 2,
            got: a.arity_d,
        });
    }
    let spec = g.spec();
    if spec.dim() != a.dim {
        return Err(SymbolError::BadParameter("grid dimension mismatch"));
    }
    let ghat = forward_transform(g);
    let weight = spec.period().powi(-(spec.dim() as i32));
    let peak = ghat.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = 1e-15 * peak;
    let mut modes: Vec<([f64; 2], Complex64)> = Vec::new();
    for idx in 0..spec.len() {
        let v = ghat.value(idx);
        if v.norm() > threshold {
            let eta = spec.frequency(idx);
            modes.push(([eta.first().copied().unwrap_or(0.0), eta.get(1).copied().unwrap_or(0.0)], v * weight));
        }
    }
    let n = a.dim;
    let sigma = a.eval.clone();
    let phase = phi2.clone();
    let eval: Arc<AmpFn> = Arc::new(move |x: &[f64], xi: &[f64]| {
        let cut = psi_cut(xi);
        if cut == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut joint = [0.0f64; 4];
        joint[..n].copy_from_slice(xi);
        let mut acc = Complex64::new(0.0, 0.0);
        for (eta, coeff) in modes.iter() {
            joint[n..2 * n].copy_from_slice(&eta[..n]);
            let ph = phase.eval(x, &eta[..n]);
            acc += sigma(x, &joint[..2 * n]) * coeff * Complex64::new(ph.cos(), ph.sin());
        }
        acc * cut
    });
    Ok(Amplitude::new(
        "gp_lowfreq",
        eval,
        a.order_m,
        a.rho,
        a.delta,
        1,
        n,
        a.spatial_support_radius,
        true,
    ))
}

/// Parameters for the named amplitude catalog.
#[derive(Clone, Copy, Debug)]
pub struct AmplitudeParams {
    pub order_m: f64,
    pub eps: f64,
    pub support_radius: f64,
}

impl Default for AmplitudeParams {
    fn default() -> Self {
        AmplitudeParams {
            order_m: 0.0,
            eps: 0.5,
            support_radius: 2.0,
        }
    }
}

/// Catalog lookup: `one` (the spatial plateau `chi0(x)`), `order_m`
/// (`chi0(x) <Xi>^m`), `grafakos_sin` (`chi0(x) e^{i eps xi sin x}`, n=1),
/// and `cone_test` (`chi0(x)` localized to the high-frequency cone
/// `64 |eta| <= |xi|`).
pub fn amplitude_by_name(
    name: &str,
    dim: usize,
    arity: usize,
    params: &AmplitudeParams,
) -> Result<Amplitude, SymbolError> {
    let radius = params.support_radius;
    match name {
        "one" => {
            let freq: Vec<Arc<ComplexFreqFn>> = (0..arity)
                .map(|_| Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)) as Arc<ComplexFreqFn>)
                .collect();
            Ok(Amplitude::separable(
                "one",
                Arc::new(|x: &[f64]| Complex64::new(chi0(x), 0.0)),
                freq,
                0.0,
                dim,
                radius,
            ))
        }
        "order_m" => {
            let m = params.order_m;
            if arity == 1 {
                Ok(Amplitude::separable(
                    "order_m",
                    Arc::new(|x: &[f64]| Complex64::new(chi0(x), 0.0)),
                    alloc::vec![Arc::new(move |xi: &[f64]| Complex64::new(
                        bracket(xi).powf(m),
                        0.0
                    )) as Arc<ComplexFreqFn>],
                    m,
                    dim,
                    radius,
                ))
            } else {
                Ok(Amplitude::new(
                    "order_m",
                    Arc::new(move |x: &[f64], xi: &[f64]| {
                        Complex64::new(chi0(x) * bracket(xi).powf(m), 0.0)
                    }),
                    m,
                    1.0,
                    0.0,
                    2,
                    dim,
                    radius,
                    false,
                ))
            }
        }
        "grafakos_sin" => {
            if dim != 1 {
                return Err(SymbolError::BadParameter("grafakos_sin is one-dimensional"));
            }
            let eps = params.eps;
            Ok(Amplitude::new(
                "grafakos_sin",
                Arc::new(move |x: &[f64], xi: &[f64]| {
                    let ph = eps * xi[0] * x[0].sin();
                    Complex64::new(ph.cos(), ph.sin()) * chi0(x)
                }),
                0.0,
                1.0,
                1.0,
                arity,
                1,
                radius,
                false,
            ))
        }
        "cone_test" => {
            if arity != 2 {
                return Err(SymbolError::ArityMismatch {
                    expected: 2,
                    got: arity,
                });
            }
            let cuts = build_cutoffs(1.0).expect("lambda 1 is valid");
            let n = dim;
            let m = params.order_m;
            Ok(Amplitude::new(
                "cone_test",
                Arc::new(move |x: &[f64], xi: &[f64]| {
                    let high = 1.0 - cuts.chi(xi);
                    if high == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let cone = cuts.nu(&xi[..n], &xi[n..]);
                    Complex64::new(chi0(x) * high * cone * bracket(xi).powf(m), 0.0)
                }),
                m,
                1.0,
                0.0,
                2,
                dim,
                radius,
                false,
            ))
        }
        other => Err(SymbolError::UnknownAmplitude(String::from(other))),
    }
}
