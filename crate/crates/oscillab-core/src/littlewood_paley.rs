//! Scale-decomposition machinery: annulus/ball profile families with the
//! reproducing normalization, the modulated band and ball operators `Q_t^u`
//! and `P_t^u`, the averaging kernel `K_t` with its operator `R_t`, the
//! scale-integrated paraproduct, and Peetre's maximal function.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{
    apply_multiplier, forward_transform, integral, inverse_transform, GridError, GridFunction,
    GridSpec,
};
use crate::numeric::{dot, log_trapezoid, norm, smoothstep_between};
use crate::symbols::Amplitude;

pub type RadialFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type ScaleSymbolFn = dyn Fn(f64, &[f64]) -> Complex64 + Send + Sync;

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    UnknownProfile(String),
    BadNormalization(f64),
    BadOrder(f64),
    BadScale(f64),
    BadExponent(f64),
    DimMismatch { expected: usize, got: usize },
    Grid(GridError),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::UnknownProfile(name) => write!(f, "unknown profile '{name}'"),
            LpError::BadNormalization(c) => {
                write!(f, "profile normalization integral {c} is not positive finite")
            }
            LpError::BadOrder(m) => write!(f, "kernel order {m} must be negative"),
            LpError::BadScale(t) => write!(f, "scale {t} outside the admissible range"),
            LpError::BadExponent(b) => write!(f, "exponent {b} must be positive"),
            LpError::DimMismatch { expected, got } => {
                write!(f, "dimension {got}, expected {expected}")
            }
            LpError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl From<GridError> for LpError {
    fn from(e: GridError) -> Self {
        LpError::Grid(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LpError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    Continuous,
    Discrete,
}

/// Radial profile pair: `psi_hat` supported in the annulus `1/2 <= r <= 2`,
/// `theta_hat` equal to one on `r <= 1/8` and supported in `r <= 1/4`.
///
/// Both normalizations share the squared profile
/// `psi0^2(r) = H(r/2) - H(r)` with `H` a smoothstep plateau, so the dyadic
/// telescoping sum is exact; the continuous normalization divides by the
/// reproducing constant `c = int |psi0(s)|^2 ds/s` (= log 2 for this
/// profile) so the scale integral reproduces one.
#[derive(Clone)]
pub struct LPFamily {
    normalization: Normalization,
    psi_hat: Arc<RadialFn>,
    theta_hat: Arc<RadialFn>,
    reproducing_constant: f64,
}

fn plateau(r: f64) -> f64 {
    1.0 - smoothstep_between(r, 0.5, 1.0)
}

fn psi0_sq(r: f64) -> f64 {
    (plateau(r / 2.0) - plateau(r)).max(0.0)
}

impl LPFamily {
    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    #[inline]
    pub fn psi_hat(&self, r: f64) -> f64 {
        (self.psi_hat)(r)
    }

    #[inline]
    pub fn theta_hat(&self, r: f64) -> f64 {
        (self.theta_hat)(r)
    }

    pub fn psi_fn(&self) -> Arc<RadialFn> {
        self.psi_hat.clone()
    }

    pub fn theta_fn(&self) -> Arc<RadialFn> {
        self.theta_hat.clone()
    }

    /// The constant `c` the continuous profile was divided by.
    pub fn reproducing_constant(&self) -> f64 {
        self.reproducing_constant
    }
}

/// Build the named family: `"continuous"` (scale-integral normalized) or
/// `"discrete"` (dyadic telescoping, exact).
pub fn build_family(profile_name: &str) -> Result<LPFamily, LpError> {
    let normalization = match profile_name {
        "continuous" => Normalization::Continuous,
        "discrete" => Normalization::Discrete,
        other => return Err(LpError::UnknownProfile(String::from(other))),
    };
    let c: f64 = log_trapezoid(0.25, 4.0, 64)
        .into_iter()
        .map(|(s, w)| w * psi0_sq(s))
        .sum();
    if !(c.is_finite() && c > 0.0) {
        return Err(LpError::BadNormalization(c));
    }
    let scale = match normalization {
        Normalization::Continuous => 1.0 / c.sqrt(),
        Normalization::Discrete => 1.0,
    };
    Ok(LPFamily {
        normalization,
        psi_hat: Arc::new(move |r: f64| scale * psi0_sq(r).sqrt()),
        theta_hat: Arc::new(|r: f64| 1.0 - smoothstep_between(r, 0.125, 0.25)),
        reproducing_constant: c,
    })
}

/// Max defect of the continuous reproducing identity
/// `int_0^infty |psi_hat(t r)|^2 dt/t = 1` over a log grid of radii,
/// evaluated with the artifact's own dyadic scale quadrature
/// (`per_octave` nodes per octave).
pub fn calderon_check(
    family: &LPFamily,
    r_lo: f64,
    r_hi: f64,
    count: usize,
    per_octave: usize,
) -> f64 {
    let q = per_octave.max(1) as f64;
    let h = core::f64::consts::LN_2 / q;
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let frac = if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        };
        let r = r_lo * (r_hi / r_lo).powf(frac);
        // absolute dyadic lattice t = exp(-j h), window wide enough to
        // cover the annulus support t r in [1/2, 2]
        let j_lo = ((r / 4.0).ln() / h).floor() as i64;
        let j_hi = ((r * 4.0).ln() / h).ceil() as i64;
        let mut sum = 0.0;
        for j in j_lo..=j_hi {
            let t = (-(j as f64) * h).exp();
            let v = family.psi_hat(t * r);
            sum += v * v * h;
        }
        worst = worst.max((sum - 1.0).abs());
    }
    worst
}

/// Max defect of the exact dyadic telescoping `sum_j psi_hat(2^j r)^2 = 1`
/// for the discrete family over sampled radii.
pub fn telescoping_check(family: &LPFamily, r_lo: f64, r_hi: f64, count: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let frac = if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        };
        let r = r_lo * (r_hi / r_lo).powf(frac);
        let j_lo = (-(r.log2()) - 3.0).floor() as i64;
        let j_hi = (-(r.log2()) + 3.0).ceil() as i64;
        let mut sum = 0.0;
        for j in j_lo..=j_hi {
            let v = family.psi_hat((j as f64).exp2() * r);
            sum += v * v;
        }
        worst = worst.max((sum - 1.0).abs());
    }
    worst
}

/// `Q_t^u f`: the multiplier `psi_hat(t xi) e^{i t xi . u}`.
pub fn q_op(family: &LPFamily, f: &GridFunction, t: f64, u: &[f64]) -> Result<GridFunction, LpError> {
    if !(t > 0.0) {
        return Err(LpError::BadScale(t));
    }
    if u.len() != f.spec().dim() {
        return Err(LpError::DimMismatch {
            expected: f.spec().dim(),
            got: u.len(),
        });
    }
    let psi = family.psi_fn();
    let u = u.to_vec();
    Ok(apply_multiplier(
        f,
        move |txi: &[f64]| {
            let ph = dot(txi, &u);
            Complex64::new(ph.cos(), ph.sin()) * psi(norm(txi))
        },
        t,
    )?)
}

/// `P_t^u f`: the multiplier `theta_hat(t xi) e^{i t xi . u}`.
pub fn p_op(family: &LPFamily, f: &GridFunction, t: f64, u: &[f64]) -> Result<GridFunction, LpError> {
    if !(t > 0.0) {
        return Err(LpError::BadScale(t));
    }
    if u.len() != f.spec().dim() {
        return Err(LpError::DimMismatch {
            expected: f.spec().dim(),
            got: u.len(),
        });
    }
    let theta = family.theta_fn();
    let u = u.to_vec();
    Ok(apply_multiplier(
        f,
        move |txi: &[f64]| {
            let ph = dot(txi, &u);
            Complex64::new(ph.cos(), ph.sin()) * theta(norm(txi))
        },
        t,
    )?)
}

/// Dyadic quadrature grid for `int_0^1 . dt/t`: scales `t = 2^{-j/q}`
/// descending from one, trapezoid weights in log t.
#[derive(Clone, Debug)]
pub struct ScaleGrid {
    nodes: Vec<(f64, f64)>,
}

impl ScaleGrid {
    pub fn dyadic_unit(octaves: usize, per_octave: usize) -> ScaleGrid {
        let q = per_octave.max(1);
        let h = core::f64::consts::LN_2 / q as f64;
        let count = octaves.max(1) * q;
        let mut nodes = Vec::with_capacity(count + 1);
        for j in 0..=count {
            let t = (-(j as f64) * h).exp();
            let w = if j == 0 || j == count { 0.5 * h } else { h };
            nodes.push((t, w));
        }
        ScaleGrid { nodes }
    }

    /// Same lattice restricted to `[t_lo, t_hi]`, descending from `t_hi`.
    pub fn dyadic_between(t_hi: f64, t_lo: f64, per_octave: usize) -> ScaleGrid {
        assert!(t_hi > t_lo && t_lo > 0.0, "need t_hi > t_lo > 0");
        let q = per_octave.max(1);
        let h = core::f64::consts::LN_2 / q as f64;
        let count = ((t_hi / t_lo).ln() / h).round().max(1.0) as usize;
        let mut nodes = Vec::with_capacity(count + 1);
        for j in 0..=count {
            let t = t_hi * (-(j as f64) * h).exp();
            let w = if j == 0 || j == count { 0.5 * h } else { h };
            nodes.push((t, w));
        }
        ScaleGrid { nodes }
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn min_t(&self) -> f64 {
        self.nodes.last().map(|&(t, _)| t).unwrap_or(1.0)
    }

    pub fn max_t(&self) -> f64 {
        self.nodes.first().map(|&(t, _)| t).unwrap_or(1.0)
    }
}

/// The averaging kernel at scale `t`:
/// `K_t(z) = int_kappa^{1/t} s^{m2} Psi(z/(ts)) (ts)^{-n} ds/s` with
/// `Psi_hat(eta) = psi_hat(kappa1 eta)^2 |eta|^{-m2}`, realized through its
/// frequency samples on a grid. Held together with its transform so the
/// averaging operator is a mode-wise product.
#[derive(Clone)]
pub struct KtKernel {
    t: f64,
    m2: f64,
    kappa: f64,
    kappa1: f64,
    hat: GridFunction,
    samples: GridFunction,
    band_complete: bool,
}

fn psi_cap_hat(family: &LPFamily, kappa1: f64, m2: f64, eta: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    let v = family.psi_hat(kappa1 * eta);
    v * v * eta.powf(-m2)
}

impl KtKernel {
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }
    pub fn spec(&self) -> GridSpec {
        self.samples.spec()
    }
    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }
    pub fn hat(&self) -> &GridFunction {
        &self.hat
    }

    /// Whether the grid Nyquist bound covers the full frequency support
    /// `|xi| <= 2/(kappa1 kappa t)`; when false the kernel is band-truncated.
    pub fn band_complete(&self) -> bool {
        self.band_complete
    }

    /// `|int K_t| / ||K_t||_1`: zero up to rounding by construction.
    pub fn cancellation_defect(&self) -> f64 {
        let total = integral(&self.samples).norm();
        let l1 = crate::grid::lebesgue_norm(&self.samples, 1.0);
        if l1 == 0.0 {
            0.0
        } else {
            total / l1
        }
    }

    /// Smallest `C` with `|K_t(z)| <= C t^{-n} (1 + |z|/t)^{-n-delta}` over
    /// the grid, for `delta = -m2/2`.
    pub fn decay_constant(&self) -> f64 {
        let spec = self.spec();
        let n = spec.dim() as f64;
        let delta = -self.m2 / 2.0;
        let mut c: f64 = 0.0;
        for idx in 0..spec.len() {
            let z = spec.point(idx);
            let w = (1.0 + norm(&z) / self.t).powf(n + delta);
            c = c.max(self.samples.value(idx).norm() * self.t.powf(n) * w);
        }
        c
    }

    /// Smallest `C` with `|grad K_t| <= C t^{-n-1}` over the grid, gradient
    /// taken spectrally.
    pub fn lipschitz_constant(&self) -> f64 {
        let spec = self.spec();
        let n = spec.dim();
        let mut grad_sq = alloc::vec![0.0f64; spec.len()];
        for axis in 0..n {
            let mut modes = Vec::with_capacity(spec.len());
            for idx in 0..spec.len() {
                let xi = spec.frequency(idx);
                modes.push(self.hat.value(idx) * Complex64::new(0.0, xi[axis]));
            }
            let d = inverse_transform(&GridFunction::from_samples(spec, modes).expect("len"));
            for idx in 0..spec.len() {
                grad_sq[idx] += d.value(idx).norm_sqr();
            }
        }
        let sup = grad_sq.iter().cloned().fold(0.0, f64::max).sqrt();
        sup * self.t.powf(n as f64 + 1.0)
    }
}

/// Build `K_t` on `spec` by dyadic `s`-quadrature (`nodes_per_octave >= 8`)
/// of the defining integral, in frequency space.
pub fn build_kt(
    family: &LPFamily,
    spec: GridSpec,
    t: f64,
    m2: f64,
    kappa: f64,
    kappa1: f64,
) -> Result<KtKernel, LpError> {
    if m2 >= 0.0 {
        return Err(LpError::BadOrder(m2));
    }
    if !(t > 0.0) || t > 1.0 / kappa || !(kappa > 0.0) || !(kappa1 > 0.0) {
        return Err(LpError::BadScale(t));
    }
    let nodes = log_trapezoid(kappa, 1.0 / t, 8);
    let hat = GridFunction::from_freq_fn(spec, |xi| {
        let r = norm(xi);
        let mut acc = 0.0;
        for &(s, w) in &nodes {
            acc += w * s.powf(m2) * psi_cap_hat(family, kappa1, m2, t * s * r);
        }
        Complex64::new(acc, 0.0)
    });
    let samples = inverse_transform(&hat);
    let band_complete = 2.0 / (kappa1 * kappa * t) <= spec.nyquist() * (1.0 + 1e-12);
    Ok(KtKernel {
        t,
        m2,
        kappa,
        kappa1,
        hat,
        samples,
        band_complete,
    })
}

/// Discrete dyadic variant at `t = 2^{-k}`: the plain octave sum
/// `K_hat(xi) = sum_{kappa <= 2^j <= 2^k} 2^{j m2} Psi_hat(2^{j-k} xi)`.
pub fn build_kt_discrete(
    family: &LPFamily,
    spec: GridSpec,
    k: i32,
    m2: f64,
    kappa: f64,
    kappa1: f64,
) -> Result<KtKernel, LpError> {
    if m2 >= 0.0 {
        return Err(LpError::BadOrder(m2));
    }
    if !(kappa > 0.0) || !(kappa1 > 0.0) || k < 0 {
        return Err(LpError::BadScale((-k as f64).exp2()));
    }
    let t = (-k as f64).exp2();
    let j_lo = kappa.log2().ceil() as i32;
    let hat = GridFunction::from_freq_fn(spec, |xi| {
        let r = norm(xi);
        let mut acc = 0.0;
        for j in j_lo..=k {
            let s = (j as f64).exp2();
            acc += s.powf(m2) * psi_cap_hat(family, kappa1, m2, t * s * r);
        }
        Complex64::new(acc, 0.0)
    });
    let samples = inverse_transform(&hat);
    let band_complete = 2.0 / (kappa1 * kappa * t) <= spec.nyquist() * (1.0 + 1e-12);
    Ok(KtKernel {
        t,
        m2,
        kappa,
        kappa1,
        hat,
        samples,
        band_complete,
    })
}

/// `R_t g = K_t * g`, computed as a mode-wise product.
pub fn apply_rt(g: &GridFunction, kernel: &KtKernel) -> Result<GridFunction, LpError> {
    if g.spec() != kernel.spec() {
        return Err(LpError::DimMismatch {
            expected: kernel.spec().dim(),
            got: g.spec().dim(),
        });
    }
    let spec = g.spec();
    let ghat = forward_transform(g);
    let mut modes = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        modes.push(ghat.value(idx) * kernel.hat().value(idx));
    }
    Ok(inverse_transform(
        &GridFunction::from_samples(spec, modes).expect("len"),
    ))
}

/// The other representation of the same operator: the direct scale integral
/// `int_kappa^{1/t} s^{m2} [Psi_hat(ts D) g] ds/s` with the same quadrature
/// as [`build_kt`]. Agreement with [`apply_rt`] is a consistency invariant.
pub fn rt_scale_integral(
    family: &LPFamily,
    g: &GridFunction,
    t: f64,
    m2: f64,
    kappa: f64,
    kappa1: f64,
) -> Result<GridFunction, LpError> {
    if m2 >= 0.0 {
        return Err(LpError::BadOrder(m2));
    }
    if !(t > 0.0) || t > 1.0 / kappa {
        return Err(LpError::BadScale(t));
    }
    let spec = g.spec();
    let mut acc = GridFunction::zeros(spec);
    for (s, w) in log_trapezoid(kappa, 1.0 / t, 8) {
        let term = apply_multiplier(
            g,
            |arg: &[f64]| Complex64::new(psi_cap_hat(family, kappa1, m2, norm(arg)), 0.0),
            t * s,
        )?;
        acc = acc.added(&term.scaled(Complex64::new(w * s.powf(m2), 0.0)));
    }
    Ok(acc)
}

/// `Pi(f, g) = int_0^1 Q_t^u(f) P_t^v(g) m(t, x) dt/t` over the scale grid.
pub fn paraproduct(
    family: &LPFamily,
    f: &GridFunction,
    g: &GridFunction,
    m_fn: &ScaleSymbolFn,
    u: &[f64],
    v: &[f64],
    scales: &ScaleGrid,
) -> Result<GridFunction, LpError> {
    if f.spec() != g.spec() {
        return Err(LpError::DimMismatch {
            expected: f.spec().dim(),
            got: g.spec().dim(),
        });
    }
    let spec = f.spec();
    let mut acc = alloc::vec![Complex64::new(0.0, 0.0); spec.len()];
    for &(t, w) in scales.nodes() {
        let qf = q_op(family, f, t, u)?;
        let pg = p_op(family, g, t, v)?;
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            acc[idx] += qf.value(idx) * pg.value(idx) * m_fn(t, &x) * w;
        }
    }
    Ok(GridFunction::from_samples(spec, acc).expect("len"))
}

/// Discrete variant: plain sum over dyadic levels `t = 2^{-k}`, `k >= 0`.
pub fn paraproduct_discrete(
    family: &LPFamily,
    f: &GridFunction,
    g: &GridFunction,
    m_fn: &ScaleSymbolFn,
    u: &[f64],
    v: &[f64],
    levels: usize,
) -> Result<GridFunction, LpError> {
    if f.spec() != g.spec() {
        return Err(LpError::DimMismatch {
            expected: f.spec().dim(),
            got: g.spec().dim(),
        });
    }
    let spec = f.spec();
    let mut acc = alloc::vec![Complex64::new(0.0, 0.0); spec.len()];
    for k in 0..levels {
        let t = (-(k as f64)).exp2();
        let qf = q_op(family, f, t, u)?;
        let pg = p_op(family, g, t, v)?;
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            acc[idx] += qf.value(idx) * pg.value(idx) * m_fn(t, &x);
        }
    }
    Ok(GridFunction::from_samples(spec, acc).expect("len"))
}

/// The paraproduct's bilinear symbol
/// `lambda(x, xi, eta) = int_0^1 psi_hat(t xi) e^{i t xi.u} theta_hat(t eta)
/// e^{i t eta.v} m(t, x) dt/t` as an order-zero amplitude, for comparison
/// against the direct bilinear operator.
pub fn paraproduct_symbol(
    family: &LPFamily,
    m_fn: Arc<ScaleSymbolFn>,
    u: &[f64],
    v: &[f64],
    scales: &ScaleGrid,
    dim: usize,
) -> Amplitude {
    let psi = family.psi_fn();
    let theta = family.theta_fn();
    let nodes: Vec<(f64, f64)> = scales.nodes().to_vec();
    let u = u.to_vec();
    let v = v.to_vec();
    Amplitude::new(
        "paraproduct_symbol",
        Arc::new(move |x: &[f64], joint: &[f64]| {
            let n = x.len();
            let xi = &joint[..n];
            let eta = &joint[n..];
            let rxi = norm(xi);
            let reta = norm(eta);
            let pxu = dot(xi, &u);
            let pev = dot(eta, &v);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(t, w) in &nodes {
                let band = psi(t * rxi) * theta(t * reta);
                if band == 0.0 {
                    continue;
                }
                let ph = t * (pxu + pev);
                acc += Complex64::new(ph.cos(), ph.sin()) * m_fn(t, x) * (band * w);
            }
            acc
        }),
        0.0,
        1.0,
        0.0,
        2,
        dim,
        f64::INFINITY,
        false,
    )
}

/// Peetre's maximal function
/// `sup_y |(psi_u * G)(x - y)| / (1 + |y|/u)^b`, the sup restricted to grid
/// offsets within half a period (beyond that the periodization makes the
/// quotient meaningless).
pub fn peetre_maximal(
    family: &LPFamily,
    g: &GridFunction,
    u: f64,
    b: f64,
) -> Result<GridFunction, LpError> {
    if !(b > 0.0) {
        return Err(LpError::BadExponent(b));
    }
    let conv = q_op(family, g, u, &alloc::vec![0.0; g.spec().dim()])?;
    let spec = g.spec();
    let n = spec.points_per_axis();
    let mut weights = Vec::with_capacity(spec.len());
    for off in 0..spec.len() {
        // min-image offset vector for this index displacement
        let axes = spec.axes_of(off);
        let mut y = [0.0f64; 2];
        for a in 0..spec.dim() {
            let signed = if axes[a] > n / 2 {
                axes[a] as f64 - n as f64
            } else {
                axes[a] as f64
            };
            y[a] = signed * spec.spacing();
        }
        weights.push((1.0 + norm(&y[..spec.dim()]) / u).powf(-b));
    }
    let mut out = Vec::with_capacity(spec.len());
    match spec.dim() {
        1 => {
            for j in 0..n {
                let mut best = 0.0f64;
                for off in 0..n {
                    let src = (j + n - off) % n;
                    let val = conv.value(src).norm() * weights[off];
                    if val > best {
                        best = val;
                    }
                }
                out.push(Complex64::new(best, 0.0));
            }
        }
        _ => {
            for j0 in 0..n {
                for j1 in 0..n {
                    let mut best = 0.0f64;
                    for o0 in 0..n {
                        let s0 = (j0 + n - o0) % n;
                        for o1 in 0..n {
                            let s1 = (j1 + n - o1) % n;
                            let src = spec.flat_of([s0, s1]);
                            let val =
                                conv.value(src).norm() * weights[spec.flat_of([o0, o1])];
                            if val > best {
                                best = val;
                            }
                        }
                    }
                    out.push(Complex64::new(best, 0.0));
                }
            }
        }
    }
    Ok(GridFunction::from_samples(spec, out).expect("len"))
}
