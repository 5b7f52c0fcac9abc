//! Function-space estimators on periodic grids: BMO and local bmo norms,
//! Hardy-space maximal norms, Carleson measures with smoothing, the
//! Hardy-Littlewood maximal function, and empirical inequality checks
//! built on them.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{lebesgue_norm, GridError, GridFunction, GridSpec};
use crate::littlewood_paley::{
    build_kt, p_op, q_op, LPFamily, LpError, ScaleGrid, ScaleSymbolFn,
};

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceError {
    BadExponent(f64),
    SupportViolation { index: usize },
    GridMismatch,
    ScaleCountMismatch { expected: usize, got: usize },
    BadDensity { scale: usize, index: usize },
    Lp(LpError),
    Grid(GridError),
}

impl fmt::Display for SpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceError::BadExponent(p) => write!(f, "exponent {p} outside the admissible range"),
            SpaceError::SupportViolation { index } => {
                write!(f, "sample {index} is nonzero outside the declared support")
            }
            SpaceError::GridMismatch => write!(f, "grid specs do not match"),
            SpaceError::ScaleCountMismatch { expected, got } => {
                write!(f, "density has {got} scale slices, expected {expected}")
            }
            SpaceError::BadDensity { scale, index } => {
                write!(f, "density at scale {scale}, cell {index} is negative or non-finite")
            }
            SpaceError::Lp(e) => write!(f, "{e}"),
            SpaceError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl From<LpError> for SpaceError {
    fn from(e: LpError) -> Self {
        SpaceError::Lp(e)
    }
}

impl From<GridError> for SpaceError {
    fn from(e: GridError) -> Self {
        SpaceError::Grid(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpaceError {}

fn max_level(spec: GridSpec) -> u32 {
    // cube side L / 2^j down to 4 grid cells
    let n = spec.points_per_axis();
    (n.trailing_zeros()).saturating_sub(2)
}

/// Mean oscillation sup over dyadic-side cubes (side `L/2^j`,
/// `j = 0 .. log2 N - 2`) at every grid-aligned translate, with wraparound.
pub fn bmo_norm(f: &GridFunction) -> f64 {
    let spec = f.spec();
    let n = spec.points_per_axis();
    match spec.dim() {
        1 => {
            let mut prefix = Vec::with_capacity(2 * n + 1);
            prefix.push(Complex64::new(0.0, 0.0));
            for i in 0..2 * n {
                let last = *prefix.last().unwrap();
                prefix.push(last + f.value(i % n));
            }
            let mut worst: f64 = 0.0;
            for level in 0..=max_level(spec) {
                let side = n >> level;
                for start in 0..n {
                    let mean = (prefix[start + side] - prefix[start]) / side as f64;
                    let mut osc = 0.0;
                    for i in start..start + side {
                        osc += (f.value(i % n) - mean).norm();
                    }
                    worst = worst.max(osc / side as f64);
                }
            }
            worst
        }
        _ => {
            // 2D integral image over the doubled torus
            let m = 2 * n;
            let mut prefix = alloc::vec![Complex64::new(0.0, 0.0); (m + 1) * (m + 1)];
            for i in 0..m {
                for j in 0..m {
                    let v = f.value(spec.flat_of([i % n, j % n]));
                    prefix[(i + 1) * (m + 1) + (j + 1)] = v
                        + prefix[i * (m + 1) + (j + 1)]
                        + prefix[(i + 1) * (m + 1) + j]
                        - prefix[i * (m + 1) + j];
                }
            }
            let box_sum = |i0: usize, j0: usize, side: usize| -> Complex64 {
                prefix[(i0 + side) * (m + 1) + (j0 + side)]
                    - prefix[i0 * (m + 1) + (j0 + side)]
                    - prefix[(i0 + side) * (m + 1) + j0]
                    + prefix[i0 * (m + 1) + j0]
            };
            let mut worst: f64 = 0.0;
            for level in 0..=max_level(spec) {
                let side = n >> level;
                let cells = (side * side) as f64;
                for i0 in 0..n {
                    for j0 in 0..n {
                        let mean = box_sum(i0, j0, side) / cells;
                        let mut osc = 0.0;
                        for i in i0..i0 + side {
                            for j in j0..j0 + side {
                                osc += (f.value(spec.flat_of([i % n, j % n])) - mean).norm();
                            }
                        }
                        worst = worst.max(osc / cells);
                    }
                }
            }
            worst
        }
    }
}

/// Local (bmo) variant: adds the sup of the unit-scale low-pass piece.
pub fn bmo_local_norm(f: &GridFunction, family: &LPFamily) -> Result<f64, SpaceError> {
    let low = p_op(family, f, 1.0, &alloc::vec![0.0; f.spec().dim()])?;
    Ok(bmo_norm(f) + lebesgue_norm(&low, f64::INFINITY))
}

/// Dyadic maximal-function scale ladder: grid cell size up to `L/4`
/// (global) or strictly below one (local), two nodes per octave.
fn maximal_scales(spec: GridSpec, local: bool) -> Vec<f64> {
    let cell = spec.spacing();
    let cap = if local {
        (spec.period() / 4.0).min(1.0 - 1e-12)
    } else {
        spec.period() / 4.0
    };
    // half-octave lattice t = 2^(k/2) anchored at absolute scale 1 so
    // refinements extend the ladder downward instead of shifting it
    let mut out = Vec::new();
    let mut k = (2.0 * cell.log2()).ceil() as i64;
    loop {
        let t = (k as f64 / 2.0).exp2();
        if t > cap {
            break;
        }
        out.push(t);
        k += 1;
    }
    if out.is_empty() {
        out.push(cell.min(cap));
    }
    out
}

/// Pointwise sup over the scale ladder of the low-pass family piece.
pub fn maximal_field(
    f: &GridFunction,
    family: &LPFamily,
    local: bool,
) -> Result<GridFunction, SpaceError> {
    let spec = f.spec();
    let zero_u = alloc::vec![0.0; spec.dim()];
    let mut best = alloc::vec![0.0f64; spec.len()];
    for t in maximal_scales(spec, local) {
        let low = p_op(family, f, t, &zero_u)?;
        for (slot, idx) in best.iter_mut().zip(0..spec.len()) {
            let v = low.value(idx).norm();
            if v > *slot {
                *slot = v;
            }
        }
    }
    Ok(GridFunction::from_samples(
        spec,
        best.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
    .expect("len"))
}

/// Maximal-function Hardy norm for `p` in (0, 1]; `local` truncates the
/// scale ladder below one.
pub fn hardy_norm(
    f: &GridFunction,
    family: &LPFamily,
    p: f64,
    local: bool,
) -> Result<f64, SpaceError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SpaceError::BadExponent(p));
    }
    let field = maximal_field(f, family, local)?;
    Ok(lebesgue_norm(&field, p))
}

/// Hardy-Littlewood maximal function over centered boxes with dyadic
/// cell radii.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let spec = f.spec();
    let n = spec.points_per_axis();
    let absf: Vec<f64> = (0..spec.len()).map(|i| f.value(i).norm()).collect();
    let mut radii: Vec<usize> = Vec::new();
    let mut r = 0usize;
    while r < n / 2 {
        radii.push(r);
        r = if r == 0 { 1 } else { r * 2 };
    }
    match spec.dim() {
        1 => {
            let mut prefix = Vec::with_capacity(3 * n + 1);
            prefix.push(0.0f64);
            for i in 0..3 * n {
                let last = *prefix.last().unwrap();
                prefix.push(last + absf[i % n]);
            }
            let samples = (0..n)
                .map(|i| {
                    let mut best = 0.0f64;
                    for &rad in &radii {
                        let lo = i + n - rad;
                        let count = 2 * rad + 1;
                        let avg = (prefix[lo + count] - prefix[lo]) / count as f64;
                        if avg > best {
                            best = avg;
                        }
                    }
                    Complex64::new(best, 0.0)
                })
                .collect();
            GridFunction::from_samples(spec, samples).expect("len")
        }
        _ => {
            let m = 3 * n;
            let mut prefix = alloc::vec![0.0f64; (m + 1) * (m + 1)];
            for i in 0..m {
                for j in 0..m {
                    prefix[(i + 1) * (m + 1) + (j + 1)] = absf[spec.flat_of([i % n, j % n])]
                        + prefix[i * (m + 1) + (j + 1)]
                        + prefix[(i + 1) * (m + 1) + j]
                        - prefix[i * (m + 1) + j];
                }
            }
            let mut samples = Vec::with_capacity(spec.len());
            for i in 0..n {
                for j in 0..n {
                    let mut best = 0.0f64;
                    for &rad in &radii {
                        let (i0, j0) = (i + n - rad, j + n - rad);
                        let side = 2 * rad + 1;
                        let s = prefix[(i0 + side) * (m + 1) + (j0 + side)]
                            - prefix[i0 * (m + 1) + (j0 + side)]
                            - prefix[(i0 + side) * (m + 1) + j0]
                            + prefix[i0 * (m + 1) + j0];
                        let avg = s / (side * side) as f64;
                        if avg > best {
                            best = avg;
                        }
                    }
                    samples.push(Complex64::new(best, 0.0));
                }
            }
            GridFunction::from_samples(spec, samples).expect("len")
        }
    }
}

/// Nonnegative density on (grid point x scale cell); the cell measure is
/// `dx dt/t` via the grid cell volume and the per-scale quadrature weight.
#[derive(Clone)]
pub struct CarlesonMeasure {
    spec: GridSpec,
    scales: Vec<(f64, f64)>,
    density: Vec<Vec<f64>>,
}

impl CarlesonMeasure {
    pub fn new(
        spec: GridSpec,
        scales: &ScaleGrid,
        density: Vec<Vec<f64>>,
    ) -> Result<Self, SpaceError> {
        let nodes = scales.nodes().to_vec();
        if density.len() != nodes.len() {
            return Err(SpaceError::ScaleCountMismatch {
                expected: nodes.len(),
                got: density.len(),
            });
        }
        for (s, slice) in density.iter().enumerate() {
            if slice.len() != spec.len() {
                return Err(SpaceError::GridMismatch);
            }
            for (i, &v) in slice.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(SpaceError::BadDensity { scale: s, index: i });
                }
            }
        }
        Ok(CarlesonMeasure {
            spec,
            scales: nodes,
            density,
        })
    }

    pub fn zero(spec: GridSpec, scales: &ScaleGrid) -> Self {
        CarlesonMeasure {
            spec,
            scales: scales.nodes().to_vec(),
            density: alloc::vec![alloc::vec![0.0; spec.len()]; scales.nodes().len()],
        }
    }

    /// Band-energy measure `|Q_t f|^2 dx dt/t`.
    pub fn from_band_energy(
        family: &LPFamily,
        f: &GridFunction,
        scales: &ScaleGrid,
    ) -> Result<Self, SpaceError> {
        let spec = f.spec();
        let zero_u = alloc::vec![0.0; spec.dim()];
        let mut density = Vec::with_capacity(scales.nodes().len());
        for &(t, _) in scales.nodes() {
            let q = q_op(family, f, t, &zero_u)?;
            density.push((0..spec.len()).map(|i| q.value(i).norm_sqr()).collect());
        }
        Ok(CarlesonMeasure {
            spec,
            scales: scales.nodes().to_vec(),
            density,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn scales(&self) -> &[(f64, f64)] {
        &self.scales
    }

    pub fn density(&self) -> &[Vec<f64>] {
        &self.density
    }

    pub fn scaled(&self, c: f64) -> Result<Self, SpaceError> {
        if !(c >= 0.0) {
            return Err(SpaceError::BadExponent(c));
        }
        Ok(CarlesonMeasure {
            spec: self.spec,
            scales: self.scales.clone(),
            density: self
                .density
                .iter()
                .map(|slice| slice.iter().map(|v| c * v).collect())
                .collect(),
        })
    }
}

/// `sup_{eps, y} eps^{-n}` times the measure of `{|x-y|_inf < eps} x (0, eps]`,
/// with `eps` over dyadic multiples of the cell and `y` over grid points.
pub fn carleson_norm(mu: &CarlesonMeasure) -> f64 {
    let spec = mu.spec;
    let n = spec.points_per_axis();
    let cell = spec.spacing();
    let vol = spec.cell_volume();
    let dim = spec.dim();

    // spatial prefix sums per scale over a triple-wrapped torus so centered
    // windows never run off the end
    let mut prefixes: Vec<Vec<f64>> = Vec::with_capacity(mu.scales.len());
    for slice in &mu.density {
        match dim {
            1 => {
                let mut p = Vec::with_capacity(3 * n + 1);
                p.push(0.0);
                for i in 0..3 * n {
                    let last = *p.last().unwrap();
                    p.push(last + slice[i % n]);
                }
                prefixes.push(p);
            }
            _ => {
                let m = 3 * n;
                let mut p = alloc::vec![0.0f64; (m + 1) * (m + 1)];
                for i in 0..m {
                    for j in 0..m {
                        p[(i + 1) * (m + 1) + (j + 1)] = slice[spec.flat_of([i % n, j % n])]
                            + p[i * (m + 1) + (j + 1)]
                            + p[(i + 1) * (m + 1) + j]
                            - p[i * (m + 1) + j];
                    }
                }
                prefixes.push(p);
            }
        }
    }

    let mut worst: f64 = 0.0;
    let mut eps = cell;
    while eps <= spec.period() / 2.0 + 1e-12 {
        // cells with |x - y| < eps: offset magnitude strictly below eps
        let rad = ((eps / cell).ceil() as usize).saturating_sub(1).min(n / 2 - 1);
        let active: Vec<usize> = mu
            .scales
            .iter()
            .enumerate()
            .filter(|(_, &(t, _))| t <= eps * (1.0 + 1e-12))
            .map(|(s, _)| s)
            .collect();
        if !active.is_empty() {
            let norm_factor = eps.powf(dim as f64);
            match dim {
                1 => {
                    for y in 0..n {
                        let lo = y + n - rad;
                        let count = 2 * rad + 1;
                        let mut mass = 0.0;
                        for &s in &active {
                            let w = mu.scales[s].1;
                            mass += w * (prefixes[s][lo + count] - prefixes[s][lo]);
                        }
                        worst = worst.max(mass * vol / norm_factor);
                    }
                }
                _ => {
                    let m = 3 * n;
                    let side = 2 * rad + 1;
                    for y0 in 0..n {
                        for y1 in 0..n {
                            let (i0, j0) = (y0 + n - rad, y1 + n - rad);
                            let mut mass = 0.0;
                            for &s in &active {
                                let p = &prefixes[s];
                                let w = mu.scales[s].1;
                                mass += w
                                    * (p[(i0 + side) * (m + 1) + (j0 + side)]
                                        - p[i0 * (m + 1) + (j0 + side)]
                                        - p[(i0 + side) * (m + 1) + j0]
                                        + p[i0 * (m + 1) + j0]);
                            }
                            worst = worst.max(mass * vol / norm_factor);
                        }
                    }
                }
            }
        }
        eps *= 2.0;
    }
    worst
}

/// Per-scale smoothing of the density by `|K_t|`, the averaging-kernel
/// magnitude at that scale.
pub fn smooth_carleson(
    mu: &CarlesonMeasure,
    family: &LPFamily,
    m2: f64,
    kappa: f64,
    kappa1: f64,
) -> Result<CarlesonMeasure, SpaceError> {
    let spec = mu.spec;
    let mut density = Vec::with_capacity(mu.scales.len());
    for (s, &(t, _)) in mu.scales.iter().enumerate() {
        let kernel = build_kt(family, spec, t.min(1.0 / kappa), m2, kappa, kappa1)?;
        let absk = GridFunction::from_samples(
            spec,
            (0..spec.len())
                .map(|i| Complex64::new(kernel.samples().value(i).norm(), 0.0))
                .collect(),
        )
        .expect("len");
        let dens = GridFunction::from_samples(
            spec,
            mu.density[s]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        )
        .expect("len");
        let ka = crate::grid::forward_transform(&absk);
        let da = crate::grid::forward_transform(&dens);
        let prod = GridFunction::from_samples(
            spec,
            (0..spec.len()).map(|i| ka.value(i) * da.value(i)).collect(),
        )
        .expect("len");
        let conv = crate::grid::inverse_transform(&prod);
        density.push(
            (0..spec.len())
                .map(|i| conv.value(i).re.max(0.0))
                .collect(),
        );
    }
    Ok(CarlesonMeasure {
        spec,
        scales: mu.scales.clone(),
        density,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct EmbeddingCheck {
    pub lq: f64,
    pub bmo: f64,
    pub ratio: f64,
    pub avg_abs: f64,
    pub avg_bound_constant: f64,
    pub avg_bound_ok: bool,
}

/// For `a` supported in the centered cube of radius `r`: returns
/// `(||a||_q, ||a||_BMO, ratio)` along with the doubling-cube average
/// bound `|Avg a| <= 2^{2n}/(2^n - 1) ||a||_BMO`.
pub fn bmo_embedding_check(
    a: &GridFunction,
    q: f64,
    r: f64,
) -> Result<EmbeddingCheck, SpaceError> {
    if !(q >= 1.0) {
        return Err(SpaceError::BadExponent(q));
    }
    let spec = a.spec();
    let sup = lebesgue_norm(a, f64::INFINITY);
    let mut inside = Vec::new();
    for idx in 0..spec.len() {
        let x = spec.point(idx);
        let is_in = x.iter().all(|&c| -r <= c && c < r);
        if is_in {
            inside.push(idx);
        } else if a.value(idx).norm() > 1e-12 * (1.0 + sup) {
            return Err(SpaceError::SupportViolation { index: idx });
        }
    }
    let avg = if inside.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        inside.iter().map(|&i| a.value(i)).sum::<Complex64>() / inside.len() as f64
    };
    let lq = lebesgue_norm(a, q);
    let bmo = bmo_norm(a);
    let n = spec.dim() as f64;
    let constant = (2.0f64).powf(2.0 * n) / ((2.0f64).powf(n) - 1.0);
    let ratio = if bmo > 0.0 {
        lq / bmo
    } else if lq == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(EmbeddingCheck {
        lq,
        bmo,
        ratio,
        avg_abs: avg.norm(),
        avg_bound_constant: constant,
        avg_bound_ok: avg.norm() <= constant * bmo + 1e-12 * (1.0 + sup),
    })
}

/// Scale-integrated band pairing against a bounded weight:
/// `|int int Q_t F . Q_t G . v(t,x) dx dt/t|` versus
/// `||F||_{H^1} ||G||_BMO ||v||_inf`.
pub fn corollary_49_check(
    f_fn: &GridFunction,
    g_fn: &GridFunction,
    v_fn: &ScaleSymbolFn,
    family: &LPFamily,
    scales: &ScaleGrid,
) -> Result<(f64, f64, f64), SpaceError> {
    let spec = f_fn.spec();
    if g_fn.spec() != spec {
        return Err(SpaceError::GridMismatch);
    }
    let zero_u = alloc::vec![0.0; spec.dim()];
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut v_inf = 0.0f64;
    for &(t, w) in scales.nodes() {
        let qf = q_op(family, f_fn, t, &zero_u)?;
        let qg = q_op(family, g_fn, t, &zero_u)?;
        let mut pairing = Complex64::new(0.0, 0.0);
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            let v = v_fn(t, &x);
            v_inf = v_inf.max(v.norm());
            pairing += qf.value(idx) * qg.value(idx) * v;
        }
        lhs += pairing * spec.cell_volume() * w;
    }
    let rhs = hardy_norm(f_fn, family, 1.0, false)? * bmo_norm(g_fn) * v_inf;
    let l = lhs.norm();
    let ratio = if rhs > 0.0 {
        l / rhs
    } else if l == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((l, rhs, ratio))
}
