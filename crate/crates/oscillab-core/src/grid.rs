//! Periodic spectral grids in one and two dimensions.
//!
//! The transform pair is the non-unitary one used throughout the crate:
//! `forward_transform` approximates `f_hat(xi) = \int f(x) e^{-i x.xi} dx`
//! by the Riemann sum over the cell `[-L/2, L/2)^n`, and `inverse_transform`
//! integrates against `dbar xi = (2 pi)^{-n} d xi`, so frequency-side
//! quadrature weights are `L^{-n}` per retained mode. With this pairing the
//! round trip is exact on grid samples and multiplier formulas transcribe
//! literally from their continuum counterparts.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Errors from grid construction and multiplier application.
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    UnsupportedDim(usize),
    NotPowerOfTwo(usize),
    TooFewPoints(usize),
    BadPeriod(f64),
    DimensionMismatch { expected: usize, got: usize },
    NonFiniteMultiplier { index: usize, frequency: [f64; 2] },
    NonFiniteSample { index: usize },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::UnsupportedDim(d) => write!(f, "grid dimension {d} not in {{1, 2}}"),
            GridError::NotPowerOfTwo(n) => {
                write!(f, "points per axis {n} is not a power of two")
            }
            GridError::TooFewPoints(n) => write!(f, "points per axis {n} is below 16"),
            GridError::BadPeriod(l) => write!(f, "period {l} is not positive and finite"),
            GridError::DimensionMismatch { expected, got } => {
                write!(f, "sample count {got} does not match grid size {expected}")
            }
            GridError::NonFiniteMultiplier { index, frequency } => write!(
                f,
                "multiplier returned a non-finite value at flat index {index}, frequency ({}, {})",
                frequency[0], frequency[1]
            ),
            GridError::NonFiniteSample { index } => {
                write!(f, "non-finite sample at flat index {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}

/// Fixed-capacity coordinate buffer dereferencing to `&[f64]` of the grid
/// dimension, so hot loops avoid per-point allocation.
#[derive(Clone, Copy, Debug)]
pub struct Coords {
    vals: [f64; 2],
    dim: usize,
}

impl Coords {
    #[inline]
    pub fn new(vals: [f64; 2], dim: usize) -> Self {
        Coords { vals, dim }
    }

    #[inline]
    pub fn from_slice(v: &[f64]) -> Self {
        let mut vals = [0.0; 2];
        vals[..v.len()].copy_from_slice(v);
        Coords {
            vals,
            dim: v.len(),
        }
    }
}

impl Deref for Coords {
    type Target = [f64];
    #[inline]
    fn deref(&self) -> &[f64] {
        &self.vals[..self.dim]
    }
}

/// Description of a periodic grid: `points_per_axis` samples per axis of the
/// box `[-period/2, period/2)^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    period: f64,
}

pub const DEFAULT_PERIOD: f64 = 16.0 * core::f64::consts::PI;

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self, GridError> {
        if dim == 0 || dim > 2 {
            return Err(GridError::UnsupportedDim(dim));
        }
        if !points_per_axis.is_power_of_two() {
            return Err(GridError::NotPowerOfTwo(points_per_axis));
        }
        if points_per_axis < 16 {
            return Err(GridError::TooFewPoints(points_per_axis));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(GridError::BadPeriod(period));
        }
        Ok(GridSpec {
            dim,
            points_per_axis,
            period,
        })
    }

    /// Grid with the default period `16 pi`.
    pub fn with_default_period(dim: usize, points_per_axis: usize) -> Result<Self, GridError> {
        GridSpec::new(dim, points_per_axis, DEFAULT_PERIOD)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of samples `N^dim`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spatial sample spacing `L / N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    /// Frequency sample spacing `2 pi / L`.
    #[inline]
    pub fn freq_spacing(&self) -> f64 {
        core::f64::consts::TAU / self.period
    }

    /// Largest resolved frequency magnitude per axis, `pi N / L`.
    #[inline]
    pub fn nyquist(&self) -> f64 {
        core::f64::consts::PI * self.points_per_axis as f64 / self.period
    }

    /// Volume of one spatial cell.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Decompose a flat index into per-axis indices (row major, axis 0 outer).
    #[inline]
    pub fn axes_of(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.points_per_axis, idx % self.points_per_axis],
        }
    }

    #[inline]
    pub fn flat_of(&self, axes: [usize; 2]) -> usize {
        match self.dim {
            1 => axes[0],
            _ => axes[0] * self.points_per_axis + axes[1],
        }
    }

    /// Spatial coordinates of the sample with the given flat index.
    #[inline]
    pub fn point(&self, idx: usize) -> Coords {
        let ax = self.axes_of(idx);
        let h = self.spacing();
        let half = 0.5 * self.period;
        let mut vals = [0.0; 2];
        for a in 0..self.dim {
            vals[a] = ax[a] as f64 * h - half;
        }
        Coords::new(vals, self.dim)
    }

    /// Signed integer mode numbers for a flat frequency index.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        let ax = self.axes_of(idx);
        let half = (self.points_per_axis / 2) as i64;
        let mut k = [0i64; 2];
        for a in 0..self.dim {
            k[a] = ax[a] as i64 - half;
        }
        k
    }

    /// Frequency coordinates of the sample with the given flat index
    /// (signed storage order: per-axis index `s` holds mode `s - N/2`).
    #[inline]
    pub fn frequency(&self, idx: usize) -> Coords {
        let k = self.mode(idx);
        let dxi = self.freq_spacing();
        let mut vals = [0.0; 2];
        for a in 0..self.dim {
            vals[a] = k[a] as f64 * dxi;
        }
        Coords::new(vals, self.dim)
    }

    /// Flat frequency index holding a given signed mode pair.
    #[inline]
    pub fn index_of_mode(&self, k: [i64; 2]) -> Option<usize> {
        let half = (self.points_per_axis / 2) as i64;
        let mut ax = [0usize; 2];
        for a in 0..self.dim {
            let s = k[a] + half;
            if s < 0 || s >= self.points_per_axis as i64 {
                return None;
            }
            ax[a] = s as usize;
        }
        Some(self.flat_of(ax))
    }
}

/// Complex samples over a [`GridSpec`], in space or frequency depending on
/// how the function was produced. The samples are immutable from outside;
/// operations return fresh functions.
#[derive(Clone, Debug)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_samples(spec: GridSpec, samples: Vec<Complex64>) -> Result<Self, GridError> {
        if samples.len() != spec.len() {
            return Err(GridError::DimensionMismatch {
                expected: spec.len(),
                got: samples.len(),
            });
        }
        Ok(GridFunction { spec, samples })
    }

    /// Sample a closure of the spatial coordinates.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let samples = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridFunction { spec, samples }
    }

    /// Sample a closure of the frequency coordinates (signed storage order).
    pub fn from_freq_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let samples = (0..spec.len()).map(|i| f(&spec.frequency(i))).collect();
        GridFunction { spec, samples }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction {
            spec,
            samples: alloc::vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    #[inline]
    pub fn value(&self, idx: usize) -> Complex64 {
        self.samples[idx]
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn map<F>(&self, f: F) -> GridFunction
    where
        F: Fn(usize, Complex64) -> Complex64,
    {
        GridFunction {
            spec: self.spec,
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(i, &v)| f(i, v))
                .collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> GridFunction {
        self.map(|_, v| c * v)
    }

    pub fn added(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.spec, other.spec, "grid mismatch in addition");
        GridFunction {
            spec: self.spec,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn pointwise_product(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.spec, other.spec, "grid mismatch in product");
        GridFunction {
            spec: self.spec,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        for (i, v) in self.samples.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(GridError::NonFiniteSample { index: i });
            }
        }
        Ok(())
    }
}

/// Radix-2 decimation-in-time transform, `sign = -1` forward, `+1` inverse,
/// no normalization.
fn fft_in_place(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2usize;
    while len <= n {
        let ang = sign * core::f64::consts::TAU / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Transform along every axis of the row-major array.
fn fft_axes(data: &mut [Complex64], spec: &GridSpec, sign: f64) {
    let n = spec.points_per_axis();
    match spec.dim() {
        1 => fft_in_place(data, sign),
        _ => {
            for row in 0..n {
                fft_in_place(&mut data[row * n..(row + 1) * n], sign);
            }
            let mut col = alloc::vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft_in_place(&mut col, sign);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
    }
}

#[inline]
fn parity_sign(axes: [usize; 2], dim: usize) -> f64 {
    let mut s = 0usize;
    for a in axes.iter().take(dim) {
        s += *a;
    }
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Riemann-sum approximation of `f_hat(xi) = \int f(x) e^{-i x.xi} dx` on
/// the grid frequencies, stored in signed mode order.
pub fn forward_transform(f: &GridFunction) -> GridFunction {
    let spec = f.spec();
    let n = spec.points_per_axis();
    let mut data: Vec<Complex64> = f
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * parity_sign(spec.axes_of(i), spec.dim()))
        .collect();
    fft_axes(&mut data, &spec, -1.0);
    let scale = spec.cell_volume();
    let half = n / 2;
    for (s, v) in data.iter_mut().enumerate() {
        let ax = spec.axes_of(s);
        // mode k = s - N/2 per axis; (-1)^k == (-1)^(s + N/2)
        let mut par = 0usize;
        for a in ax.iter().take(spec.dim()) {
            par += a + half;
        }
        let sgn = if par % 2 == 0 { 1.0 } else { -1.0 };
        *v *= sgn * scale;
    }
    GridFunction {
        spec,
        samples: data,
    }
}

/// Inverse of [`forward_transform`]: `f(x) = \int f_hat(xi) e^{i x.xi} dbar xi`
/// with `dbar xi = (2 pi)^{-dim} d xi`, i.e. weight `L^{-dim}` per mode.
pub fn inverse_transform(fhat: &GridFunction) -> GridFunction {
    let spec = fhat.spec();
    let n = spec.points_per_axis();
    let half = n / 2;
    let mut data: Vec<Complex64> = fhat
        .samples()
        .iter()
        .enumerate()
        .map(|(s, &v)| {
            let ax = spec.axes_of(s);
            let mut par = 0usize;
            for a in ax.iter().take(spec.dim()) {
                par += a + half;
            }
            if par % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    fft_axes(&mut data, &spec, 1.0);
    let scale = spec.period().powi(-(spec.dim() as i32));
    for (j, v) in data.iter_mut().enumerate() {
        *v *= parity_sign(spec.axes_of(j), spec.dim()) * scale;
    }
    GridFunction {
        spec,
        samples: data,
    }
}

/// Apply the Fourier multiplier `m(t xi)`: transform, scale each mode by
/// `m(t xi)`, transform back. Errors when the multiplier produces a
/// non-finite value, naming the offending frequency.
pub fn apply_multiplier<F>(f: &GridFunction, m: F, t: f64) -> Result<GridFunction, GridError>
where
    F: Fn(&[f64]) -> Complex64,
{
    let spec = f.spec();
    let mut fhat = forward_transform(f);
    for idx in 0..spec.len() {
        let xi = spec.frequency(idx);
        let mut arg = [0.0; 2];
        for a in 0..spec.dim() {
            arg[a] = t * xi[a];
        }
        let v = m(&arg[..spec.dim()]);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(GridError::NonFiniteMultiplier {
                index: idx,
                frequency: [xi.vals[0], xi.vals[1]],
            });
        }
        fhat.samples[idx] *= v;
    }
    Ok(inverse_transform(&fhat))
}

/// Translate `f` by `shift` (any real offset) through the exact band-limited
/// representation, `f(x - shift)`.
pub fn translate(f: &GridFunction, shift: &[f64]) -> GridFunction {
    let spec = f.spec();
    assert_eq!(shift.len(), spec.dim(), "shift dimension mismatch");
    let mut fhat = forward_transform(f);
    for idx in 0..spec.len() {
        let xi = spec.frequency(idx);
        let phase = -crate::numeric::dot(&xi, shift);
        fhat.samples[idx] *= Complex64::new(phase.cos(), phase.sin());
    }
    inverse_transform(&fhat)
}

/// Riemann-sum Lebesgue norm; `p` may be any positive exponent (quasi-norms
/// included) or `f64::INFINITY` for the sup over samples.
pub fn lebesgue_norm(f: &GridFunction, p: f64) -> f64 {
    assert!(p > 0.0, "lebesgue_norm requires p > 0");
    if p == f64::INFINITY {
        return f.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let cell = f.spec().cell_volume();
    let sum: f64 = f.samples().iter().map(|v| v.norm().powf(p) * cell).sum();
    sum.powf(1.0 / p)
}

/// `L^p` norm over frequency samples against `dbar xi` (weight `L^{-dim}`).
pub fn frequency_norm(fhat: &GridFunction, p: f64) -> f64 {
    assert!(p > 0.0);
    if p == f64::INFINITY {
        return fhat.samples().iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let w = fhat.spec().period().powi(-(fhat.spec().dim() as i32));
    let sum: f64 = fhat.samples().iter().map(|v| v.norm().powf(p) * w).sum();
    sum.powf(1.0 / p)
}

/// Mean of the samples against the cell measure, `\int f dx`.
pub fn integral(f: &GridFunction) -> Complex64 {
    let cell = f.spec().cell_volume();
    f.samples().iter().sum::<Complex64>() * cell
}

/// Indicator of `[a, b]` sampled with exact cell-fraction weighting: each
/// sample carries the fraction of its cell `[x - h/2, x + h/2)` covered by
/// the interval, so the discrete mass matches `b - a` exactly.
pub fn indicator_interval(spec: GridSpec, a: f64, b: f64) -> GridFunction {
    assert_eq!(spec.dim(), 1, "indicator_interval is one-dimensional");
    assert!(b >= a);
    let h = spec.spacing();
    GridFunction::from_fn(spec, |x| {
        let lo = x[0] - 0.5 * h;
        let hi = x[0] + 0.5 * h;
        let overlap = (hi.min(b) - lo.max(a)).max(0.0);
        Complex64::new(overlap / h, 0.0)
    })
}

/// Band-limited realization of the indicator of `[a, b]`: grid modes carry
/// the exact continuum transform `(e^{-i a xi} - e^{-i b xi}) / (i xi)`.
/// Pointwise it rings near the jumps, but linear operations on it (Hilbert
/// transform, multipliers) see the exact spectrum up to the Nyquist cut.
pub fn band_limited_indicator_interval(spec: GridSpec, a: f64, b: f64) -> GridFunction {
    assert_eq!(spec.dim(), 1, "indicator construction is one-dimensional");
    assert!(b >= a);
    let hat = GridFunction::from_freq_fn(spec, |xi| {
        let x = xi[0];
        if x == 0.0 {
            Complex64::new(b - a, 0.0)
        } else {
            let ea = Complex64::new(0.0, -a * x).exp();
            let eb = Complex64::new(0.0, -b * x).exp();
            (ea - eb) / Complex64::new(0.0, x)
        }
    });
    inverse_transform(&hat)
}

/// Tensor-product indicator of a box, cell-fraction weighted per axis.
pub fn indicator_box(spec: GridSpec, lo: &[f64], hi: &[f64]) -> GridFunction {
    assert_eq!(lo.len(), spec.dim());
    assert_eq!(hi.len(), spec.dim());
    let h = spec.spacing();
    GridFunction::from_fn(spec, |x| {
        let mut frac = 1.0;
        for a in 0..x.len() {
            let cl = x[a] - 0.5 * h;
            let ch = x[a] + 0.5 * h;
            frac *= ((ch.min(hi[a]) - cl.max(lo[a])).max(0.0)) / h;
        }
        Complex64::new(frac, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec1(n: usize) -> GridSpec {
        GridSpec::with_default_period(1, n).unwrap()
    }

    #[test]
    fn constructor_validates() {
        assert!(matches!(
            GridSpec::new(3, 64, 1.0),
            Err(GridError::UnsupportedDim(3))
        ));
        assert!(matches!(
            GridSpec::new(1, 48, 1.0),
            Err(GridError::NotPowerOfTwo(48))
        ));
        assert!(matches!(
            GridSpec::new(1, 8, 1.0),
            Err(GridError::TooFewPoints(8))
        ));
        assert!(matches!(
            GridSpec::new(1, 64, -2.0),
            Err(GridError::BadPeriod(_))
        ));
        assert!(GridSpec::new(2, 64, 4.0).is_ok());
    }

    #[test]
    fn constant_transforms_to_delta_of_mass_l_pow_dim() {
        for dim in [1usize, 2] {
            let spec = GridSpec::new(dim, 32, 5.0).unwrap();
            let f = GridFunction::from_fn(spec, |_| Complex64::new(1.0, 0.0));
            let fhat = forward_transform(&f);
            let zero = spec.index_of_mode([0, 0]).unwrap();
            let mass = 5.0_f64.powi(dim as i32);
            assert!((fhat.value(zero) - Complex64::new(mass, 0.0)).norm() < 1e-10 * mass);
            for idx in 0..spec.len() {
                if idx != zero {
                    assert!(fhat.value(idx).norm() < 1e-9 * mass);
                }
            }
        }
    }

    #[test]
    fn pure_mode_lands_on_its_index() {
        let spec = spec1(64);
        let dxi = spec.freq_spacing();
        let f = GridFunction::from_fn(spec, |x| {
            let th = dxi * x[0];
            Complex64::new(th.cos(), th.sin())
        });
        let fhat = forward_transform(&f);
        let idx = spec.index_of_mode([1, 0]).unwrap();
        assert!((fhat.value(idx).re - spec.period()).abs() < 1e-9);
        assert!(fhat.value(idx).im.abs() < 1e-9);
        for i in 0..spec.len() {
            if i != idx {
                assert!(fhat.value(i).norm() < 1e-9);
            }
        }
    }

    /// Independent quadratic-cost reference for the forward transform.
    fn dft_direct(f: &GridFunction) -> Vec<Complex64> {
        let spec = f.spec();
        let cell = spec.cell_volume();
        (0..spec.len())
            .map(|ki| {
                let xi = spec.frequency(ki);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..spec.len() {
                    let x = spec.point(j);
                    let ph = -crate::numeric::dot(&x, &xi);
                    acc += f.value(j) * Complex64::new(ph.cos(), ph.sin());
                }
                acc * cell
            })
            .collect()
    }

    #[test]
    fn fft_matches_direct_summation() {
        for (dim, n) in [(1usize, 64usize), (2, 16)] {
            let spec = GridSpec::new(dim, n, 7.5).unwrap();
            let f = GridFunction::from_fn(spec, |x| {
                Complex64::new(
                    (x[0] * 1.3).sin() + 0.2 * (x.get(1).copied().unwrap_or(0.0) * 2.0).cos(),
                    (x[0] * 0.7).cos(),
                )
            });
            let fhat = forward_transform(&f);
            let direct = dft_direct(&f);
            let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in fhat.samples().iter().zip(&direct) {
                assert!((a - b).norm() < 1e-10 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for dim in [1usize, 2] {
            let spec = GridSpec::new(dim, 32, 11.0).unwrap();
            let f = GridFunction::from_fn(spec, |x| {
                Complex64::new((2.1 * x[0]).sin(), (0.4 * x[0]).cos() - 0.3)
            });
            let g = inverse_transform(&forward_transform(&f));
            let scale = lebesgue_norm(&f, f64::INFINITY);
            for (a, b) in f.samples().iter().zip(g.samples()) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn parseval_with_dbar_normalization() {
        let spec = spec1(128);
        let f = GridFunction::from_fn(spec, |x| {
            Complex64::new((0.9 * x[0]).cos(), (1.7 * x[0]).sin() * 0.5)
        });
        let fhat = forward_transform(&f);
        let space = lebesgue_norm(&f, 2.0);
        let freq = frequency_norm(&fhat, 2.0);
        // ||f||_2^2 = (2 pi)^{-n} ||f_hat||_2^2 is frequency_norm's weighting.
        assert!((space - freq).abs() < 1e-10 * space);
    }

    #[test]
    fn multiplier_identity_and_composition() {
        let spec = spec1(64);
        let f = GridFunction::from_fn(spec, |x| Complex64::new((x[0] * 0.3).sin(), 0.0));
        let id = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0), 1.0).unwrap();
        for (a, b) in f.samples().iter().zip(id.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let m1 = |xi: &[f64]| Complex64::new((-(xi[0] * xi[0])).exp(), 0.0);
        let m2 = |xi: &[f64]| Complex64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0);
        let seq = apply_multiplier(&apply_multiplier(&f, m1, 0.5).unwrap(), m2, 0.5).unwrap();
        let joint = apply_multiplier(&f, |xi| m1(xi) * m2(xi), 0.5).unwrap();
        for (a, b) in seq.samples().iter().zip(joint.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_rejects_non_finite() {
        let spec = spec1(32);
        let f = GridFunction::from_fn(spec, |_| Complex64::new(1.0, 0.0));
        let err = apply_multiplier(&f, |xi| Complex64::new(1.0 / xi[0], 0.0), 1.0).unwrap_err();
        match err {
            GridError::NonFiniteMultiplier { frequency, .. } => {
                assert_eq!(frequency[0], 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn norms_against_refined_quadrature() {
        // Strictly positive profile built from box modes: |f|^p is smooth
        // and periodic, so grid Riemann sums converge spectrally and a 16x
        // refined grid is an adequate oracle.
        let coarse = spec1(64);
        let fine = spec1(1024);
        let kappa = coarse.freq_spacing();
        let profile = move |x: &[f64]| {
            Complex64::new(
                (2.0 * kappa * x[0]).sin().powi(2) + 0.1 * (kappa * x[0]).cos() + 0.3,
                0.0,
            )
        };
        let fc = GridFunction::from_fn(coarse, profile);
        let ff = GridFunction::from_fn(fine, profile);
        for p in [1.0, 2.0, 4.0] {
            let a = lebesgue_norm(&fc, p);
            let b = lebesgue_norm(&ff, p);
            assert!((a - b).abs() < 1e-8 * b, "p={p}: {a} vs {b}");
        }
        let gauss_spec = GridSpec::new(1, 256, 40.0).unwrap();
        let g = GridFunction::from_fn(gauss_spec, |x| {
            Complex64::new((-(x[0] * x[0]) / 2.0).exp(), 0.0)
        });
        // ||exp(-x^2/2)||_2 = pi^{1/4} on the line; tails below 1e-12 at L=40.
        assert!((lebesgue_norm(&g, 2.0) - core::f64::consts::PI.powf(0.25)).abs() < 1e-10);
        assert!(
            (lebesgue_norm(&g, f64::INFINITY) - 1.0).abs() < 1e-12,
            "sup of the Gaussian is its center sample"
        );
    }

    #[test]
    fn band_limited_indicator_mass_and_symmetry() {
        let spec = GridSpec::new(1, 512, 16.0 * core::f64::consts::PI).unwrap();
        let chi = band_limited_indicator_interval(spec, -1.0, 1.0);
        let mass = integral(&chi);
        assert!((mass.re - 2.0).abs() < 1e-12 && mass.im.abs() < 1e-12);
        // even data: imaginary part should vanish to rounding
        let max_im = chi.samples().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-12);
        // far from the jumps the plateau is close to one
        let at = |x: f64| {
            let idx = ((x + spec.period() / 2.0) / spec.spacing()).round() as usize;
            chi.value(idx).re
        };
        assert!((at(0.0) - 1.0).abs() < 2e-2);
        assert!(at(3.0).abs() < 2e-2);
    }

    #[test]
    fn translate_shifts_band_limited_functions_exactly() {
        let spec = spec1(64);
        let dxi = spec.freq_spacing();
        let f = GridFunction::from_fn(spec, |x| Complex64::new((3.0 * dxi * x[0]).cos(), 0.0));
        let shift = 0.37;
        let g = translate(&f, &[shift]);
        for idx in 0..spec.len() {
            let x = spec.point(idx);
            let expect = (3.0 * dxi * (x[0] - shift)).cos();
            assert!((g.value(idx).re - expect).abs() < 1e-11);
            assert!(g.value(idx).im.abs() < 1e-11);
        }
    }

    #[test]
    fn indicator_mass_is_exact() {
        let spec = spec1(64);
        let ind = indicator_interval(spec, -1.0, 1.0);
        let mass = integral(&ind);
        assert!((mass.re - 2.0).abs() < 1e-12);
        assert!(mass.im.abs() < 1e-15);
        let spec2 = GridSpec::new(2, 32, 9.0).unwrap();
        let bx = indicator_box(spec2, &[-1.0, -0.5], &[1.0, 2.0]);
        assert!((integral(&bx).re - 2.0 * 2.5).abs() < 1e-12);
    }
}
