//! Phase functions `phi(x, xi)`, their catalog, and the constants attached
//! to non-degenerate phases: the mixed-Hessian determinant bound and the
//! gradient comparability constant `lambda` with
//! `lambda |xi| <= |grad_x phi(x, xi)| <= lambda^{-1} |xi|`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::numeric::{determinant, dot, norm, solve_dense, unit_directions};

type ScalarFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type VecFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type MatFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseError {
    Degenerate {
        x: [f64; 2],
        xi: [f64; 2],
        det: f64,
    },
    GradientCollapse {
        x: [f64; 2],
        xi: [f64; 2],
        magnitude: f64,
    },
    ZeroFrequency,
    NewtonDiverged {
        residual: f64,
        iterations: usize,
    },
    UnknownPhase(String),
    BadParameter(&'static str),
}

impl fmt::Display for PhaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseError::Degenerate { x, xi, det } => write!(
                f,
                "mixed Hessian determinant {det:e} below threshold at x=({}, {}), xi=({}, {})",
                x[0], x[1], xi[0], xi[1]
            ),
            PhaseError::GradientCollapse { x, xi, magnitude } => write!(
                f,
                "|grad_x phi| = {magnitude:e} vanishes at x=({}, {}), xi=({}, {})",
                x[0], x[1], xi[0], xi[1]
            ),
            PhaseError::ZeroFrequency => write!(f, "cannot invert the gradient at zeta = 0"),
            PhaseError::NewtonDiverged {
                residual,
                iterations,
            } => write!(
                f,
                "gradient inversion stalled after {iterations} iterations, residual {residual:e}"
            ),
            PhaseError::UnknownPhase(name) => write!(f, "unknown phase '{name}'"),
            PhaseError::BadParameter(what) => write!(f, "bad phase parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PhaseError {}

/// A phase `phi(x, xi)` with analytic spatial gradient and mixed Hessian
/// `d^2 phi / dx dxi` (row index x, column index xi).
#[derive(Clone)]
pub struct Phase {
    name: String,
    dim: usize,
    eval: Arc<ScalarFn>,
    grad_x: Arc<VecFn>,
    mixed_hessian: Arc<MatFn>,
    homogeneous: bool,
    /// When the phase has the form `x.xi + omega(xi)`, the frequency-only
    /// part `omega`; enables exact multiplier evaluation of the operator.
    shift_part: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl Phase {
    pub fn new(
        name: &str,
        dim: usize,
        eval: Arc<ScalarFn>,
        grad_x: Arc<VecFn>,
        mixed_hessian: Arc<MatFn>,
        homogeneous: bool,
    ) -> Self {
        Phase {
            name: String::from(name),
            dim,
            eval,
            grad_x,
            mixed_hessian,
            homogeneous,
            shift_part: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn homogeneous(&self) -> bool {
        self.homogeneous
    }

    #[inline]
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        (self.eval)(x, xi)
    }

    #[inline]
    pub fn grad_x(&self, x: &[f64], xi: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        (self.grad_x)(x, xi, &mut out[..self.dim]);
        out
    }

    /// Row-major `dim x dim` mixed Hessian.
    #[inline]
    pub fn mixed_hessian(&self, x: &[f64], xi: &[f64]) -> [f64; 4] {
        let mut out = [0.0; 4];
        (self.mixed_hessian)(x, xi, &mut out[..self.dim * self.dim]);
        out
    }

    /// `omega` when `phi(x, xi) = x.xi + omega(xi)`.
    pub fn shift_part(&self) -> Option<&(dyn Fn(&[f64]) -> f64 + Send + Sync)> {
        self.shift_part.as_deref()
    }

    fn with_shift_part(mut self, omega: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>) -> Self {
        self.shift_part = Some(omega);
        self
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Phase")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

/// Axis-aligned spatial box over which phase constants are certified.
#[derive(Clone, Copy, Debug)]
pub struct SpatialBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub dim: usize,
}

impl SpatialBox {
    pub fn centered(dim: usize, radius: f64) -> Self {
        SpatialBox {
            lo: [-radius; 2],
            hi: [radius; 2],
            dim,
        }
    }

    fn samples(&self, per_axis: usize) -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        let steps = per_axis.max(2);
        match self.dim {
            1 => {
                for i in 0..steps {
                    let t = i as f64 / (steps - 1) as f64;
                    pts.push([self.lo[0] + t * (self.hi[0] - self.lo[0]), 0.0]);
                }
            }
            _ => {
                for i in 0..steps {
                    for j in 0..steps {
                        let t = i as f64 / (steps - 1) as f64;
                        let u = j as f64 / (steps - 1) as f64;
                        pts.push([
                            self.lo[0] + t * (self.hi[0] - self.lo[0]),
                            self.lo[1] + u * (self.hi[1] - self.lo[1]),
                        ]);
                    }
                }
            }
        }
        pts
    }
}

/// Sampling controls for the constant estimators.
#[derive(Clone, Copy, Debug)]
pub struct PhaseSampling {
    pub spatial_per_axis: usize,
    pub directions: usize,
    pub radial_scales: usize,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for PhaseSampling {
    fn default() -> Self {
        PhaseSampling {
            spatial_per_axis: 17,
            directions: 256,
            radial_scales: 8,
            min_radius: 0.5,
            max_radius: 128.0,
        }
    }
}

fn frequency_samples(dim: usize, sampling: &PhaseSampling) -> Vec<[f64; 2]> {
    let dirs = unit_directions(dim, sampling.directions);
    let mut out = Vec::new();
    for k in 0..sampling.radial_scales {
        let t = if sampling.radial_scales == 1 {
            0.0
        } else {
            k as f64 / (sampling.radial_scales - 1) as f64
        };
        let r = sampling.min_radius * (sampling.max_radius / sampling.min_radius).powf(t);
        for d in &dirs {
            let mut v = [0.0; 2];
            for a in 0..dim {
                v[a] = r * d[a];
            }
            out.push(v);
        }
    }
    out
}

/// Minimum of `|det d^2 phi / dx dxi|` over the box times a frequency
/// sample set; errors (with a witness) when the minimum degenerates.
pub fn nondegeneracy_constant(
    phase: &Phase,
    region: &SpatialBox,
    sampling: &PhaseSampling,
) -> Result<f64, PhaseError> {
    let dim = phase.dim;
    let mut best = f64::INFINITY;
    for x in region.samples(sampling.spatial_per_axis) {
        for xi in frequency_samples(dim, sampling) {
            let h = phase.mixed_hessian(&x[..dim], &xi[..dim]);
            let det = determinant(&h[..dim * dim], dim).abs();
            if det < 1e-10 {
                return Err(PhaseError::Degenerate { x, xi, det });
            }
            if det < best {
                best = det;
            }
        }
    }
    Ok(best)
}

/// The comparability constant: largest `lambda <= 1` with
/// `lambda |xi| <= |grad_x phi| <= lambda^{-1} |xi|` over the sample set.
pub fn lambda_constant(
    phase: &Phase,
    region: &SpatialBox,
    sampling: &PhaseSampling,
) -> Result<f64, PhaseError> {
    let dim = phase.dim;
    let mut low = f64::INFINITY;
    let mut high: f64 = 0.0;
    for x in region.samples(sampling.spatial_per_axis) {
        for xi in frequency_samples(dim, sampling) {
            let g = phase.grad_x(&x[..dim], &xi[..dim]);
            let r = norm(&xi[..dim]);
            if r == 0.0 {
                continue;
            }
            let ratio = norm(&g[..dim]) / r;
            if ratio < 1e-12 {
                return Err(PhaseError::GradientCollapse {
                    x,
                    xi,
                    magnitude: ratio * r,
                });
            }
            low = low.min(ratio);
            high = high.max(ratio);
        }
    }
    Ok(low.min(1.0 / high).min(1.0))
}

/// Solve `grad_x phi(x, xi) = zeta` for `xi` by Newton iteration. For
/// homogeneous phases the solve runs on the unit sphere (target
/// `zeta / |zeta|`) and the result is rescaled by `|zeta|`; otherwise plain
/// Newton from the seed `zeta`.
pub fn invert_gradient(phase: &Phase, x: &[f64], zeta: &[f64]) -> Result<[f64; 2], PhaseError> {
    let dim = phase.dim;
    let zeta_norm = norm(zeta);
    if zeta_norm == 0.0 {
        return Err(PhaseError::ZeroFrequency);
    }
    let scale = if phase.homogeneous { zeta_norm } else { 1.0 };
    let mut target = [0.0; 2];
    for a in 0..dim {
        target[a] = zeta[a] / scale;
    }
    let mut xi = target;
    let mut residual = f64::INFINITY;
    for iter in 0..64 {
        let g = phase.grad_x(x, &xi[..dim]);
        let mut r = [0.0; 2];
        for a in 0..dim {
            r[a] = g[a] - target[a];
        }
        residual = norm(&r[..dim]);
        if residual <= 1e-12 * norm(&target[..dim]).max(1.0) {
            let mut out = [0.0; 2];
            for a in 0..dim {
                out[a] = xi[a] * scale;
            }
            // Confirm at the requested scale (exact for homogeneous phases).
            let gg = phase.grad_x(x, &out[..dim]);
            let mut err = 0.0;
            for a in 0..dim {
                err += (gg[a] - zeta[a]) * (gg[a] - zeta[a]);
            }
            if err.sqrt() > 1e-9 * zeta_norm {
                return Err(PhaseError::NewtonDiverged {
                    residual: err.sqrt(),
                    iterations: iter,
                });
            }
            return Ok(out);
        }
        let h = phase.mixed_hessian(x, &xi[..dim]);
        // Jacobian of xi -> grad_x phi is the transpose of the mixed Hessian.
        let mut jt = [0.0; 4];
        for i in 0..dim {
            for j in 0..dim {
                jt[i * dim + j] = h[j * dim + i];
            }
        }
        let step = match solve_dense(&jt[..dim * dim], &r[..dim], dim) {
            Some(s) => s,
            None => {
                return Err(PhaseError::NewtonDiverged {
                    residual,
                    iterations: iter,
                })
            }
        };
        let mut damping = 1.0;
        // Keep homogeneous iterates away from the conic singularity at 0.
        loop {
            let mut cand = [0.0; 2];
            for a in 0..dim {
                cand[a] = xi[a] - damping * step[a];
            }
            if !phase.homogeneous || norm(&cand[..dim]) > 0.05 {
                xi = cand;
                break;
            }
            damping *= 0.5;
            if damping < 1e-6 {
                return Err(PhaseError::NewtonDiverged {
                    residual,
                    iterations: iter,
                });
            }
        }
    }
    Err(PhaseError::NewtonDiverged {
        residual,
        iterations: 64,
    })
}

/// `phi(x, xi) = x.xi`.
pub fn linear_phase(dim: usize) -> Phase {
    Phase::new(
        "linear",
        dim,
        Arc::new(|x: &[f64], xi: &[f64]| dot(x, xi)),
        Arc::new(|_x: &[f64], xi: &[f64], out: &mut [f64]| out.copy_from_slice(xi)),
        Arc::new(move |_x: &[f64], _xi: &[f64], out: &mut [f64]| {
            let d = (out.len() as f64).sqrt() as usize;
            out.fill(0.0);
            for i in 0..d {
                out[i * d + i] = 1.0;
            }
        }),
        true,
    )
    .with_shift_part(Arc::new(|_xi: &[f64]| 0.0))
}

/// `phi(x, xi) = x.xi + |xi|`, the propagating wave phase.
pub fn halfwave_phase(dim: usize) -> Phase {
    Phase::new(
        "halfwave",
        dim,
        Arc::new(|x: &[f64], xi: &[f64]| dot(x, xi) + norm(xi)),
        Arc::new(|_x: &[f64], xi: &[f64], out: &mut [f64]| out.copy_from_slice(xi)),
        Arc::new(move |_x: &[f64], _xi: &[f64], out: &mut [f64]| {
            let d = (out.len() as f64).sqrt() as usize;
            out.fill(0.0);
            for i in 0..d {
                out[i * d + i] = 1.0;
            }
        }),
        true,
    )
    .with_shift_part(Arc::new(|xi: &[f64]| norm(xi)))
}

/// `phi(x, xi) = x.xi + (u.xi) <x>`: a homogeneous tilt whose gradient
/// genuinely mixes x and xi. Requires `|u| < 1` to stay non-degenerate on
/// bounded spatial boxes.
pub fn tilt_phase(dim: usize, u: &[f64]) -> Result<Phase, PhaseError> {
    if u.len() != dim {
        return Err(PhaseError::BadParameter("tilt vector dimension"));
    }
    if norm(u) >= 1.0 {
        return Err(PhaseError::BadParameter("tilt vector must satisfy |u| < 1"));
    }
    let mut uu = [0.0; 2];
    uu[..dim].copy_from_slice(u);
    let u_eval = uu;
    let u_grad = uu;
    let u_hess = uu;
    Ok(Phase::new(
        "tilt",
        dim,
        Arc::new(move |x: &[f64], xi: &[f64]| {
            dot(x, xi) + dot(&u_eval[..xi.len()], xi) * crate::numeric::bracket(x)
        }),
        Arc::new(move |x: &[f64], xi: &[f64], out: &mut [f64]| {
            let br = crate::numeric::bracket(x);
            let uxi = dot(&u_grad[..xi.len()], xi);
            for a in 0..xi.len() {
                out[a] = xi[a] + uxi * x[a] / br;
            }
        }),
        Arc::new(move |x: &[f64], _xi: &[f64], out: &mut [f64]| {
            let d = x.len();
            let br = crate::numeric::bracket(x);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = if i == j { 1.0 } else { 0.0 } + u_hess[j] * x[i] / br;
                }
            }
        }),
        true,
    ))
}

/// One-dimensional `phi(x, xi) = x xi + eps xi sin x` (requires `|eps| < 1`).
/// Homogeneous of degree one in `xi` on each half-line.
pub fn sine_phase(eps: f64) -> Result<Phase, PhaseError> {
    if !(eps.abs() < 1.0) {
        return Err(PhaseError::BadParameter("sine amplitude must satisfy |eps| < 1"));
    }
    Ok(Phase::new(
        "sine",
        1,
        Arc::new(move |x: &[f64], xi: &[f64]| x[0] * xi[0] + eps * xi[0] * x[0].sin()),
        Arc::new(move |x: &[f64], xi: &[f64], out: &mut [f64]| {
            out[0] = xi[0] * (1.0 + eps * x[0].cos());
        }),
        Arc::new(move |x: &[f64], _xi: &[f64], out: &mut [f64]| {
            out[0] = 1.0 + eps * x[0].cos();
        }),
        true,
    ))
}

/// Catalog lookup used by configuration files: `linear`, `halfwave`,
/// `tilt` (params: tilt vector), `sine` (params[0] = eps).
pub fn phase_by_name(name: &str, dim: usize, params: &[f64]) -> Result<Phase, PhaseError> {
    match name {
        "linear" => Ok(linear_phase(dim)),
        "halfwave" => Ok(halfwave_phase(dim)),
        "tilt" => {
            if params.len() < dim {
                return Err(PhaseError::BadParameter("tilt needs dim parameters"));
            }
            tilt_phase(dim, &params[..dim])
        }
        "sine" => {
            if dim != 1 {
                return Err(PhaseError::BadParameter("sine phase is one-dimensional"));
            }
            let eps = params.first().copied().unwrap_or(0.5);
            sine_phase(eps)
        }
        other => Err(PhaseError::UnknownPhase(String::from(other))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfwave_gradient_and_hessian() {
        let p = halfwave_phase(2);
        let g = p.grad_x(&[0.3, -0.2], &[1.0, 2.0]);
        assert_eq!(&g[..2], &[1.0, 2.0]);
        let h = p.mixed_hessian(&[0.3, -0.2], &[1.0, 2.0]);
        assert_eq!(&h[..4], &[1.0, 0.0, 0.0, 1.0]);
        assert!((p.eval(&[0.5, 0.0], &[3.0, 4.0]) - (1.5 + 5.0)).abs() < 1e-14);
    }

    #[test]
    fn nondegeneracy_of_catalog() {
        let region = SpatialBox::centered(1, 2.0);
        let sampling = PhaseSampling::default();
        for phase in [
            linear_phase(1),
            halfwave_phase(1),
            sine_phase(0.5).unwrap(),
            tilt_phase(1, &[0.4]).unwrap(),
        ] {
            let c = nondegeneracy_constant(&phase, &region, &sampling).unwrap();
            assert!(c > 0.0, "{} degenerate", phase.name());
        }
        // sine with eps = 0.5: min |1 + 0.5 cos x| = 0.5 on a wide box.
        let c = nondegeneracy_constant(
            &sine_phase(0.5).unwrap(),
            &SpatialBox::centered(1, 4.0),
            &sampling,
        )
        .unwrap();
        assert!((c - 0.5).abs() < 1e-2);
    }

    #[test]
    fn lambda_of_halfwave_is_one() {
        let region = SpatialBox::centered(2, 2.0);
        let lam = lambda_constant(&halfwave_phase(2), &region, &PhaseSampling::default()).unwrap();
        assert!((lam - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_of_sine_matches_amplitude() {
        let region = SpatialBox::centered(1, 4.0);
        let lam = lambda_constant(&sine_phase(0.5).unwrap(), &region, &PhaseSampling::default())
            .unwrap();
        // |grad| / |xi| ranges over [0.5, 1.5]; lambda = min(0.5, 1/1.5).
        assert!((lam - 0.5).abs() < 2e-2, "lambda = {lam}");
    }

    #[test]
    fn invert_gradient_linear_is_identity() {
        let p = linear_phase(2);
        let xi = invert_gradient(&p, &[0.1, 0.2], &[3.0, -4.0]).unwrap();
        assert!((xi[0] - 3.0).abs() < 1e-10);
        assert!((xi[1] + 4.0).abs() < 1e-10);
    }

    #[test]
    fn invert_gradient_tilt_2d() {
        let p = tilt_phase(2, &[0.3, -0.1]).unwrap();
        let x = [0.7, -0.4];
        let xi_true = [2.0, 5.0];
        let zeta = p.grad_x(&x, &xi_true);
        let xi = invert_gradient(&p, &x, &zeta[..2]).unwrap();
        assert!((xi[0] - xi_true[0]).abs() < 1e-8, "{xi:?}");
        assert!((xi[1] - xi_true[1]).abs() < 1e-8);
    }

    #[test]
    fn invert_gradient_respects_homogeneity() {
        let p = sine_phase(0.4).unwrap();
        let x = [1.3];
        for &scale in &[1e-2, 1.0, 1e4] {
            let xi_true = [scale * 2.5];
            let zeta = p.grad_x(&x, &xi_true[..1]);
            let xi = invert_gradient(&p, &x, &zeta[..1]).unwrap();
            assert!(
                (xi[0] - xi_true[0]).abs() < 1e-9 * scale.max(1.0),
                "scale {scale}: {xi:?}"
            );
        }
    }

    #[test]
    fn invert_gradient_rejects_zero() {
        let p = linear_phase(1);
        assert!(matches!(
            invert_gradient(&p, &[0.0], &[0.0]),
            Err(PhaseError::ZeroFrequency)
        ));
    }

    #[test]
    fn catalog_by_name() {
        assert!(phase_by_name("linear", 2, &[]).is_ok());
        assert!(phase_by_name("halfwave", 1, &[]).is_ok());
        assert!(phase_by_name("tilt", 2, &[0.2, 0.1]).is_ok());
        assert!(phase_by_name("sine", 1, &[0.3]).is_ok());
        assert!(matches!(
            phase_by_name("cubic", 1, &[]),
            Err(PhaseError::UnknownPhase(_))
        ));
        assert!(phase_by_name("sine", 2, &[0.3]).is_err());
        assert!(tilt_phase(2, &[0.9, 0.9]).is_err());
    }

    #[test]
    fn shift_part_detection() {
        assert!(linear_phase(1).shift_part().is_some());
        assert!(halfwave_phase(2).shift_part().is_some());
        assert!(sine_phase(0.2).unwrap().shift_part().is_none());
        let om = halfwave_phase(2);
        let omega = om.shift_part().unwrap();
        assert!((omega(&[3.0, 4.0]) - 5.0).abs() < 1e-14);
    }
}
