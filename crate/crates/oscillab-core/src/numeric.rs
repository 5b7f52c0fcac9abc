//! Shared numeric helpers: smooth cutoff profiles, deterministic direction
//! sets for sup-norm sampling, tiny linear algebra, and least-squares fits.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// `exp(-1/s)` glue, extended by zero to `s <= 0`.
#[inline]
pub fn glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth transition: 0 for `s <= 0`, 1 for `s >= 1`, strictly monotone in
/// between, C-infinity with all one-sided derivatives vanishing at the ends.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = glue(s);
    a / (a + glue(1.0 - s))
}

/// Smooth transition from 0 at `lo` to 1 at `hi` (requires `lo < hi`).
#[inline]
pub fn smoothstep_between(r: f64, lo: f64, hi: f64) -> f64 {
    smoothstep((r - lo) / (hi - lo))
}

/// Japanese bracket `(1 + |v|^2)^{1/2}`.
#[inline]
pub fn bracket(v: &[f64]) -> f64 {
    (1.0 + norm_sq(v)).sqrt()
}

#[inline]
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic, roughly equidistributed unit vectors in `dim` dimensions.
///
/// Dimension 1 returns the two signs; dimension 2 walks the circle; higher
/// dimensions combine circle walks through a Kronecker sequence so the set
/// is reproducible without any RNG.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1);
    match dim {
        1 => alloc::vec![alloc::vec![1.0], alloc::vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = core::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                alloc::vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // Kronecker sequence on angle coordinates; irrational strides.
            let alphas = [
                0.754_877_666_246_692_9_f64, // plastic-number based
                0.569_840_290_998_053_3,
                0.430_159_709_001_946_7,
                0.382_748_787_747_912_2,
            ];
            (0..count)
                .map(|k| {
                    let mut v = Vec::with_capacity(dim);
                    let mut remaining = dim;
                    let mut pair = 0usize;
                    // Fill coordinates two at a time from an angle each.
                    let mut amp = 1.0;
                    while remaining > 0 {
                        let th = core::f64::consts::TAU
                            * (((k as f64 + 0.5) * alphas[pair % alphas.len()]) % 1.0);
                        if remaining >= 2 {
                            // Split amplitude between this pair and the rest.
                            let keep = if remaining == 2 {
                                amp
                            } else {
                                let frac = core::f64::consts::TAU
                                    * (((k as f64 + 0.5) * alphas[(pair + 1) % alphas.len()])
                                        % 1.0);
                                amp * (0.5 + 0.45 * frac.sin())
                            };
                            let keep = keep.min(amp);
                            let r = keep.sqrt();
                            v.push(r * th.cos());
                            v.push(r * th.sin());
                            amp -= keep;
                            remaining -= 2;
                        } else {
                            v.push(amp.sqrt() * if th.cos() >= 0.0 { 1.0 } else { -1.0 });
                            remaining -= 1;
                            amp = 0.0;
                        }
                        pair += 2;
                    }
                    let n = norm(&v);
                    if n > 0.0 {
                        for c in v.iter_mut() {
                            *c /= n;
                        }
                    } else {
                        v[0] = 1.0;
                    }
                    v
                })
                .collect()
        }
    }
}

/// Solve a small square system by Gaussian elimination with partial
/// pivoting. Returns `None` when the pivot collapses.
pub fn solve_dense(mat: &[f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= a[col * n + j] * x[j];
        }
        x[col] = s / a[col * n + col];
    }
    Some(x)
}

/// Determinant of a row-major `n x n` matrix (n <= 3 in practice).
pub fn determinant(mat: &[f64], n: usize) -> f64 {
    match n {
        1 => mat[0],
        2 => mat[0] * mat[3] - mat[1] * mat[2],
        3 => {
            mat[0] * (mat[4] * mat[8] - mat[5] * mat[7])
                - mat[1] * (mat[3] * mat[8] - mat[5] * mat[6])
                + mat[2] * (mat[3] * mat[7] - mat[4] * mat[6])
        }
        _ => {
            // LU with partial pivoting.
            let mut a = mat.to_vec();
            let mut det = 1.0;
            for col in 0..n {
                let mut piv = col;
                for row in col + 1..n {
                    if a[row * n + col].abs() > a[piv * n + col].abs() {
                        piv = row;
                    }
                }
                if a[piv * n + col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    det = -det;
                    for j in 0..n {
                        a.swap(col * n + j, piv * n + j);
                    }
                }
                det *= a[col * n + col];
                for row in col + 1..n {
                    let f = a[row * n + col] / a[col * n + col];
                    for j in col..n {
                        a[row * n + j] -= f * a[col * n + j];
                    }
                }
            }
            det
        }
    }
}

/// Ordinary least squares for `y ~ a + b x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (sy / n, 0.0);
    }
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    (a, b)
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx: f64 = xs.iter().sum::<f64>() / n;
    let my: f64 = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Bessel function of the first kind, order zero, via the classic
/// rational/asymptotic split (Abramowitz & Stegun 9.4.1 and 9.4.3),
/// accurate to about 1e-7 absolute which is ample for kernel tables.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.0 {
        let t = (ax / 3.0) * (ax / 3.0);
        1.0 + t * (-2.2499997
            + t * (1.2656208
                + t * (-0.3163866 + t * (0.0444479 + t * (-0.0039444 + t * 0.0002100)))))
    } else {
        let t = 3.0 / ax;
        let f0 = 0.79788456
            + t * (-0.00000077
                + t * (-0.00552740
                    + t * (-0.00009512 + t * (0.00137237 + t * (-0.00072805 + t * 0.00014476)))));
        let th = ax - 0.78539816
            + t * (-0.04166397
                + t * (-0.00003954
                    + t * (0.00262573 + t * (-0.00054125 + t * (-0.00029333 + t * 0.00013558)))));
        f0 * th.cos() / ax.sqrt()
    }
}

/// Trapezoid weights for a log-spaced positive grid (integration against
/// `ds/s`); returns the nodes paired with weights.
pub fn log_trapezoid(lo: f64, hi: f64, nodes_per_octave: usize) -> Vec<(f64, f64)> {
    assert!(lo > 0.0 && hi > lo && nodes_per_octave >= 1);
    let octaves = (hi / lo).log2();
    let steps = (octaves * nodes_per_octave as f64).ceil().max(1.0) as usize;
    let h = octaves * core::f64::consts::LN_2 / steps as f64;
    (0..=steps)
        .map(|k| {
            let s = lo * (h * k as f64).exp();
            let w = if k == 0 || k == steps { 0.5 * h } else { h };
            (s, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_saturates_and_is_monotone() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(2.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = smoothstep(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn directions_are_unit() {
        for dim in [1usize, 2, 3, 4] {
            for d in unit_directions(dim, 17) {
                assert_eq!(d.len(), dim);
                assert!((norm(&d) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn directions_cover_axes_reasonably() {
        // max |component| over the set should get close to 1 in 2d
        let dirs = unit_directions(2, 64);
        let mx = dirs.iter().map(|d| d[0].abs()).fold(0.0, f64::max);
        assert!(mx > 0.99);
    }

    #[test]
    fn solve_small_systems() {
        let x = solve_dense(&[2.0, 1.0, 1.0, 3.0], &[5.0, 10.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!(solve_dense(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn determinant_matches_cofactor() {
        let m = [1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 1.0, 0.0, 6.0];
        assert!((determinant(&m, 3) - 22.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64 / 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 - 1.25 * x).collect();
        let (a, b) = linear_fit(&xs, &ys);
        assert!((a - 2.5).abs() < 1e-10);
        assert!((b + 1.25).abs() < 1e-10);
        assert!((correlation(&xs, &ys) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn j0_reference_values() {
        // Reference values from standard tables.
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-7);
        assert!((bessel_j0(1.0) - 0.7651976866).abs() < 2e-7);
        assert!((bessel_j0(5.0) - (-0.1775967713)).abs() < 2e-7);
        assert!((bessel_j0(10.0) - (-0.2459357645)).abs() < 2e-7);
    }

    #[test]
    fn log_trapezoid_integrates_ds_over_s() {
        // \int_{1/8}^{8} ds/s = log 64
        let total: f64 = log_trapezoid(0.125, 8.0, 16).iter().map(|(_, w)| w).sum();
        assert!((total - 64.0_f64.ln()).abs() < 1e-12);
    }
}
