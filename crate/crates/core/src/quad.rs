//! Quadrature building blocks: Gauss-Legendre rules, the product rule on the
//! sphere, and an adaptive 1D integrator used by the oracles and the cone
//! benchmark.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Nodes converge to machine precision in a handful of
/// steps from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P'_n(x) via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with an `n`-point Gauss-Legendre rule.
pub fn gl_integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Product rule on the unit sphere: Gauss-Legendre in the polar cosine,
/// uniform trapezoid in azimuth. Weights sum to 4 pi.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub polar_order: usize,
    pub azimuth_order: usize,
}

impl SphereRule {
    pub fn new(polar_order: usize, azimuth_order: usize) -> Self {
        let (mu, wmu) = gauss_legendre(polar_order);
        let dphi = 2.0 * std::f64::consts::PI / azimuth_order as f64;
        let mut directions = Vec::with_capacity(polar_order * azimuth_order);
        let mut weights = Vec::with_capacity(polar_order * azimuth_order);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).max(0.0).sqrt();
            for j in 0..azimuth_order {
                let phi = dphi * j as f64;
                directions.push(Vec3::new(s * phi.cos(), s * phi.sin(), *m));
                weights.push(wm * dphi);
            }
        }
        SphereRule { directions, weights, polar_order, azimuth_order }
    }

    /// Integral over S^2 of `f(direction)`, with the rule's z-axis rotated to
    /// `axis` (unit vector).
    pub fn integrate(&self, axis: Vec3, f: impl Fn(Vec3) -> f64) -> f64 {
        let (e1, e2) = axis.orthonormal_frame();
        let mut sum = 0.0;
        for (d, w) in self.directions.iter().zip(&self.weights) {
            let dir = e1 * d.x + e2 * d.y + axis * d.z;
            sum += w * f(dir);
        }
        sum
    }
}

/// Adaptive Simpson quadrature with a recursion-depth cap.
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f(r) J0(kappa r)` over `[0, infinity)` by summing between
/// consecutive Bessel half-cycles and accelerating the alternating tail with
/// repeated averaging (Longman's method). `f` must be smooth, absolutely
/// integrable, and eventually monotone. Returns an error when the
/// accelerated tail fails to settle below `abs_tol`.
pub fn bessel_j0_integral(
    f: impl Fn(f64) -> f64,
    kappa: f64,
    abs_tol: f64,
) -> Result<f64> {
    assert!(kappa > 0.0);
    let g = |r: f64| f(r) * libm::j0(kappa * r);
    // McMahon approximation to the m-th zero of J0; exact zeros are not
    // required, any breakpoints near them keep the segment sums alternating.
    let zero = |m: u64| {
        let beta = (m as f64 - 0.25) * std::f64::consts::PI;
        (beta + 1.0 / (8.0 * beta)) / kappa
    };
    // Head segment up to the first zero: f may vary on a much shorter scale
    // than 1/kappa, so integrate adaptively.
    let r1 = zero(1);
    let mut total = adaptive_simpson(&g, 0.0, r1, 0.1 * abs_tol, 48);
    // Alternating tail accelerated by the repeated-averaging triangle:
    // column[0] holds the raw partial sum, column[j] the j-fold average;
    // the deepest entry is the accelerated estimate.
    const MAX_TERMS: usize = 80;
    let mut column: Vec<f64> = Vec::new();
    let mut partial = 0.0;
    let mut prev_estimate = f64::NAN;
    for m in 1..=MAX_TERMS as u64 {
        let term = adaptive_simpson(&g, zero(m), zero(m + 1), 0.01 * abs_tol, 32);
        partial += term;
        let mut fresh = Vec::with_capacity(column.len() + 1);
        fresh.push(partial);
        for j in 0..column.len() {
            let prev = fresh[j];
            fresh.push(0.5 * (prev + column[j]));
        }
        column = fresh;
        let estimate = *column.last().unwrap();
        if m >= 6 && (estimate - prev_estimate).abs() < abs_tol {
            return Ok(total + estimate);
        }
        prev_estimate = estimate;
    }
    total += prev_estimate;
    Err(Error::Numerical(format!(
        "oscillatory tail did not converge below {abs_tol:.3e} in {MAX_TERMS} half-cycles (partial value {total:.6e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        // 5-point rule is exact through degree 9.
        let v = gl_integrate(-1.0, 1.0, 5, |x| x.powi(8));
        assert_relative_eq!(v, 2.0 / 9.0, max_relative = 1e-14);
        let v = gl_integrate(0.0, 2.0, 8, |x| x.powi(3) - 4.0 * x + 1.0);
        assert_relative_eq!(v, 4.0 - 8.0 + 2.0, max_relative = 1e-13);
    }

    #[test]
    fn sphere_rule_weights_sum_to_4pi() {
        let rule = SphereRule::new(64, 128);
        let total: f64 = rule.weights.iter().sum();
        assert_relative_eq!(total, 4.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn sphere_rule_integrates_harmonics() {
        let rule = SphereRule::new(16, 32);
        let axis = Vec3::new(0.0, 0.0, 1.0);
        // cos^2 over the sphere = 4 pi / 3.
        let v = rule.integrate(axis, |d| d.z * d.z);
        assert_relative_eq!(v, 4.0 * PI / 3.0, max_relative = 1e-12);
        // Odd harmonics vanish.
        let v = rule.integrate(axis, |d| d.z * d.x);
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn adaptive_simpson_handles_scale_separation() {
        // Narrow gaussian inside a wide interval.
        let f = |x: f64| (-0.5 * (x / 0.01_f64).powi(2)).exp();
        let v = adaptive_simpson(&f, -50.0, 50.0, 1e-12, 50);
        assert_relative_eq!(v, 0.01 * (2.0 * PI).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn j0_weighted_integral_matches_known_transform() {
        // int_0^inf e^{-a r} J0(k r) dr = 1 / sqrt(a^2 + k^2).
        for (a, k) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.2)] {
            let v = bessel_j0_integral(|r| (-a * r).exp(), k, 1e-12).unwrap();
            assert_relative_eq!(v, 1.0 / (a * a + k * k).sqrt(), max_relative = 1e-9);
        }
    }

    #[test]
    fn j0_weighted_integral_algebraic_decay() {
        // int_0^inf r/(r^2+a^2)^{3/2} J0(k r) dr = e^{-a k} / a.
        let (a, k) = (2.0, 1.5);
        let v = bessel_j0_integral(|r| r / (r * r + a * a).powf(1.5), k, 1e-12).unwrap();
        assert_relative_eq!(v, (-a * k).exp() / a, max_relative = 1e-8);
    }
}
