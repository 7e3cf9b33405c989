//! Diffusion approximation for the backscattering cone from a half space:
//! transport parameters, the Dirichlet Green's function of the Laplacian,
//! and the cone profile both in closed form and by direct quadrature.

use crate::error::{Error, Result};
use crate::kernel::{total_rate, transport_rate};
use crate::medium::Medium;
use crate::quad::{adaptive_simpson, bessel_j0_integral};
use crate::vec3::Vec3;

/// Transport-level description of one shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    /// Diffusion coefficient |grad omega|^2 / (3 nu_tr).
    pub d: f64,
    /// Scattering mean free path |grad omega| / nu.
    pub mean_free_path: f64,
    /// Transport mean free path |grad omega| / nu_tr.
    pub transport_mean_free_path: f64,
    pub nu: f64,
    pub nu_transport: f64,
    pub speed: f64,
}

pub fn diffusion_params(medium: &Medium, k: Vec3) -> Result<DiffusionParams> {
    let nu = total_rate(medium, k)?;
    let nu_transport = transport_rate(medium, k)?;
    if nu <= 0.0 || nu_transport <= 0.0 {
        return Err(Error::NoScattering);
    }
    let speed = medium.dispersion.group_speed(k);
    Ok(DiffusionParams {
        d: speed * speed / (3.0 * nu_transport),
        mean_free_path: speed / nu,
        transport_mean_free_path: speed / nu_transport,
        nu,
        nu_transport,
        speed,
    })
}

/// Green's function of -Laplace on the half space z > 0 with Dirichlet
/// boundary at z = 0, by the image charge:
/// (4 pi |r - r'|)^{-1} - (4 pi |r - r'_mirror|)^{-1}.
pub fn dirichlet_green(r: Vec3, rp: Vec3) -> Result<f64> {
    if !(r.z > 0.0 && rp.z > 0.0) {
        return Err(Error::InvalidInput(format!(
            "both points must lie in the half space z > 0, got z = {}, z' = {}",
            r.z, rp.z
        )));
    }
    let direct = (r - rp).norm();
    if direct == 0.0 {
        return Err(Error::InvalidInput("Green's function diverges at coincident points".into()));
    }
    let mirror = (r - Vec3::new(rp.x, rp.y, -rp.z)).norm();
    let c = 0.25 / std::f64::consts::PI;
    Ok(c / direct - c / mirror)
}

/// The dimensionless cone bracket 1 + (1 - e^{-x}) / x at x = 2 ell kappa:
/// 2 at the top of the cone, 1 far outside. A short series keeps the
/// removable singularity at x = 0 accurate to machine precision.
pub fn cone_bracket(x: f64) -> f64 {
    if x < 1e-4 {
        2.0 - x * (0.5 - x / 6.0)
    } else {
        // exp_m1 avoids the 1 - e^{-x} cancellation for moderate x.
        1.0 - (-x).exp_m1() / x
    }
}

/// Closed-form cone profile (nu^2 / D) * ell * bracket(2 ell kappa), from
/// the half-space diffusion propagator with both endpoints one mean free
/// path inside the boundary.
pub fn cone_closed_form(params: &DiffusionParams, kappa_abs: f64) -> f64 {
    let ell = params.mean_free_path;
    (params.nu * params.nu / params.d) * ell * cone_bracket(2.0 * ell * kappa_abs)
}

/// The same profile by direct quadrature of the boundary form
/// (nu^2 / D) int_0^inf dr (1/2)(1 - r / sqrt(r^2 + 4 ell^2))
///                          (1 + J_0(kappa r)).
/// The incoherent "1" part is mapped to [0, 1) and integrated adaptively;
/// the oscillatory J_0 part goes through the zero-partitioned Bessel
/// quadrature. Nothing here reuses the closed form.
pub fn cone_quadrature(params: &DiffusionParams, kappa_abs: f64) -> Result<f64> {
    if !(kappa_abs >= 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be nonnegative, got {kappa_abs}")));
    }
    let ell = params.mean_free_path;
    let pref = params.nu * params.nu / params.d;
    let f = move |r: f64| 0.5 * (1.0 - r / (r * r + 4.0 * ell * ell).sqrt());

    // Substitute r = 2 ell u / (1 - u): the transformed integrand is bounded
    // with limit ell / 2 at u -> 1.
    let incoherent = adaptive_simpson(
        &|u: f64| {
            if u >= 1.0 {
                return 0.5 * ell;
            }
            let r = 2.0 * ell * u / (1.0 - u);
            f(r) * 2.0 * ell / ((1.0 - u) * (1.0 - u))
        },
        0.0,
        1.0,
        1e-10 * ell,
        48,
    );

    let coherent = if kappa_abs == 0.0 {
        incoherent
    } else {
        bessel_j0_integral(&f, kappa_abs, 1e-9 * ell)?
    };
    Ok(pref * (incoherent + coherent))
}

/// Half width at half maximum of the cone over its far background, in
/// units of kappa: the solution of bracket(2 ell x) = 3/2, which scales as
/// 1 / ell. Solved by bisection on the monotone bracket.
pub fn cone_half_width(params: &DiffusionParams) -> f64 {
    let ell = params.mean_free_path;
    let target = 1.5;
    let (mut lo, mut hi) = (0.0, 1.0 / ell);
    while cone_bracket(2.0 * ell * hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cone_bracket(2.0 * ell * mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{Covariance, Dispersion, Model, ShapeFunction};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params_with_ell(ell: f64) -> DiffusionParams {
        // Unit speed, isotropic scattering: nu = nu_tr = 1 / ell.
        let nu = 1.0 / ell;
        DiffusionParams {
            d: 1.0 / (3.0 * nu),
            mean_free_path: ell,
            transport_mean_free_path: ell,
            nu,
            nu_transport: nu,
            speed: 1.0,
        }
    }

    #[test]
    fn params_from_isotropic_medium() {
        let m = Medium::new(
            ShapeFunction::Slab { thickness: 10.0, half_width: 20.0 },
            Covariance::Gaussian { amplitude: 1.0, scale: 1e9 },
            Dispersion::Quadratic,
            Model::Schroedinger,
        )
        .unwrap();
        let k = Vec3::new(0.0, 0.0, 1.0);
        let p = diffusion_params(&m, k).unwrap();
        assert_relative_eq!(p.nu_transport, p.nu, max_relative = 1e-10);
        assert_relative_eq!(p.mean_free_path, p.transport_mean_free_path, max_relative = 1e-10);
        assert_relative_eq!(p.d, 1.0 / (3.0 * p.nu), max_relative = 1e-12);
        assert_relative_eq!(p.speed, 1.0);
    }

    #[test]
    fn no_scattering_is_an_error() {
        let m = Medium::new(
            ShapeFunction::Slab { thickness: 10.0, half_width: 20.0 },
            Covariance::Gaussian { amplitude: 0.0, scale: 1.0 },
            Dispersion::Quadratic,
            Model::Schroedinger,
        )
        .unwrap();
        assert!(diffusion_params(&m, Vec3::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn green_function_example() {
        // r = (0,0,1), r' = (0,0,2): direct distance 1, mirror distance 3.
        let g = dirichlet_green(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 2.0)).unwrap();
        let expect = (1.0 - 1.0 / 3.0) / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(g, expect, max_relative = 1e-14);

        // Off-axis pair with mirror distance sqrt(5).
        let g2 = dirichlet_green(Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let expect2 = (1.0 - 1.0 / 5.0f64.sqrt()) / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(g2, expect2, max_relative = 1e-14);
        assert_relative_eq!(expect2, 0.0439899, max_relative = 1e-4);
    }

    #[test]
    fn green_function_symmetry_positivity_and_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let r = Vec3::new(
                4.0 * rng.gen::<f64>() - 2.0,
                4.0 * rng.gen::<f64>() - 2.0,
                3.0 * rng.gen::<f64>() + 1e-3,
            );
            let rp = Vec3::new(
                4.0 * rng.gen::<f64>() - 2.0,
                4.0 * rng.gen::<f64>() - 2.0,
                3.0 * rng.gen::<f64>() + 1e-3,
            );
            if (r - rp).norm() < 1e-6 {
                continue;
            }
            let g = dirichlet_green(r, rp).unwrap();
            let gt = dirichlet_green(rp, r).unwrap();
            assert_relative_eq!(g, gt, max_relative = 1e-12, epsilon = 1e-300);
            assert!(g > 0.0, "Green's function must be positive inside, got {g}");
            // Vanishes as the source approaches the boundary.
            let near = dirichlet_green(r, Vec3::new(rp.x, rp.y, 1e-9)).unwrap();
            assert!(near.abs() < 1e-8 / (r - Vec3::new(rp.x, rp.y, 0.0)).norm().powi(2).max(1e-2));
        }
        assert!(dirichlet_green(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0)).is_err());
        assert!(dirichlet_green(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn bracket_limits_and_monotonicity() {
        assert_eq!(cone_bracket(0.0), 2.0);
        let mut prev = cone_bracket(0.0);
        for i in 1..=1000 {
            let x = 0.05 * i as f64;
            let b = cone_bracket(x);
            assert!(b < prev, "bracket must decrease, failed at x = {x}");
            assert!(b > 1.0);
            prev = b;
        }
        // Series / direct expression agree across the switch.
        for x in [1e-6, 1e-5, 5e-5, 9.9e-5, 1.01e-4] {
            let series = 2.0 - x * (0.5 - x / 6.0);
            let direct = 1.0 - (-x as f64).exp_m1() / x;
            assert_relative_eq!(series, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_peak_value() {
        for ell in [0.5, 1.0, 2.0] {
            let p = params_with_ell(ell);
            // bracket(0) = 2, so the top of the cone is 2 (nu^2 / D) ell.
            assert_relative_eq!(
                cone_closed_form(&p, 0.0),
                2.0 * p.nu * p.nu / p.d * ell,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn quadrature_matches_closed_form_on_grid() {
        // ell |kappa| from 0 to 10 including near-zero values, three mean
        // free paths; agreement to 1e-6 relative.
        let kappa_ell = [0.0, 1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0];
        for ell in [0.5, 1.0, 2.0] {
            let p = params_with_ell(ell);
            for &ke in &kappa_ell {
                let kappa = ke / ell;
                let exact = cone_closed_form(&p, kappa);
                let quad = cone_quadrature(&p, kappa).unwrap();
                assert_relative_eq!(quad, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn quadrature_grid_is_fast() {
        // The whole 21-point comparison grid must run well under a second.
        let start = std::time::Instant::now();
        for ell in [0.5, 1.0, 2.0] {
            let p = params_with_ell(ell);
            for i in 0..7 {
                let kappa = (10.0 * i as f64 / 6.0) / ell;
                cone_quadrature(&p, kappa).unwrap();
            }
        }
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "grid took {elapsed:?}");
    }

    #[test]
    fn half_width_scales_inversely_with_mean_free_path() {
        let w1 = cone_half_width(&params_with_ell(1.0));
        let w2 = cone_half_width(&params_with_ell(2.0));
        assert_relative_eq!(w1 / w2, 2.0, max_relative = 1e-6);
        // And the half-maximum condition really holds.
        let p = params_with_ell(1.0);
        let top = cone_closed_form(&p, 0.0);
        let far = p.nu * p.nu / p.d * p.mean_free_path; // bracket -> 1
        let at_half = cone_closed_form(&p, w1);
        assert_relative_eq!(at_half, 0.5 * (top + far), max_relative = 1e-10);
    }
}
