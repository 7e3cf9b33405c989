//! Shared fixtures for the criterion benchmarks.

use cbs_core::kernel::INV_TWO_PI_CUBED_SQRT;
use cbs_core::{Covariance, Dispersion, Medium, Model, ShapeFunction, Vec3};

/// Unit ball with a flat-proxy spectrum scaled to total rate `nu` on the
/// |p| = 1 shell.
pub fn ball_medium(nu: f64) -> Medium {
    let base = 8.0 * std::f64::consts::PI.powi(2) * INV_TWO_PI_CUBED_SQRT;
    Medium::new(
        ShapeFunction::Ball { center: Vec3::ZERO, radius: 1.0 },
        Covariance::Gaussian { amplitude: nu / base, scale: 1e9 },
        Dispersion::Quadratic,
        Model::Schroedinger,
    )
    .unwrap()
}

/// Thick slab with isotropic scattering at rate `nu`.
pub fn slab_medium(nu: f64, thickness: f64) -> Medium {
    let base = 8.0 * std::f64::consts::PI.powi(2) * INV_TWO_PI_CUBED_SQRT;
    Medium::new(
        ShapeFunction::Slab { thickness, half_width: 25.0 },
        Covariance::Gaussian { amplitude: nu / base, scale: 1e9 },
        Dispersion::Quadratic,
        Model::Schroedinger,
    )
    .unwrap()
}
