//! The disorder model: spatial profile `rho`, covariance spectrum
//! `theta_hat`, dispersion relation, and exact ray integrals of `rho` used by
//! free-flight sampling and the attenuation factors.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Isotropic dispersion relation. Only the magnitude of the momentum enters,
/// which keeps every energy shell a sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispersion {
    /// omega(p) = |p|^2 / 2 (massive particle).
    Quadratic,
    /// omega(p) = |p| (wave).
    Linear,
}

impl Dispersion {
    pub fn omega(self, p: Vec3) -> f64 {
        match self {
            Dispersion::Quadratic => 0.5 * p.norm_sq(),
            Dispersion::Linear => p.norm(),
        }
    }

    /// Group velocity grad omega(p).
    pub fn group_velocity(self, p: Vec3) -> Vec3 {
        match self {
            Dispersion::Quadratic => p,
            Dispersion::Linear => p.normalized(),
        }
    }

    pub fn group_speed(self, p: Vec3) -> f64 {
        match self {
            Dispersion::Quadratic => p.norm(),
            Dispersion::Linear => 1.0,
        }
    }

    /// Momentum magnitude on the shell of energy `e`.
    pub fn shell_radius(self, e: f64) -> f64 {
        match self {
            Dispersion::Quadratic => (2.0 * e).sqrt(),
            Dispersion::Linear => e,
        }
    }

    /// Weight r^2 / |d omega / dr| that converts the energy delta into a
    /// solid-angle integral over the shell.
    pub fn shell_jacobian(self, e: f64) -> f64 {
        match self {
            Dispersion::Quadratic => (2.0 * e).sqrt(),
            Dispersion::Linear => e * e,
        }
    }
}

/// Covariance spectrum theta_hat(k): even, nonnegative, rapidly decaying.
/// `amplitude` is the peak value theta_0, `scale` the spectral width s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Covariance {
    Gaussian { amplitude: f64, scale: f64 },
    /// Squared Lorentzian, the spectrum of an exponentially decaying
    /// real-space correlation.
    Exponential { amplitude: f64, scale: f64 },
}

impl Covariance {
    pub fn eval(&self, k: Vec3) -> Result<f64> {
        if !k.is_finite() {
            return Err(Error::InvalidInput("non-finite momentum difference".into()));
        }
        Ok(self.eval_abs(k.norm()))
    }

    /// theta_hat as a function of |k| (both families are isotropic).
    pub fn eval_abs(&self, k_abs: f64) -> f64 {
        match *self {
            Covariance::Gaussian { amplitude, scale } => {
                amplitude * (-0.5 * (k_abs / scale).powi(2)).exp()
            }
            Covariance::Exponential { amplitude, scale } => {
                let u = k_abs / scale;
                amplitude / (1.0 + u * u).powi(2)
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Covariance::Gaussian { amplitude, .. } => amplitude,
            Covariance::Exponential { amplitude, .. } => amplitude,
        }
    }
}

/// Spatial profile of the disorder strength. The built-in geometries are
/// sharp: rho is the indicator of a convex region, so every ray meets the
/// support in a single interval and the ray integral is closed-form chord
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeFunction {
    Ball { center: Vec3, radius: f64 },
    Box { corner: Vec3, extents: Vec3 },
    /// Slab filling 0 <= z <= thickness, |x| <= half_width, |y| <= half_width.
    Slab { thickness: f64, half_width: f64 },
}

impl ShapeFunction {
    pub fn rho_max(&self) -> f64 {
        1.0
    }

    fn as_aabb(&self) -> Option<(Vec3, Vec3)> {
        match *self {
            ShapeFunction::Ball { .. } => None,
            ShapeFunction::Box { corner, extents } => Some((corner, corner + extents)),
            ShapeFunction::Slab { thickness, half_width } => Some((
                Vec3::new(-half_width, -half_width, 0.0),
                Vec3::new(half_width, half_width, thickness),
            )),
        }
    }

    pub fn rho_eval(&self, q: Vec3) -> Result<f64> {
        if !q.is_finite() {
            return Err(Error::InvalidInput("non-finite position".into()));
        }
        let inside = match *self {
            ShapeFunction::Ball { center, radius } => (q - center).norm_sq() <= radius * radius,
            _ => {
                let (lo, hi) = self.as_aabb().unwrap();
                q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y && q.z >= lo.z && q.z <= hi.z
            }
        };
        Ok(if inside { 1.0 } else { 0.0 })
    }

    /// Parameter interval [t_in, t_out] in which the ray `q + v t` lies in the
    /// support, or `None` if it misses. The support is convex so the
    /// intersection is a single interval.
    pub fn ray_interval(&self, q: Vec3, v: Vec3) -> Option<(f64, f64)> {
        match *self {
            ShapeFunction::Ball { center, radius } => {
                let oc = q - center;
                let a = v.norm_sq();
                let b = oc.dot(v);
                let c = oc.norm_sq() - radius * radius;
                let disc = b * b - a * c;
                if disc <= 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                Some(((-b - sq) / a, (-b + sq) / a))
            }
            _ => {
                let (lo, hi) = self.as_aabb().unwrap();
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for (qa, va, la, ha) in [
                    (q.x, v.x, lo.x, hi.x),
                    (q.y, v.y, lo.y, hi.y),
                    (q.z, v.z, lo.z, hi.z),
                ] {
                    if va == 0.0 {
                        if qa < la || qa > ha {
                            return None;
                        }
                    } else {
                        let (a, b) = ((la - qa) / va, (ha - qa) / va);
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                }
                if t0 < t1 {
                    Some((t0, t1))
                } else {
                    None
                }
            }
        }
    }

    /// Exact integral of rho along the ray: int_{t0}^{t1} rho(q + v t) dt.
    /// Either bound may be infinite; the result is finite because the support
    /// is bounded.
    pub fn ray_integral(&self, q: Vec3, v: Vec3, t0: f64, t1: f64) -> Result<f64> {
        if v.norm_sq() == 0.0 {
            return Err(Error::InvalidInput("zero direction vector".into()));
        }
        debug_assert!(t0 <= t1);
        match self.ray_interval(q, v) {
            None => Ok(0.0),
            Some((tin, tout)) => Ok((t1.min(tout) - t0.max(tin)).max(0.0)),
        }
    }

    /// Center and radius of a bounding sphere.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        match *self {
            ShapeFunction::Ball { center, radius } => (center, radius),
            _ => {
                let (lo, hi) = self.as_aabb().unwrap();
                let center = (lo + hi) * 0.5;
                ((center), (hi - lo).norm() * 0.5)
            }
        }
    }
}

/// Which transport model the collision rate follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Schroedinger,
    /// Collision rate weighted by omega(p)^2; requires linear dispersion.
    Wave,
}

/// The full problem definition. Immutable after construction and shareable
/// across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub shape: ShapeFunction,
    pub covariance: Covariance,
    pub dispersion: Dispersion,
    pub model: Model,
}

impl Medium {
    pub fn new(
        shape: ShapeFunction,
        covariance: Covariance,
        dispersion: Dispersion,
        model: Model,
    ) -> Result<Self> {
        if model == Model::Wave && dispersion != Dispersion::Linear {
            return Err(Error::Configuration(
                "wave model requires the linear dispersion".into(),
            ));
        }
        Ok(Medium { shape, covariance, dispersion, model })
    }

    /// The omega^2 weight the wave model puts on the collision rate;
    /// identically 1 for the Schroedinger model.
    pub fn model_weight(&self, energy: f64) -> f64 {
        match self.model {
            Model::Schroedinger => 1.0,
            Model::Wave => energy * energy,
        }
    }
}
