//! Collision machinery on an energy shell: total cross section, transport
//! rate, and outgoing-momentum sampling.
//!
//! The energy delta is resolved analytically into a solid-angle integral with
//! the shell Jacobian r^2 / |d omega / dr|; no numerical delta smearing
//! appears anywhere. The angle cosine is sampled by inverse lookup on a
//! tabulated CDF.

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::quad::SphereRule;
use crate::vec3::Vec3;
use rand::Rng;

/// (2 pi)^{-3/2}, the spectral normalization in front of theta_hat.
pub const INV_TWO_PI_CUBED_SQRT: f64 = 0.06349363593424097;

/// Default spherical product rule: Gauss-Legendre polar x trapezoid azimuth.
pub const POLAR_ORDER: usize = 64;
pub const AZIMUTH_ORDER: usize = 128;

/// Number of nodes in the tabulated angle-cosine CDF.
pub const N_TAB: usize = 2048;

/// Relative tolerance for "the momentum sits on this shell".
pub const SHELL_TOL: f64 = 1e-9;

/// The measure 2 pi r^2 / |d omega / dr| carried by the on-shell resolution
/// of 2 pi delta(omega - omega'). This single constant ties together the
/// cross-section quadrature, the analog binning normalization, and the
/// next-event weights, so the estimators are consistent by construction.
pub fn shell_measure(medium: &Medium, energy: f64) -> f64 {
    2.0 * std::f64::consts::PI * medium.dispersion.shell_jacobian(energy)
}

fn rate_integral(medium: &Medium, p: Vec3, rule: &SphereRule, transport_weight: bool) -> Result<f64> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::DegenerateShell);
    }
    let energy = medium.dispersion.omega(p);
    let axis = p / r;
    let sphere = rule.integrate(axis, |omega_out| {
        let w = if transport_weight { 1.0 - axis.dot(omega_out) } else { 1.0 };
        w * medium.covariance.eval_abs((p - omega_out * r).norm())
    });
    Ok(INV_TWO_PI_CUBED_SQRT * shell_measure(medium, energy) * medium.model_weight(energy) * sphere)
}

/// Total cross section nu(p): the collision rate per unit rho.
pub fn total_rate(medium: &Medium, p: Vec3) -> Result<f64> {
    total_rate_with_order(medium, p, POLAR_ORDER, AZIMUTH_ORDER)
}

pub fn total_rate_with_order(medium: &Medium, p: Vec3, polar: usize, azimuth: usize) -> Result<f64> {
    rate_integral(medium, p, &SphereRule::new(polar, azimuth), false)
}

/// Transport rate: the same integral weighted by (1 - cos theta). Controls
/// momentum relaxation and the diffusion coefficient.
pub fn transport_rate(medium: &Medium, p: Vec3) -> Result<f64> {
    rate_integral(medium, p, &SphereRule::new(POLAR_ORDER, AZIMUTH_ORDER), true)
}

/// Precomputed collision kernel for one energy shell. Immutable after
/// tabulation and shareable across workers.
#[derive(Debug, Clone)]
pub struct ShellKernel {
    pub medium: Medium,
    pub energy: f64,
    pub shell_radius: f64,
    /// Total rate nu on this shell (includes the wave omega^2 weight).
    pub nu: f64,
    /// (1 - cos theta)-weighted rate.
    pub nu_transport: f64,
    /// Nondecreasing CDF of the scattering-angle cosine on a uniform mu grid
    /// of N_TAB + 1 nodes over [-1, 1].
    cdf: Vec<f64>,
}

impl ShellKernel {
    pub fn new(medium: &Medium, energy: f64) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::InvalidInput(format!("shell energy must be positive, got {energy}")));
        }
        let r = medium.dispersion.shell_radius(energy);
        let p = Vec3::new(0.0, 0.0, r);
        let nu = total_rate(medium, p)?;
        let nu_transport = transport_rate(medium, p)?;
        if nu <= 0.0 {
            return Err(Error::NoScattering);
        }

        // Unnormalized density of mu = cos theta: theta_hat at the momentum
        // transfer |p - p'| = r sqrt(2 - 2 mu). Azimuth and all shell
        // constants drop out of the normalization.
        let density = |mu: f64| {
            medium
                .covariance
                .eval_abs(r * (2.0 - 2.0 * mu).max(0.0).sqrt())
        };
        let mut cdf = Vec::with_capacity(N_TAB + 1);
        cdf.push(0.0);
        let dmu = 2.0 / N_TAB as f64;
        let mut acc = 0.0;
        let mut prev = density(-1.0);
        for i in 1..=N_TAB {
            let mu = -1.0 + dmu * i as f64;
            let cur = density(mu);
            acc += 0.5 * dmu * (prev + cur);
            cdf.push(acc);
            prev = cur;
        }
        let total = acc;
        if !(total > 0.0) {
            return Err(Error::NoScattering);
        }
        for v in &mut cdf {
            *v /= total;
        }
        // Guard against rounding at the top node.
        *cdf.last_mut().unwrap() = 1.0;

        Ok(ShellKernel { medium: medium.clone(), energy, shell_radius: r, nu, nu_transport, cdf })
    }

    /// Mean free path on this shell: |grad omega| / nu.
    pub fn mean_free_path(&self) -> f64 {
        let p = Vec3::new(0.0, 0.0, self.shell_radius);
        self.medium.dispersion.group_speed(p) / self.nu
    }

    /// theta_hat at the transfer between two on-shell momenta, including the
    /// wave-model weight. This is the unnormalized outgoing-direction density
    /// entering both the sampler and the next-event weights.
    pub fn spectrum(&self, p_in: Vec3, p_out: Vec3) -> f64 {
        self.medium.covariance.eval_abs((p_in - p_out).norm()) * self.medium.model_weight(self.energy)
    }

    fn on_shell(&self, p: Vec3) -> bool {
        let w = self.medium.dispersion.omega(p);
        (w - self.energy).abs() <= SHELL_TOL * self.energy.abs()
    }

    /// Inverse-CDF lookup with linear interpolation.
    fn sample_mu(&self, u: f64) -> f64 {
        let idx = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(N_TAB - 1),
            Err(i) => i.saturating_sub(1).min(N_TAB - 1),
        };
        let (c0, c1) = (self.cdf[idx], self.cdf[idx + 1]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        let dmu = 2.0 / N_TAB as f64;
        (-1.0 + dmu * (idx as f64 + frac)).clamp(-1.0, 1.0)
    }

    /// Draw an outgoing momentum on the shell: angle cosine by inverse-CDF
    /// lookup, azimuth uniform. The result is renormalized to the shell
    /// radius exactly.
    pub fn sample_outgoing(&self, p: Vec3, rng: &mut impl Rng) -> Result<Vec3> {
        if !self.on_shell(p) {
            return Err(Error::InvalidInput(format!(
                "momentum off shell: omega(p) = {}, shell energy = {}",
                self.medium.dispersion.omega(p),
                self.energy
            )));
        }
        let mu = self.sample_mu(rng.gen::<f64>());
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let axis = p.normalized();
        let (e1, e2) = axis.orthonormal_frame();
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        let dir = axis * mu + e1 * (s * phi.cos()) + e2 * (s * phi.sin());
        Ok(dir.normalized() * self.shell_radius)
    }
}
