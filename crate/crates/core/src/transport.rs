//! The jump process: plane-flux source, free flight through the
//! inhomogeneous medium, collisions, escape.

use crate::error::{Error, Result};
use crate::kernel::ShellKernel;
use crate::vec3::Vec3;
use rand::Rng;

/// Default collision cap per path. Truncated paths are flagged and counted,
/// never silently dropped.
pub const DEFAULT_COLLISION_CAP: usize = 10_000;

/// Plane source imposing a uniform flux at momentum `k` through a plane
/// orthogonal to `k` outside the support.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub k: Vec3,
    /// Point on the source plane.
    pub plane_point: Vec3,
    /// Lateral sampling window radius; covers the geometric shadow of the
    /// support plus a margin.
    pub window_radius: f64,
    /// |k_hat . grad omega(k)|, the flux weight per unit area.
    pub flux_per_area: f64,
    frame: (Vec3, Vec3),
}

impl SourceSpec {
    /// Place the plane `plane_margin` beyond the bounding sphere against the
    /// beam direction, with the window covering the shadow radius plus
    /// `window_margin_mfp` mean free paths.
    pub fn new(
        kern: &ShellKernel,
        k: Vec3,
        plane_margin: f64,
        window_margin_mfp: f64,
    ) -> Result<Self> {
        if !k.is_finite() || k.norm() == 0.0 {
            return Err(Error::Configuration("source momentum must be finite and nonzero".into()));
        }
        if plane_margin <= 0.0 {
            return Err(Error::Configuration(
                "source plane must sit strictly outside the bounding region".into(),
            ));
        }
        let k_hat = k.normalized();
        let (center, bound_radius) = kern.medium.shape.bounding_sphere();
        let plane_point = center - k_hat * (bound_radius + plane_margin);
        let window_radius = bound_radius + window_margin_mfp * kern.mean_free_path();
        let flux_per_area = k_hat.dot(kern.medium.dispersion.group_velocity(k)).abs();
        Ok(SourceSpec {
            k,
            plane_point,
            window_radius,
            flux_per_area,
            frame: k_hat.orthonormal_frame(),
        })
    }

    /// Total source weight carried by one path when `n` paths are run:
    /// window area times flux per area, divided by `n` at tally time.
    pub fn weight(&self) -> f64 {
        std::f64::consts::PI * self.window_radius * self.window_radius * self.flux_per_area
    }

    /// Uniform position on the window disk, momentum exactly `k`.
    pub fn sample(&self, rng: &mut impl Rng) -> PhaseSpaceState {
        let r = self.window_radius * rng.gen::<f64>().sqrt();
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let q = self.plane_point + self.frame.0 * (r * phi.cos()) + self.frame.1 * (r * phi.sin());
        PhaseSpaceState { q, p: self.k, t: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceState {
    pub q: Vec3,
    pub p: Vec3,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    /// 1-based collision index along the path.
    pub index: usize,
    pub position: Vec3,
    pub p_in: Vec3,
    pub p_out: Vec3,
    pub time: f64,
}

/// Ordered collision record of one trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    pub source_point: Vec3,
    pub events: Vec<CollisionEvent>,
    pub final_state: PhaseSpaceState,
    pub escaped: bool,
    /// nu times the remaining chord at escape; exp(-escape_optical_depth) is
    /// the survival probability that was realized.
    pub escape_optical_depth: f64,
}

impl Path {
    fn reset(&mut self, source_point: Vec3) {
        self.source_point = source_point;
        self.events.clear();
        self.escaped = false;
        self.escape_optical_depth = 0.0;
    }
}

impl Default for PhaseSpaceState {
    fn default() -> Self {
        PhaseSpaceState { q: Vec3::ZERO, p: Vec3::new(0.0, 0.0, 1.0), t: 0.0 }
    }
}

pub enum FlightOutcome {
    Collision { tau: f64, position: Vec3 },
    Escape { optical_depth: f64 },
}

/// First event of the inhomogeneous Poisson process with rate
/// nu rho(q + grad omega(p) t), by exact inversion of the chord integral.
/// Escape is a normal outcome.
pub fn free_flight(
    state: &PhaseSpaceState,
    kern: &ShellKernel,
    rng: &mut impl Rng,
) -> FlightOutcome {
    let v = kern.medium.dispersion.group_velocity(state.p);
    let (entry, chord) = match kern.medium.shape.ray_interval(state.q, v) {
        Some((t0, t1)) if t1 > 0.0 => (t0.max(0.0), t1 - t0.max(0.0)),
        _ => return FlightOutcome::Escape { optical_depth: 0.0 },
    };
    let depth_ahead = kern.nu * chord;
    let xi = -(-rng.gen::<f64>()).ln_1p(); // Exp(1)
    if xi >= depth_ahead {
        FlightOutcome::Escape { optical_depth: depth_ahead }
    } else {
        let tau = entry + xi / kern.nu;
        FlightOutcome::Collision { tau, position: state.q + v * tau }
    }
}

/// Rejection (thinning) sampler against the majorant nu rho_max. Exact for
/// any bounded rho; used as an independent cross-check of the chord
/// inversion and as the route for future smooth profiles.
pub fn free_flight_thinning(
    state: &PhaseSpaceState,
    kern: &ShellKernel,
    rng: &mut impl Rng,
) -> FlightOutcome {
    let shape = &kern.medium.shape;
    let v = kern.medium.dispersion.group_velocity(state.p);
    let exit = match shape.ray_interval(state.q, v) {
        Some((_, t1)) if t1 > 0.0 => t1,
        _ => return FlightOutcome::Escape { optical_depth: 0.0 },
    };
    let majorant = kern.nu * shape.rho_max();
    let mut t = 0.0;
    loop {
        t += -(-rng.gen::<f64>()).ln_1p() / majorant;
        if t > exit {
            let depth = kern.nu * shape.ray_integral(state.q, v, 0.0, f64::INFINITY).unwrap();
            return FlightOutcome::Escape { optical_depth: depth };
        }
        let rho = shape.rho_eval(state.q + v * t).unwrap();
        if rng.gen::<f64>() < rho / shape.rho_max() {
            return FlightOutcome::Collision { tau: t, position: state.q + v * t };
        }
    }
}

/// Observer invoked during path simulation. Scorers hold per-worker state
/// and are merged after the run; they must never share mutable state.
pub trait Scorer {
    fn begin_path(&mut self) {}
    fn collision(&mut self, _event: &CollisionEvent) {}
    fn end_path(&mut self, _path: &Path) {}
}

impl Scorer for () {}

/// Simulation context for one shell and source.
pub struct Transport<'a> {
    pub kern: &'a ShellKernel,
    pub source: &'a SourceSpec,
    pub collision_cap: usize,
}

impl<'a> Transport<'a> {
    pub fn new(kern: &'a ShellKernel, source: &'a SourceSpec) -> Self {
        Transport { kern, source, collision_cap: DEFAULT_COLLISION_CAP }
    }

    /// Alternate free flight and shell scattering until escape or the
    /// collision cap. Scorers see every collision and the finished path.
    pub fn simulate_path(
        &self,
        rng: &mut impl Rng,
        path: &mut Path,
        scorers: &mut [&mut dyn Scorer],
    ) {
        let mut state = self.source.sample(rng);
        path.reset(state.q);
        for s in scorers.iter_mut() {
            s.begin_path();
        }
        for n in 1..=self.collision_cap {
            match free_flight(&state, self.kern, rng) {
                FlightOutcome::Escape { optical_depth } => {
                    path.escaped = true;
                    path.escape_optical_depth = optical_depth;
                    break;
                }
                FlightOutcome::Collision { tau, position } => {
                    let p_out = self
                        .kern
                        .sample_outgoing(state.p, rng)
                        .expect("collision momentum stays on shell by construction");
                    let event = CollisionEvent {
                        index: n,
                        position,
                        p_in: state.p,
                        p_out,
                        time: state.t + tau,
                    };
                    for s in scorers.iter_mut() {
                        s.collision(&event);
                    }
                    path.events.push(event);
                    state = PhaseSpaceState { q: position, p: p_out, t: event.time };
                }
            }
        }
        path.final_state = state;
        for s in scorers.iter_mut() {
            s.end_path(path);
        }
    }
}
