//! Estimators turning simulated paths into the three target quantities: the
//! angular scattering rate (analog binning and next-event estimation), the
//! single-scattering quadrature oracle, and the coherent backscattering
//! peak.
//!
//! Normalization convention: all reported rates carry the overall
//! 2 pi delta(omega - omega') stripped. The shell constants are centralized
//! in `kernel::shell_measure` and `kernel::INV_TWO_PI_CUBED_SQRT`, so the
//! analog, next-event, and quadrature routes are consistent by construction.

use crate::error::{Error, Result};
use crate::kernel::{shell_measure, total_rate, ShellKernel, INV_TWO_PI_CUBED_SQRT, SHELL_TOL};
use crate::medium::{Medium, ShapeFunction};
use crate::quad::{gauss_legendre, SphereRule};
use crate::runner::{run_scored, Merge, RunStats};
use crate::transport::{CollisionEvent, Path, Scorer, Transport};
use crate::vec3::Vec3;
use num_complex::Complex64;

/// Complex-weighted streaming accumulator. Merging adds fields, so it is
/// associative and commutative; the runner fixes the merge order anyway to
/// keep floating-point results bit-stable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TallySet {
    pub sum: Complex64,
    /// Sum of |weight|^2 over contributing paths.
    pub sum_sq: f64,
    /// Number of paths that contributed a nonzero weight.
    pub count: u64,
}

impl TallySet {
    pub fn add(&mut self, w: Complex64) {
        self.sum += w;
        self.sum_sq += w.norm_sqr();
        self.count += 1;
    }

    /// Mean over `n` paths (paths without a contribution count as zero).
    pub fn mean(&self, n: u64) -> Complex64 {
        self.sum / n as f64
    }

    /// Standard error of the mean over `n` paths.
    pub fn stderr(&self, n: u64) -> f64 {
        let nf = n as f64;
        let mean_sq = (self.sum / nf).norm_sqr();
        ((self.sum_sq / nf - mean_sq).max(0.0) / nf).sqrt()
    }
}

impl Merge for TallySet {
    fn merge(&mut self, other: Self) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.count += other.count;
    }
}

/// Equal-area binning of the sphere: uniform bands in the polar cosine
/// (relative to `axis`) times uniform azimuth sectors.
#[derive(Debug, Clone)]
pub struct AngularHistogram {
    pub axis: Vec3,
    frame: (Vec3, Vec3),
    pub n_bands: usize,
    pub n_azimuth: usize,
    pub energy: f64,
    pub bins: Vec<TallySet>,
}

impl AngularHistogram {
    pub fn new(axis: Vec3, n_bands: usize, n_azimuth: usize, energy: f64) -> Self {
        let axis = axis.normalized();
        AngularHistogram {
            axis,
            frame: axis.orthonormal_frame(),
            n_bands,
            n_azimuth,
            energy,
            bins: vec![TallySet::default(); n_bands * n_azimuth],
        }
    }

    /// All bins share the same solid angle.
    pub fn bin_solid_angle(&self) -> f64 {
        4.0 * std::f64::consts::PI / (self.n_bands * self.n_azimuth) as f64
    }

    pub fn bin_index(&self, direction: Vec3) -> usize {
        let d = direction.normalized();
        let mu = d.dot(self.axis).clamp(-1.0, 1.0);
        let band = (((mu + 1.0) * 0.5 * self.n_bands as f64) as usize).min(self.n_bands - 1);
        let phi = d.dot(self.frame.1).atan2(d.dot(self.frame.0));
        let frac = (phi / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);
        let az = ((frac * self.n_azimuth as f64) as usize).min(self.n_azimuth - 1);
        band * self.n_azimuth + az
    }

    /// Center direction of a bin (band-midpoint cosine, sector-midpoint
    /// azimuth).
    pub fn bin_center(&self, index: usize) -> Vec3 {
        let band = index / self.n_azimuth;
        let az = index % self.n_azimuth;
        let mu = -1.0 + 2.0 * (band as f64 + 0.5) / self.n_bands as f64;
        let phi = 2.0 * std::f64::consts::PI * (az as f64 + 0.5) / self.n_azimuth as f64;
        let s = (1.0 - mu * mu).max(0.0).sqrt();
        self.axis * mu + self.frame.0 * (s * phi.cos()) + self.frame.1 * (s * phi.sin())
    }
}

impl Merge for AngularHistogram {
    fn merge(&mut self, other: Self) {
        debug_assert_eq!(self.bins.len(), other.bins.len());
        for (a, b) in self.bins.iter_mut().zip(other.bins) {
            a.merge(b);
        }
    }
}

/// Analog estimate of the scattering rate: escaped paths with at least one
/// collision binned by final direction.
#[derive(Debug, Clone)]
pub struct SigmaHistogram {
    pub hist: AngularHistogram,
    pub n_paths: u64,
    /// Source weight per path times 1/N, folded in at readout.
    source_weight: f64,
    shell_measure: f64,
}

impl SigmaHistogram {
    /// Scattering-rate value and standard error for one bin. Empty bins
    /// report zero with an infinite relative-error flag (stderr = infinity).
    pub fn value(&self, bin: usize) -> (f64, f64) {
        let t = &self.hist.bins[bin];
        if t.count == 0 {
            return (0.0, f64::INFINITY);
        }
        let norm = self.source_weight / (self.hist.bin_solid_angle() * self.shell_measure);
        (t.mean(self.n_paths).re * norm, t.stderr(self.n_paths) * norm)
    }

    pub fn value_toward(&self, direction: Vec3) -> (f64, f64) {
        self.value(self.hist.bin_index(direction))
    }
}

struct AnalogScorer {
    hist: AngularHistogram,
}

impl Scorer for AnalogScorer {
    fn end_path(&mut self, path: &Path) {
        if path.escaped && !path.events.is_empty() {
            let bin = self.hist.bin_index(path.final_state.p);
            self.hist.bins[bin].add(Complex64::new(1.0, 0.0));
        }
    }
}

impl Merge for AnalogScorer {
    fn merge(&mut self, other: Self) {
        self.hist.merge(other.hist);
    }
}

/// Run the analog-binned estimator.
pub fn estimate_sigma_analog(
    transport: &Transport,
    n_bands: usize,
    n_azimuth: usize,
    n_paths: u64,
    seed: u64,
) -> (SigmaHistogram, RunStats) {
    let kern = transport.kern;
    let (scorer, stats) = run_scored(transport, n_paths, seed, || AnalogScorer {
        hist: AngularHistogram::new(transport.source.k, n_bands, n_azimuth, kern.energy),
    });
    (
        SigmaHistogram {
            hist: scorer.hist,
            n_paths,
            source_weight: transport.source.weight(),
            shell_measure: shell_measure(&kern.medium, kern.energy),
        },
        stats,
    )
}

/// The next-event weight scored at a collision at `x` with incoming momentum
/// `p_in` toward the on-shell momentum `k_out`: the collision kernel density
/// toward that direction times the escape attenuation, in
/// delta-stripped scattering-rate units.
fn nee_weight(kern: &ShellKernel, x: Vec3, p_in: Vec3, k_out: Vec3) -> f64 {
    let v_out = kern.medium.dispersion.group_velocity(k_out);
    let chord = kern
        .medium
        .shape
        .ray_integral(x, v_out, 0.0, f64::INFINITY)
        .expect("outgoing group velocity is nonzero on a positive shell");
    INV_TWO_PI_CUBED_SQRT * kern.spectrum(p_in, k_out) * (-kern.nu * chord).exp() / kern.nu
}

/// Next-event estimate of the scattering rate toward a fixed set of
/// outgoing momenta, split into the exactly-one-collision part and the rest.
#[derive(Debug, Clone)]
pub struct SigmaNee {
    pub k_primes: Vec<Vec3>,
    pub n_paths: u64,
    source_weight: f64,
    single: Vec<TallySet>,
    multiple: Vec<TallySet>,
    total: Vec<TallySet>,
}

impl SigmaNee {
    pub fn value(&self, i: usize) -> (f64, f64) {
        self.read(&self.total[i])
    }

    pub fn single_collision(&self, i: usize) -> (f64, f64) {
        self.read(&self.single[i])
    }

    pub fn multiple_collision(&self, i: usize) -> (f64, f64) {
        self.read(&self.multiple[i])
    }

    /// Exact decomposition: total tally sum = single + multiple sums.
    pub fn decomposition_gap(&self, i: usize) -> f64 {
        (self.total[i].sum.re - (self.single[i].sum.re + self.multiple[i].sum.re)).abs()
    }

    fn read(&self, t: &TallySet) -> (f64, f64) {
        let w = self.source_weight;
        (t.mean(self.n_paths).re * w, t.stderr(self.n_paths) * w)
    }
}

struct NeeScorer<'a> {
    kern: &'a ShellKernel,
    k_primes: &'a [Vec3],
    acc_single: Vec<f64>,
    acc_multiple: Vec<f64>,
    single: Vec<TallySet>,
    multiple: Vec<TallySet>,
    total: Vec<TallySet>,
}

impl Scorer for NeeScorer<'_> {
    fn begin_path(&mut self) {
        self.acc_single.iter_mut().for_each(|a| *a = 0.0);
        self.acc_multiple.iter_mut().for_each(|a| *a = 0.0);
    }

    fn collision(&mut self, ev: &CollisionEvent) {
        for (i, &kp) in self.k_primes.iter().enumerate() {
            let w = nee_weight(self.kern, ev.position, ev.p_in, kp);
            if ev.index == 1 {
                self.acc_single[i] += w;
            } else {
                self.acc_multiple[i] += w;
            }
        }
    }

    fn end_path(&mut self, _path: &Path) {
        for i in 0..self.k_primes.len() {
            let (s, m) = (self.acc_single[i], self.acc_multiple[i]);
            if s != 0.0 {
                self.single[i].add(Complex64::new(s, 0.0));
            }
            if m != 0.0 {
                self.multiple[i].add(Complex64::new(m, 0.0));
            }
            if s + m != 0.0 {
                self.total[i].add(Complex64::new(s + m, 0.0));
            }
        }
    }
}

impl Merge for NeeScorer<'_> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.single.iter_mut().zip(other.single) {
            a.merge(b);
        }
        for (a, b) in self.multiple.iter_mut().zip(other.multiple) {
            a.merge(b);
        }
        for (a, b) in self.total.iter_mut().zip(other.total) {
            a.merge(b);
        }
    }
}

fn validate_k_prime(kern: &ShellKernel, k: Vec3, kp: Vec3) -> Result<()> {
    let e = kern.medium.dispersion.omega(kp);
    if (e - kern.energy).abs() > SHELL_TOL * kern.energy {
        return Err(Error::InvalidInput(format!(
            "outgoing momentum off shell: omega = {e}, shell = {}",
            kern.energy
        )));
    }
    if (kp - k).norm() <= 1e-12 * k.norm() {
        return Err(Error::InvalidInput(
            "strict forward scattering k' = k is singular and excluded".into(),
        ));
    }
    Ok(())
}

/// Run the next-event estimator toward the given on-shell momenta.
pub fn estimate_sigma_nee(
    transport: &Transport,
    k_primes: &[Vec3],
    n_paths: u64,
    seed: u64,
) -> Result<(SigmaNee, RunStats)> {
    let kern = transport.kern;
    for &kp in k_primes {
        validate_k_prime(kern, transport.source.k, kp)?;
    }
    let m = k_primes.len();
    let (scorer, stats) = run_scored(transport, n_paths, seed, || NeeScorer {
        kern,
        k_primes,
        acc_single: vec![0.0; m],
        acc_multiple: vec![0.0; m],
        single: vec![TallySet::default(); m],
        multiple: vec![TallySet::default(); m],
        total: vec![TallySet::default(); m],
    });
    Ok((
        SigmaNee {
            k_primes: k_primes.to_vec(),
            n_paths,
            source_weight: transport.source.weight(),
            single: scorer.single,
            multiple: scorer.multiple,
            total: scorer.total,
        },
        stats,
    ))
}

/// Coherent backscattering peak on a grid of transverse momentum offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakProfile {
    pub k: Vec3,
    pub kappas: Vec<Vec3>,
    pub coherent: Vec<Complex64>,
    pub coherent_stderr: Vec<f64>,
    /// Incoherent multiple-scattering background B (single scattering
    /// excluded).
    pub incoherent: f64,
    pub incoherent_stderr: f64,
    pub single_scatter: f64,
    pub single_scatter_stderr: f64,
    pub n_paths: u64,
}

impl PeakProfile {
    /// 1 + C(kappa)/B, the cone height over the incoherent background.
    pub fn enhancement(&self, i: usize) -> f64 {
        1.0 + self.coherent[i].re / self.incoherent
    }

    /// |C(kappa)|^2 <= B^2 for every kappa; exact (including rounding) at
    /// kappa = 0 where the coherent and incoherent tallies are identical.
    pub fn triangle_inequality_holds(&self) -> bool {
        let b_sq = self.incoherent * self.incoherent;
        self.coherent.iter().all(|c| c.norm_sqr() <= b_sq)
    }
}

struct PeakScorer<'a> {
    kern: &'a ShellKernel,
    k_back: Vec3,
    kappas: &'a [Vec3],
    first_position: Vec3,
    acc_coherent: Vec<Complex64>,
    acc_incoherent: f64,
    acc_single: f64,
    coherent: Vec<TallySet>,
    incoherent: TallySet,
    single: TallySet,
}

impl Scorer for PeakScorer<'_> {
    fn begin_path(&mut self) {
        self.acc_coherent.iter_mut().for_each(|a| *a = Complex64::default());
        self.acc_incoherent = 0.0;
        self.acc_single = 0.0;
    }

    fn collision(&mut self, ev: &CollisionEvent) {
        let w = nee_weight(self.kern, ev.position, ev.p_in, self.k_back);
        if ev.index == 1 {
            self.first_position = ev.position;
            self.acc_single += w;
            return;
        }
        // The first and last scattering carry the extra phase; scored from
        // the second collision onward, with the first collision as reference.
        self.acc_incoherent += w;
        let rel = ev.position - self.first_position;
        for (acc, &kappa) in self.acc_coherent.iter_mut().zip(self.kappas) {
            let phase = kappa.dot(rel);
            *acc += w * Complex64::new(phase.cos(), phase.sin());
        }
    }

    fn end_path(&mut self, _path: &Path) {
        if self.acc_single != 0.0 {
            self.single.add(Complex64::new(self.acc_single, 0.0));
        }
        if self.acc_incoherent != 0.0 {
            self.incoherent.add(Complex64::new(self.acc_incoherent, 0.0));
            for (t, &a) in self.coherent.iter_mut().zip(self.acc_coherent.iter()) {
                t.add(a);
            }
        }
    }
}

impl Merge for PeakScorer<'_> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.coherent.iter_mut().zip(other.coherent) {
            a.merge(b);
        }
        self.incoherent.merge(other.incoherent);
        self.single.merge(other.single);
    }
}

/// Project `kappa` onto the plane transverse to `k`; errors if the
/// longitudinal component exceeds the tolerance.
pub fn transverse_projection(k: Vec3, kappa: Vec3, tol: f64) -> Result<Vec3> {
    let k_hat = k.normalized();
    let along = kappa.dot(k_hat);
    if along.abs() > tol * kappa.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "kappa {kappa:?} has component {along:.3e} along k"
        )));
    }
    Ok(kappa - k_hat * along)
}

/// Run the phase-weighted backscattering estimator toward -k.
pub fn estimate_backscatter_peak(
    transport: &Transport,
    kappas: &[Vec3],
    n_paths: u64,
    seed: u64,
) -> Result<(PeakProfile, RunStats)> {
    let kern = transport.kern;
    let k = transport.source.k;
    let kappas: Vec<Vec3> = kappas
        .iter()
        .map(|&kp| transverse_projection(k, kp, 1e-9))
        .collect::<Result<_>>()?;
    let k_back = -k;
    let m = kappas.len();
    let (scorer, stats) = run_scored(transport, n_paths, seed, || PeakScorer {
        kern,
        k_back,
        kappas: &kappas,
        first_position: Vec3::ZERO,
        acc_coherent: vec![Complex64::default(); m],
        acc_incoherent: 0.0,
        acc_single: 0.0,
        coherent: vec![TallySet::default(); m],
        incoherent: TallySet::default(),
        single: TallySet::default(),
    });
    let w = transport.source.weight();
    let profile = PeakProfile {
        k,
        coherent: scorer.coherent.iter().map(|t| t.mean(n_paths) * w).collect(),
        coherent_stderr: scorer.coherent.iter().map(|t| t.stderr(n_paths) * w).collect(),
        incoherent: scorer.incoherent.mean(n_paths).re * w,
        incoherent_stderr: scorer.incoherent.stderr(n_paths) * w,
        single_scatter: scorer.single.mean(n_paths).re * w,
        single_scatter_stderr: scorer.single.stderr(n_paths) * w,
        kappas,
        n_paths,
    };
    Ok((profile, stats))
}

/// The exact-backscattering factor-2 identity: the coherent tally at
/// kappa = 0 duplicates the incoherent one, so the back-direction total is
/// twice the multiple-scattering background.
#[derive(Debug, Clone, Copy)]
pub struct FactorTwo {
    pub back_total: f64,
    pub twice_background: f64,
    pub stderr: f64,
    pub enhancement_at_zero: f64,
}

pub fn factor_two_check(profile: &PeakProfile) -> Result<FactorTwo> {
    let zero = profile
        .kappas
        .iter()
        .position(|k| k.norm() == 0.0)
        .ok_or_else(|| Error::InvalidInput("factor-two check needs kappa = 0 in the grid".into()))?;
    let c0 = profile.coherent[zero].re;
    let b = profile.incoherent;
    Ok(FactorTwo {
        back_total: b + c0,
        twice_background: 2.0 * b,
        stderr: (profile.coherent_stderr[zero].powi(2) + profile.incoherent_stderr.powi(2)).sqrt(),
        enhancement_at_zero: if b == 0.0 { 0.0 } else { (b + c0) / b },
    })
}

/// Deterministic quadrature of the single-collision rate: the collision
/// kernel between k and k' integrated over the support with both attenuation
/// factors. Serves as the independent oracle for the first-collision
/// structure of the next-event estimator.
pub fn single_scattering_quadrature(medium: &Medium, k: Vec3, kp: Vec3) -> Result<f64> {
    single_scattering_quadrature_raw(medium, k, kp, true)
}

/// Same integral with the attenuation exponent forced to zero (then the
/// spatial factor is just the support volume); exposed for validation.
pub fn single_scattering_quadrature_raw(
    medium: &Medium,
    k: Vec3,
    kp: Vec3,
    attenuate: bool,
) -> Result<f64> {
    let e = medium.dispersion.omega(k);
    let ep = medium.dispersion.omega(kp);
    if (e - ep).abs() > SHELL_TOL * e {
        return Err(Error::InvalidInput("k and k' must share the energy shell".into()));
    }
    if (kp - k).norm() <= 1e-12 * k.norm() {
        return Err(Error::InvalidInput("strict forward scattering is excluded".into()));
    }
    let nu_in = total_rate(medium, k)?;
    let nu_out = total_rate(medium, kp)?;
    let v_in = medium.dispersion.group_velocity(k);
    let v_out = medium.dispersion.group_velocity(kp);
    let shape = &medium.shape;
    let weight = |x: Vec3| -> f64 {
        if !attenuate {
            return 1.0;
        }
        let incoming = shape.ray_integral(x, v_in, f64::NEG_INFINITY, 0.0).unwrap();
        let outgoing = shape.ray_integral(x, v_out, 0.0, f64::INFINITY).unwrap();
        (-nu_in * incoming - nu_out * outgoing).exp()
    };

    let spatial = |order: usize| -> f64 {
        match *shape {
            ShapeFunction::Ball { center, radius } => {
                let (rn, rw) = gauss_legendre(order);
                let rule = SphereRule::new(order, 2 * order);
                let axis = Vec3::new(0.0, 0.0, 1.0);
                let mut sum = 0.0;
                for (t, wr) in rn.iter().zip(&rw) {
                    let r = 0.5 * radius * (t + 1.0);
                    let shell: f64 = rule.integrate(axis, |d| weight(center + d * r));
                    sum += wr * 0.5 * radius * r * r * shell;
                }
                sum
            }
            _ => {
                let (lo, hi) = match *shape {
                    ShapeFunction::Box { corner, extents } => (corner, corner + extents),
                    ShapeFunction::Slab { thickness, half_width } => (
                        Vec3::new(-half_width, -half_width, 0.0),
                        Vec3::new(half_width, half_width, thickness),
                    ),
                    ShapeFunction::Ball { .. } => unreachable!(),
                };
                let (n, w) = gauss_legendre(order);
                let map = |t: f64, a: f64, b: f64| 0.5 * (a + b) + 0.5 * (b - a) * t;
                let mut sum = 0.0;
                for (tx, wx) in n.iter().zip(&w) {
                    for (ty, wy) in n.iter().zip(&w) {
                        for (tz, wz) in n.iter().zip(&w) {
                            let x = Vec3::new(
                                map(*tx, lo.x, hi.x),
                                map(*ty, lo.y, hi.y),
                                map(*tz, lo.z, hi.z),
                            );
                            sum += wx * wy * wz * weight(x);
                        }
                    }
                }
                sum * 0.125 * (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z)
            }
        }
    };

    let coarse = spatial(48);
    let fine = spatial(96);
    let scale = fine.abs().max(1e-300);
    if ((fine - coarse) / scale).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "single-scattering quadrature not converged: {coarse:.9e} vs {fine:.9e}"
        )));
    }
    let kernel_factor =
        INV_TWO_PI_CUBED_SQRT * medium.covariance.eval(k - kp)? * medium.model_weight(e);
    Ok(kernel_factor * fine)
}
