//! Scenario files: TOML schema, parsing, and semantic validation.
//!
//! Parsing is strict (unknown or duplicate keys are rejected with line
//! numbers, courtesy of the TOML parser). Semantic validation collects every
//! problem in one pass instead of stopping at the first.

use cbs_core::{Covariance, Dispersion, Medium, Model, ShapeFunction, Vec3};
use serde::Deserialize;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub medium: MediumConfig,
    pub source: SourceConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "target")]
    pub targets: Vec<TargetConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub model: ModelKind,
    pub dispersion: DispersionKind,
    pub geometry: GeometryConfig,
    pub covariance: CovarianceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Schroedinger,
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionKind {
    Quadratic,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Ball {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    Box {
        corner: [f64; 3],
        extents: [f64; 3],
    },
    Slab {
        thickness: f64,
        half_width: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub kind: CovarianceKind,
    pub amplitude: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub k: [f64; 3],
    /// Distance of the source plane beyond the bounding sphere.
    #[serde(default = "default_plane_margin")]
    pub plane_margin: f64,
    /// Extra window radius beyond the shadow, in mean free paths.
    #[serde(default = "default_window_margin")]
    pub window_margin: f64,
}

fn default_plane_margin() -> f64 {
    1.0
}

fn default_window_margin() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: u64,
    pub seed: u64,
    /// 0 means "use every core".
    #[serde(default)]
    pub workers: usize,
    pub collision_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// Analog estimate binned over the whole sphere.
    SigmaHistogram {
        #[serde(default = "default_bands")]
        bands: usize,
        #[serde(default = "default_sectors")]
        sectors: usize,
    },
    /// Next-event estimate toward fixed on-shell momenta.
    SigmaNee { directions: Vec<[f64; 3]> },
    /// Backscattering peak on a grid of transverse offsets.
    Peak { kappas: Vec<[f64; 3]> },
    /// Diffusion-approximation cone: closed form against quadrature.
    DiffusionCompare { kappa_ell: Vec<f64> },
    /// Exact-backscattering enhancement check.
    FactorTwo {},
}

fn default_bands() -> usize {
    16
}

fn default_sectors() -> usize {
    16
}

impl TargetConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TargetConfig::SigmaHistogram { .. } => "sigma_histogram",
            TargetConfig::SigmaNee { .. } => "sigma_nee",
            TargetConfig::Peak { .. } => "peak",
            TargetConfig::DiffusionCompare { .. } => "diffusion_compare",
            TargetConfig::FactorTwo {} => "factor_two",
        }
    }
}

/// Semantically checked scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub medium: Medium,
    pub k: Vec3,
    pub energy: f64,
    pub plane_margin: f64,
    pub window_margin: f64,
    pub paths: u64,
    pub seed: u64,
    pub workers: usize,
    pub collision_cap: Option<usize>,
    pub targets: Vec<ValidatedTarget>,
    /// Non-fatal notes (for example auto-projected offsets).
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum ValidatedTarget {
    SigmaHistogram { bands: usize, sectors: usize },
    SigmaNee { directions: Vec<Vec3> },
    Peak { kappas: Vec<Vec3> },
    DiffusionCompare { kappa_ell: Vec<f64> },
    FactorTwo,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    /// Check everything checkable before simulation, reporting all problems
    /// at once.
    pub fn validate(&self) -> Result<ValidatedScenario, CliError> {
        let mut errors: Vec<String> = Vec::new();
        let mut warnings: Vec<String> = Vec::new();

        match self.medium.geometry {
            GeometryConfig::Ball { center, radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    errors.push(format!("geometry: ball radius must be positive, got {radius}"));
                }
                if !vec3(center).is_finite() {
                    errors.push("geometry: ball center must be finite".into());
                }
            }
            GeometryConfig::Box { corner, extents } => {
                if !vec3(corner).is_finite() {
                    errors.push("geometry: box corner must be finite".into());
                }
                if extents.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                    errors.push(format!("geometry: box extents must be positive, got {extents:?}"));
                }
            }
            GeometryConfig::Slab { thickness, half_width } => {
                if !(thickness > 0.0 && thickness.is_finite()) {
                    errors.push(format!("geometry: slab thickness must be positive, got {thickness}"));
                }
                if !(half_width > 0.0 && half_width.is_finite()) {
                    errors.push(format!("geometry: slab half_width must be positive, got {half_width}"));
                }
            }
        }

        let cov = &self.medium.covariance;
        if !(cov.amplitude >= 0.0 && cov.amplitude.is_finite()) {
            errors.push(format!("covariance: amplitude must be nonnegative, got {}", cov.amplitude));
        }
        if !(cov.scale > 0.0 && cov.scale.is_finite()) {
            errors.push(format!("covariance: scale must be positive, got {}", cov.scale));
        }
        if self.medium.model == ModelKind::Wave && self.medium.dispersion != DispersionKind::Linear {
            errors.push("medium: the wave model requires the linear dispersion".into());
        }

        let k = vec3(self.source.k);
        if !k.is_finite() || k.norm() == 0.0 {
            errors.push(format!("source: k must be finite and nonzero, got {:?}", self.source.k));
        }
        if !(self.source.plane_margin > 0.0) {
            errors.push(format!(
                "source: plane_margin must be positive, got {}",
                self.source.plane_margin
            ));
        }
        if !(self.source.window_margin >= 0.0) {
            errors.push(format!(
                "source: window_margin must be nonnegative, got {}",
                self.source.window_margin
            ));
        }

        if self.run.paths == 0 {
            errors.push("run: paths must be at least 1".into());
        }
        if self.run.workers > 4096 {
            errors.push(format!("run: workers must be at most 4096, got {}", self.run.workers));
        }
        if self.run.collision_cap == Some(0) {
            errors.push("run: collision_cap must be at least 1".into());
        }

        if self.targets.is_empty() {
            errors.push("at least one [[target]] is required".into());
        }

        // Build the medium only if its inputs survived so far; target checks
        // that need the dispersion still run with a placeholder shell.
        let dispersion = match self.medium.dispersion {
            DispersionKind::Quadratic => Dispersion::Quadratic,
            DispersionKind::Linear => Dispersion::Linear,
        };
        let energy = if k.is_finite() && k.norm() > 0.0 {
            dispersion.omega(k)
        } else {
            1.0
        };

        let mut targets = Vec::new();
        for (i, t) in self.targets.iter().enumerate() {
            match t {
                TargetConfig::SigmaHistogram { bands, sectors } => {
                    if *bands == 0 || *sectors == 0 {
                        errors.push(format!("target {i}: bands and sectors must be positive"));
                    } else {
                        targets.push(ValidatedTarget::SigmaHistogram {
                            bands: *bands,
                            sectors: *sectors,
                        });
                    }
                }
                TargetConfig::SigmaNee { directions } => {
                    if directions.is_empty() {
                        errors.push(format!("target {i}: directions must not be empty"));
                        continue;
                    }
                    let mut out = Vec::new();
                    for (j, d) in directions.iter().enumerate() {
                        let dp = vec3(*d);
                        if !dp.is_finite() || dp.norm() == 0.0 {
                            errors.push(format!(
                                "target {i}: direction {j} must be finite and nonzero"
                            ));
                            continue;
                        }
                        let w = dispersion.omega(dp);
                        if (w - energy).abs() > 1e-9 * energy {
                            errors.push(format!(
                                "target {i}: direction {j} is off the energy shell \
                                 (omega = {w}, shell = {energy})"
                            ));
                        } else if (dp - k).norm() <= 1e-12 * k.norm() {
                            errors.push(format!(
                                "target {i}: direction {j} coincides with the beam; strict \
                                 forward scattering is excluded"
                            ));
                        } else {
                            out.push(dp);
                        }
                    }
                    targets.push(ValidatedTarget::SigmaNee { directions: out });
                }
                TargetConfig::Peak { kappas } => {
                    if kappas.is_empty() {
                        errors.push(format!("target {i}: kappas must not be empty"));
                        continue;
                    }
                    let mut out = Vec::new();
                    let k_hat = if k.norm() > 0.0 { k.normalized() } else { Vec3::new(0.0, 0.0, 1.0) };
                    for (j, kp) in kappas.iter().enumerate() {
                        let kappa = vec3(*kp);
                        if !kappa.is_finite() {
                            errors.push(format!("target {i}: kappa {j} must be finite"));
                            continue;
                        }
                        let along = kappa.dot(k_hat);
                        if along.abs() > 1e-9 * kappa.norm().max(1.0) {
                            errors.push(format!(
                                "target {i}: kappa {j} has component {along:.3e} along the \
                                 beam; offsets must be transverse"
                            ));
                        } else {
                            if along != 0.0 {
                                warnings.push(format!(
                                    "target {i}: kappa {j} projected onto the transverse \
                                     plane (removed component {along:.3e})"
                                ));
                            }
                            out.push(kappa - k_hat * along);
                        }
                    }
                    targets.push(ValidatedTarget::Peak { kappas: out });
                }
                TargetConfig::DiffusionCompare { kappa_ell } => {
                    if kappa_ell.is_empty() {
                        errors.push(format!("target {i}: kappa_ell must not be empty"));
                        continue;
                    }
                    for (j, x) in kappa_ell.iter().enumerate() {
                        if !(*x >= 0.0 && x.is_finite()) {
                            errors.push(format!(
                                "target {i}: kappa_ell {j} must be nonnegative, got {x}"
                            ));
                        }
                    }
                    targets.push(ValidatedTarget::DiffusionCompare { kappa_ell: kappa_ell.clone() });
                }
                TargetConfig::FactorTwo {} => targets.push(ValidatedTarget::FactorTwo),
            }
        }

        if !errors.is_empty() {
            return Err(CliError::Validation(errors.join("\n")));
        }

        let shape = match self.medium.geometry {
            GeometryConfig::Ball { center, radius } => {
                ShapeFunction::Ball { center: vec3(center), radius }
            }
            GeometryConfig::Box { corner, extents } => {
                ShapeFunction::Box { corner: vec3(corner), extents: vec3(extents) }
            }
            GeometryConfig::Slab { thickness, half_width } => {
                ShapeFunction::Slab { thickness, half_width }
            }
        };
        let covariance = match cov.kind {
            CovarianceKind::Gaussian => {
                Covariance::Gaussian { amplitude: cov.amplitude, scale: cov.scale }
            }
            CovarianceKind::Exponential => {
                Covariance::Exponential { amplitude: cov.amplitude, scale: cov.scale }
            }
        };
        let model = match self.medium.model {
            ModelKind::Schroedinger => Model::Schroedinger,
            ModelKind::Wave => Model::Wave,
        };
        let medium = Medium::new(shape, covariance, dispersion, model)
            .map_err(|e| CliError::Validation(e.to_string()))?;

        Ok(ValidatedScenario {
            medium,
            k,
            energy,
            plane_margin: self.source.plane_margin,
            window_margin: self.source.window_margin,
            paths: self.run.paths,
            seed: self.run.seed,
            workers: self.run.workers,
            collision_cap: self.run.collision_cap,
            targets,
            warnings,
        })
    }
}
