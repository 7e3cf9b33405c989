//! Monte Carlo and quadrature toolkit for linear transport in a bounded
//! random medium: collision kernels on an energy shell, jump-process
//! simulation with analog and next-event scoring, the coherent
//! backscattering cone, and its diffusion-approximation benchmark.

pub mod diffusion;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod medium;
pub mod quad;
pub mod rng;
pub mod runner;
pub mod transport;
pub mod vec3;
pub mod wave;

pub use error::{Error, Result};
pub use estimators::{
    estimate_backscatter_peak, estimate_sigma_analog, estimate_sigma_nee, factor_two_check,
    single_scattering_quadrature, PeakProfile, SigmaHistogram, SigmaNee, TallySet,
};
pub use kernel::{shell_measure, total_rate, transport_rate, ShellKernel};
pub use medium::{Covariance, Dispersion, Medium, Model, ShapeFunction};
pub use runner::{run_scored, Merge, RunStats};
pub use transport::{Path, Scorer, SourceSpec, Transport};
pub use vec3::Vec3;
