//! Wave-model entry point: classical wave scattering with the omega^2 rate
//! weight, which requires the linear dispersion.

use crate::error::{Error, Result};
use crate::kernel::ShellKernel;
use crate::medium::{Dispersion, Medium, Model};

/// Build the collision kernel for a wave medium, enforcing the model /
/// dispersion pairing up front.
pub fn wave_kernel(medium: &Medium, energy: f64) -> Result<ShellKernel> {
    if medium.model != Model::Wave {
        return Err(Error::Configuration("wave_kernel needs a wave-model medium".into()));
    }
    if medium.dispersion != Dispersion::Linear {
        return Err(Error::Configuration(
            "the omega^2 rate weight is only valid for the linear dispersion".into(),
        ));
    }
    ShellKernel::new(medium, energy)
}
