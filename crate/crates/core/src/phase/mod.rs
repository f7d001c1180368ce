//! Signed phase-space density, observable kernels, the ratio estimator and
//! initial sampling.

mod density;
mod ensemble;
mod estimator;
mod kernel;
mod sampling;

pub use density::{PhaseDensity, PhasePoint};
pub use ensemble::{Ensemble, EnsembleMeta, Trajectory};
pub use estimator::{
    estimate, estimate_difference, pairwise_sum, DifferenceEstimate, EnsembleStats, EstimatorOptions,
    ObservableEstimate, DEFAULT_BATCHES,
};
pub use kernel::{kernel, spin_kernel, EPS_RADIUS};
pub use sampling::{orbit_image, sample_ensemble, sample_initial, SampleOptions, SamplingScheme, ORBIT_SIZE};

use crate::reference::BlochTensor;
use crate::Result;

/// Same as [`PhaseDensity::from_bloch`].
pub fn density_from_bloch_poly(b: &BlochTensor) -> Result<PhaseDensity> {
    PhaseDensity::from_bloch(b)
}
