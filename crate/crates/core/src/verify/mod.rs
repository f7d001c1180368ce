//! Checks that the diffusion reproduces the quantum dynamics: pointwise
//! generator equivalence, the analytic divergence and a one-step weak test.

mod checks;
mod hyperdual;

pub use checks::{
    divergence_fd, fp_apply, random_spec, random_state, sde_fp_apply, verify_divergence, verify_generator,
    verify_weak_step, DivergenceReport, GeneratorReport, WeakStepReport, WeakStepRow,
};
pub use hyperdual::HyperDual;
