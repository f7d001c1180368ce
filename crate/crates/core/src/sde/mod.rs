//! Weighted Itô diffusion: per-pair drift and noise channels, multiplicative
//! weight updates, Euler–Maruyama stepping and periodic resampling.

mod engine;
mod fields;

pub use engine::{
    advance, estimate_tensor, reset, run, step, EssSample, NoiseStreams, Record, ResetEvent, RunConfig, RunOutput,
};
pub use fields::{
    cross_term, drift, drift_snapshot, pair_diffusion, pair_divergence, pair_drift, pair_weight_rate, unit_or_zero,
    weight_rate, weight_rate_snapshot,
};
