//! Spin vectors, coupling matrices, parameter schedules and spin operators.

mod index;
mod schedule;
mod spin_ops;
mod system;
mod vec3;

pub use index::{flat_weight, MultiIndex, Slot};
pub use schedule::Schedule;
pub use spin_ops::{CMatrix, PauliString, SpinOps, C64, DEFAULT_DENSE_CAP};
pub use system::{ActivePair, PairCoupling, Snapshot, SystemSpec};
pub use vec3::{levi_civita, Axis, Mat3, Scalar, Vec3};
