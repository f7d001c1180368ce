use super::density::PhasePoint;
use crate::algebra::Vec3;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleMeta {
    /// Outer sampling radius M.
    pub radius: f64,
    pub inner_radius: f64,
    pub seed: u64,
    /// Number of resamplings that preceded this ensemble.
    pub epoch: u32,
}

impl Default for EnsembleMeta {
    fn default() -> Self {
        EnsembleMeta {
            radius: 1.0,
            inner_radius: 0.0,
            seed: 0,
            epoch: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub point: PhasePoint,
    pub weight: f64,
}

/// Weighted trajectories stored as flat arrays (`n_qubits` vectors per
/// trajectory).
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    n_qubits: usize,
    positions: Vec<Vec3>,
    weights: Vec<f64>,
    diverged: Vec<bool>,
    meta: EnsembleMeta,
}

impl Ensemble {
    pub fn empty(n_qubits: usize, meta: EnsembleMeta) -> Self {
        Ensemble {
            n_qubits,
            positions: Vec::new(),
            weights: Vec::new(),
            diverged: Vec::new(),
            meta,
        }
    }

    pub fn from_parts(n_qubits: usize, positions: Vec<Vec3>, weights: Vec<f64>, meta: EnsembleMeta) -> Result<Self> {
        if positions.len() != weights.len() * n_qubits {
            return Err(Error::Argument(format!(
                "{} positions for {} weights of {} qubits",
                positions.len(),
                weights.len(),
                n_qubits
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::Argument(format!("non-finite weight {w}")));
        }
        let diverged = vec![false; weights.len()];
        Ok(Ensemble {
            n_qubits,
            positions,
            weights,
            diverged,
            meta,
        })
    }

    pub fn from_trajectories(n_qubits: usize, trajectories: Vec<Trajectory>, meta: EnsembleMeta) -> Result<Self> {
        let mut positions = Vec::with_capacity(trajectories.len() * n_qubits);
        let mut weights = Vec::with_capacity(trajectories.len());
        for (i, t) in trajectories.into_iter().enumerate() {
            if t.point.len() != n_qubits {
                return Err(Error::Argument(format!(
                    "trajectory {i} has {} spins, expected {n_qubits}",
                    t.point.len()
                )));
            }
            positions.extend_from_slice(&t.point);
            weights.push(t.weight);
        }
        Self::from_parts(n_qubits, positions, weights, meta)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn point(&self, i: usize) -> &[Vec3] {
        &self.positions[i * self.n_qubits..(i + 1) * self.n_qubits]
    }

    pub fn trajectory(&self, i: usize) -> Trajectory {
        Trajectory {
            point: PhasePoint(self.point(i).to_vec()),
            weight: self.weights[i],
        }
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diverged(&self) -> &[bool] {
        &self.diverged
    }

    pub fn diverged_count(&self) -> usize {
        self.diverged.iter().filter(|d| **d).count()
    }

    /// Mutable views for in-place stepping.
    pub fn parts_mut(&mut self) -> (&mut [Vec3], &mut [f64], &mut [bool]) {
        (&mut self.positions, &mut self.weights, &mut self.diverged)
    }
}
