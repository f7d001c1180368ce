use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use super::vec3::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Two-qubit coupling `-S^a · J(t) S^b` with `a < b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCoupling {
    pub a: usize,
    pub b: usize,
    pub coupling: Schedule<Mat3>,
}

/// Qubit count, one field schedule per qubit and the list of coupled pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    n_qubits: usize,
    fields: Vec<Schedule<Vec3>>,
    pairs: Vec<PairCoupling>,
}

/// Parameters in force during one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub fields: Vec<Vec3>,
    /// Only pairs whose coupling is not identically zero.
    pub pairs: Vec<ActivePair>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivePair {
    pub a: usize,
    pub b: usize,
    pub j: Mat3,
    pub jt: Mat3,
}

impl SystemSpec {
    pub fn new(n_qubits: usize, fields: Vec<Schedule<Vec3>>, pairs: Vec<PairCoupling>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::System("n_qubits must be positive".into()));
        }
        if fields.len() != n_qubits {
            return Err(Error::System(format!(
                "expected {} field schedules, got {}",
                n_qubits,
                fields.len()
            )));
        }
        for (q, f) in fields.iter().enumerate() {
            if f.values().any(|v| !v.is_finite()) {
                return Err(Error::System(format!("non-finite field on qubit {q}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &pairs {
            if p.a >= n_qubits || p.b >= n_qubits {
                return Err(Error::System(format!(
                    "pair ({}, {}) references a qubit outside [0, {})",
                    p.a, p.b, n_qubits
                )));
            }
            if p.a >= p.b {
                return Err(Error::System(format!(
                    "pair ({}, {}) must satisfy a < b",
                    p.a, p.b
                )));
            }
            if !seen.insert((p.a, p.b)) {
                return Err(Error::System(format!("duplicate pair ({}, {})", p.a, p.b)));
            }
            if p.coupling.values().any(|j| !j.is_finite()) {
                return Err(Error::System(format!("non-finite coupling on pair ({}, {})", p.a, p.b)));
            }
        }
        Ok(SystemSpec {
            n_qubits,
            fields,
            pairs,
        })
    }

    /// Time-independent system.
    pub fn constant(n_qubits: usize, fields: Vec<Vec3>, pairs: Vec<(usize, usize, Mat3)>) -> Result<Self> {
        let fields = fields.into_iter().map(Schedule::constant).collect();
        let pairs = pairs
            .into_iter()
            .map(|(a, b, j)| PairCoupling {
                a,
                b,
                coupling: Schedule::constant(j),
            })
            .collect();
        Self::new(n_qubits, fields, pairs)
    }

    /// No fields, no couplings.
    pub fn free(n_qubits: usize) -> Result<Self> {
        Self::constant(n_qubits, vec![Vec3::zero(); n_qubits], vec![])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fields(&self) -> &[Schedule<Vec3>] {
        &self.fields
    }

    pub fn pairs(&self) -> &[PairCoupling] {
        &self.pairs
    }

    pub fn field_at(&self, qubit: usize, t: f64) -> Result<Vec3> {
        self.fields[qubit].at(t).copied()
    }

    pub fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let fields = self
            .fields
            .iter()
            .map(|f| f.at(t).copied())
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let j = *p.coupling.at(t)?;
            if !j.is_zero() {
                pairs.push(ActivePair {
                    a: p.a,
                    b: p.b,
                    j,
                    jt: j.transpose(),
                });
            }
        }
        Ok(Snapshot { fields, pairs })
    }

    /// Earliest time at which every schedule is defined.
    pub fn start(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.start())
            .chain(self.pairs.iter().map(|p| p.coupling.start()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sorted, deduplicated segment start times of all schedules.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .fields
            .iter()
            .flat_map(|f| f.breakpoints())
            .chain(self.pairs.iter().flat_map(|p| p.coupling.breakpoints()))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}
