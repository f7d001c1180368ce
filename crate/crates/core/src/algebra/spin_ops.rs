//! Dense spin-1/2 operators for the reference solver.

use nalgebra::{Complex, DMatrix};

use super::index::MultiIndex;
use super::vec3::Axis;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Largest qubit count accepted by the dense reference solver.
pub const DEFAULT_DENSE_CAP: usize = 10;

/// Pauli string σ_μ = ⊗_q σ_{μ_q} acting on the 2^N computational basis.
///
/// Basis index bit `N-1-q` holds qubit `q`, bit value 0 is spin up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    x_mask: usize,
    z_mask: usize,
    n_y: u32,
}

impl PauliString {
    pub fn from_flat(n: usize, flat: usize) -> Self {
        let mut p = PauliString {
            x_mask: 0,
            z_mask: 0,
            n_y: 0,
        };
        for q in 0..n {
            let bit = 1usize << (n - 1 - q);
            match (flat >> (2 * (n - 1 - q))) & 3 {
                1 => p.x_mask |= bit,
                2 => {
                    p.x_mask |= bit;
                    p.z_mask |= bit;
                    p.n_y += 1;
                }
                3 => p.z_mask |= bit,
                _ => {}
            }
        }
        p
    }

    pub fn new(mi: &MultiIndex) -> Self {
        Self::from_flat(mi.n_qubits(), mi.flat())
    }

    /// Column `r` holds a single entry, at row `r ^ x_mask`.
    #[inline]
    pub fn partner(&self, r: usize) -> usize {
        r ^ self.x_mask
    }

    /// Value of that entry: σ_μ|r⟩ = phase(r) |r ^ x_mask⟩.
    #[inline]
    pub fn phase(&self, r: usize) -> C64 {
        let sign = if (r & self.z_mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        match self.n_y % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }

    /// tr(m σ).
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        (0..m.nrows())
            .map(|r| m[(r, self.partner(r))] * self.phase(r))
            .sum()
    }

    /// m += coef σ.
    pub fn add_scaled_to(&self, m: &mut CMatrix, coef: C64) {
        for r in 0..m.ncols() {
            m[(self.partner(r), r)] += coef * self.phase(r);
        }
    }

    /// σ m.
    pub fn left_mul(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |r, s| {
            let k = self.partner(r);
            self.phase(k) * m[(k, s)]
        })
    }

    /// m σ.
    pub fn right_mul(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |r, s| {
            m[(r, self.partner(s))] * self.phase(s)
        })
    }

    pub fn to_dense(&self, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(1 << n, 1 << n);
        self.add_scaled_to(&mut m, C64::new(1.0, 0.0));
        m
    }
}

/// The spin operators Ŝ_i^α = σ_i/2 on qubit α, tensored with identities.
#[derive(Clone, Debug)]
pub struct SpinOps {
    n_qubits: usize,
    ops: Vec<[CMatrix; 3]>,
}

impl SpinOps {
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::with_cap(n_qubits, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::System("n_qubits must be positive".into()));
        }
        if n_qubits > cap {
            return Err(Error::DimensionLimit { n: n_qubits, cap });
        }
        let ops = (0..n_qubits)
            .map(|q| {
                Axis::ALL.map(|a| {
                    let mi = MultiIndex::from_factors(n_qubits, &[(q, a)]).expect("valid factor");
                    PauliString::new(&mi).to_dense(n_qubits) * C64::new(0.5, 0.0)
                })
            })
            .collect();
        Ok(SpinOps { n_qubits, ops })
    }

    pub fn for_system(spec: &crate::algebra::SystemSpec) -> Result<Self> {
        Self::new(spec.n_qubits())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, qubit: usize, axis: Axis) -> &CMatrix {
        &self.ops[qubit][axis.index()]
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }

    /// Ŝ_μ: ordered product of the indicated spin components.
    pub fn product(&self, mi: &MultiIndex) -> CMatrix {
        mi.factors()
            .fold(self.identity(), |acc, (q, a)| acc * self.get(q, a))
    }
}
