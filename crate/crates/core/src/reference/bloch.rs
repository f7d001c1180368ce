use crate::algebra::{flat_weight, MultiIndex};
use crate::error::{Error, Result};

/// Multilinear spin correlators b_μ = ⟨Ŝ_μ⟩ for every μ ∈ {0,x,y,z}^N.
///
/// `coeffs[0]` is the normalization slot (trace of the density matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct BlochTensor {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl BlochTensor {
    /// The maximally mixed state: every correlator zero.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let mut coeffs = vec![0.0; 1 << (2 * n_qubits)];
        coeffs[0] = 1.0;
        BlochTensor { n_qubits, coeffs }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        BlochTensor {
            n_qubits,
            coeffs: vec![0.0; 1 << (2 * n_qubits)],
        }
    }

    pub fn from_coeffs(n_qubits: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 1 << (2 * n_qubits) {
            return Err(Error::State(format!(
                "{} coefficients given, {} qubits need {}",
                coeffs.len(),
                n_qubits,
                1usize << (2 * n_qubits)
            )));
        }
        Ok(BlochTensor { n_qubits, coeffs })
    }

    /// Product state with one Bloch vector per qubit (each of length ≤ 1/2
    /// for a physical state).
    pub fn product(vectors: &[crate::algebra::Vec3]) -> Self {
        let n = vectors.len();
        let coeffs = (0..1usize << (2 * n))
            .map(|flat| {
                (0..n)
                    .map(|q| match (flat >> (2 * (n - 1 - q))) & 3 {
                        0 => 1.0,
                        c => vectors[q][c - 1],
                    })
                    .product()
            })
            .collect();
        BlochTensor { n_qubits: n, coeffs }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, mi: &MultiIndex) -> f64 {
        self.coeffs[mi.flat()]
    }

    pub fn set(&mut self, mi: &MultiIndex, v: f64) {
        self.coeffs[mi.flat()] = v;
    }

    pub fn normalization(&self) -> f64 {
        self.coeffs[0]
    }

    /// Errors unless the normalization slot is 1 (to 1e-12).
    pub fn check_normalized(&self) -> Result<()> {
        if (self.coeffs[0] - 1.0).abs() > 1e-12 {
            return Err(Error::State(format!(
                "normalization slot is {}, expected 1",
                self.coeffs[0]
            )));
        }
        Ok(())
    }

    /// Weight |μ| of each flat index.
    pub fn weights(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.coeffs.len()).map(|f| flat_weight(self.n_qubits, f))
    }

    pub fn max_abs_diff(&self, other: &BlochTensor) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
