use nalgebra::DVector;

use super::bloch::BlochTensor;
use crate::algebra::{flat_weight, CMatrix, PauliString, SpinOps, C64};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// 2^N × 2^N density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Wraps `m` after checking Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn new_unchecked(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::State("zero state vector".into()));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(DensityMatrix(&v * v.adjoint()))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        DensityMatrix(CMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.0;
        (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.0.is_square() || !self.0.nrows().is_power_of_two() {
            return Err(Error::State(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                self.0.nrows(),
                self.0.ncols()
            )));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::State(format!("not Hermitian (max |ρ-ρ†| = {herm:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::State(format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::State(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

/// ρ = 2^{-N} Σ_μ 4^{|μ|} b_μ Ŝ_μ.
pub fn density_from_bloch(b: &BlochTensor, ops: &SpinOps) -> Result<DensityMatrix> {
    b.check_normalized()?;
    Ok(DensityMatrix(operator_from_bloch(b, ops)?))
}

/// Same expansion without the normalization precondition; used for
/// derivatives of states.
pub fn operator_from_bloch(b: &BlochTensor, ops: &SpinOps) -> Result<CMatrix> {
    let n = ops.n_qubits();
    if b.n_qubits() != n {
        return Err(Error::State(format!(
            "tensor has {} qubits, operators have {}",
            b.n_qubits(),
            n
        )));
    }
    let dim = ops.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (flat, &c) in b.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // 4^{|μ|} Ŝ_μ = 2^{|μ|} σ_μ
        let scale = (1u64 << flat_weight(n, flat)) as f64 / dim as f64;
        PauliString::from_flat(n, flat).add_scaled_to(&mut m, C64::new(c * scale, 0.0));
    }
    Ok(m)
}

/// b_μ = tr(ρ Ŝ_μ).
pub fn bloch_from_density(rho: &DensityMatrix, ops: &SpinOps) -> Result<BlochTensor> {
    let herm = rho.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::State(format!("not Hermitian (max |ρ-ρ†| = {herm:e})")));
    }
    bloch_from_operator(rho.matrix(), ops)
}

/// Real parts of tr(m Ŝ_μ) for any operator `m`.
pub fn bloch_from_operator(m: &CMatrix, ops: &SpinOps) -> Result<BlochTensor> {
    let n = ops.n_qubits();
    if m.nrows() != ops.dim() || m.ncols() != ops.dim() {
        return Err(Error::State(format!(
            "matrix is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            ops.dim(),
            ops.dim()
        )));
    }
    let coeffs = (0..1usize << (2 * n))
        .map(|flat| {
            let scale = 1.0 / (1u64 << flat_weight(n, flat)) as f64;
            PauliString::from_flat(n, flat).trace_with(m).re * scale
        })
        .collect();
    BlochTensor::from_coeffs(n, coeffs)
}
