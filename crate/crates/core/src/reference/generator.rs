use nalgebra::{DMatrix, DVector};

use super::bloch::BlochTensor;
use crate::algebra::{flat_weight, CMatrix, PauliString, SpinOps, SystemSpec, C64};
use crate::error::{Error, Result};

/// H(t) = -Σ_α B^α·Ŝ^α - Σ_(α,β) Ŝ^α_i J_ij Ŝ^β_j.
pub fn build_hamiltonian(spec: &SystemSpec, ops: &SpinOps, t: f64) -> Result<CMatrix> {
    check_dims(spec, ops)?;
    let snap = spec.snapshot(t)?;
    let mut h = CMatrix::zeros(ops.dim(), ops.dim());
    for (q, b) in snap.fields.iter().enumerate() {
        for (i, axis) in crate::algebra::Axis::ALL.iter().enumerate() {
            if b[i] != 0.0 {
                h -= ops.get(q, *axis) * C64::new(b[i], 0.0);
            }
        }
    }
    for p in &snap.pairs {
        for (i, ai) in crate::algebra::Axis::ALL.iter().enumerate() {
            for (j, aj) in crate::algebra::Axis::ALL.iter().enumerate() {
                let jij = p.j.get(i, j);
                if jij != 0.0 {
                    h -= ops.get(p.a, *ai) * ops.get(p.b, *aj) * C64::new(jij, 0.0);
                }
            }
        }
    }
    Ok(h)
}

pub(crate) fn check_dims(spec: &SystemSpec, ops: &SpinOps) -> Result<()> {
    if spec.n_qubits() != ops.n_qubits() {
        return Err(Error::System(format!(
            "system has {} qubits, operators have {}",
            spec.n_qubits(),
            ops.n_qubits()
        )));
    }
    Ok(())
}

/// Linear generator of the correlator dynamics: db/dt = L b.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumGenerator {
    n_qubits: usize,
    matrix: DMatrix<f64>,
}

impl QuantumGenerator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn apply(&self, b: &BlochTensor) -> BlochTensor {
        let v = &self.matrix * DVector::from_column_slice(b.coeffs());
        BlochTensor::from_coeffs(self.n_qubits, v.as_slice().to_vec()).expect("dimensions agree")
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }
}

/// L_μν = c_ν tr(Ŝ_μ (-i)[H, Ŝ_ν]) with c_ν = 4^{|ν|}/2^N, i.e. the
/// component μ of the time derivative of a state whose only correlator is
/// b_ν = 1.
pub fn quantum_generator(spec: &SystemSpec, ops: &SpinOps, t: f64) -> Result<QuantumGenerator> {
    let h = build_hamiltonian(spec, ops, t)?;
    Ok(generator_from_hamiltonian(&h, ops))
}

pub fn generator_from_hamiltonian(h: &CMatrix, ops: &SpinOps) -> QuantumGenerator {
    let n = ops.n_qubits();
    let dim = ops.dim() as f64;
    let size = 1usize << (2 * n);
    let strings: Vec<PauliString> = (0..size).map(|f| PauliString::from_flat(n, f)).collect();
    let pow2: Vec<f64> = (0..size).map(|f| (1u64 << flat_weight(n, f)) as f64).collect();
    let minus_i = C64::new(0.0, -1.0);

    let mut matrix = DMatrix::zeros(size, size);
    // column 0 is the identity, which commutes with H
    for nu in 1..size {
        let p = &strings[nu];
        let comm = (p.right_mul(h) - p.left_mul(h)) * minus_i;
        if comm.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        let col_scale = pow2[nu] / dim;
        // row 0 stays zero: tr of a commutator vanishes
        for mu in 1..size {
            let tr = strings[mu].trace_with(&comm).re;
            if tr != 0.0 {
                matrix[(mu, nu)] = col_scale * tr / pow2[mu];
            }
        }
    }
    QuantumGenerator {
        n_qubits: n,
        matrix,
    }
}
