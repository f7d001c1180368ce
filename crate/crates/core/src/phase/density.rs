use std::ops::Deref;

use crate::algebra::{flat_weight, Axis, Scalar, Vec3};
use crate::error::{Error, Result};
use crate::reference::BlochTensor;

/// A point z = (S^1, …, S^N) of the classical phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint(pub Vec<Vec3>);

impl PhasePoint {
    pub fn new(spins: Vec<Vec3>) -> Self {
        PhasePoint(spins)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(Vec3::is_finite)
    }
}

impl Deref for PhasePoint {
    type Target = [Vec3];
    fn deref(&self) -> &[Vec3] {
        &self.0
    }
}

/// Multilinear polynomial ρ(S^1, …, S^N) = Σ_μ c_μ Π_α S^α_{μ_α}.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDensity {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl PhaseDensity {
    pub fn from_coeffs(n_qubits: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 1 << (2 * n_qubits) {
            return Err(Error::State(format!(
                "{} coefficients given, {} qubits need {}",
                coeffs.len(),
                n_qubits,
                1usize << (2 * n_qubits)
            )));
        }
        Ok(PhaseDensity { n_qubits, coeffs })
    }

    /// c_μ = 4^{|μ|} b_μ / 2^N for a normalized state.
    pub fn from_bloch(b: &BlochTensor) -> Result<Self> {
        b.check_normalized()?;
        Ok(Self::promote(b))
    }

    /// Same map without the normalization check (time derivatives of states
    /// have a zero normalization slot).
    pub fn promote(b: &BlochTensor) -> Self {
        let n = b.n_qubits();
        let dim = (1u64 << n) as f64;
        let coeffs = b
            .coeffs()
            .iter()
            .enumerate()
            .map(|(flat, &v)| v * (1u64 << (2 * flat_weight(n, flat))) as f64 / dim)
            .collect();
        PhaseDensity { n_qubits: n, coeffs }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Contracts the coefficient tensor with one 4-vector per qubit.
    pub fn contract<T: Scalar>(&self, factors: &[[T; 4]]) -> T {
        assert_eq!(factors.len(), self.n_qubits, "one factor per qubit");
        let n = self.n_qubits;
        // the last qubit is the fastest-varying digit
        let last = &factors[n - 1];
        let mut cur: Vec<T> = self
            .coeffs
            .chunks_exact(4)
            .map(|c| {
                let mut acc = T::zero();
                for s in 0..4 {
                    if c[s] != 0.0 {
                        acc += last[s].scale(c[s]);
                    }
                }
                acc
            })
            .collect();
        for q in (0..n - 1).rev() {
            let f = &factors[q];
            cur = cur
                .chunks_exact(4)
                .map(|c| c[0] * f[0] + c[1] * f[1] + c[2] * f[2] + c[3] * f[3])
                .collect();
        }
        cur[0]
    }

    pub fn eval(&self, z: &[Vec3]) -> f64 {
        self.eval_generic(z)
    }

    pub fn eval_generic<T: Scalar>(&self, z: &[Vec3<T>]) -> T {
        let factors: Vec<[T; 4]> = z.iter().map(|s| [T::one(), s[0], s[1], s[2]]).collect();
        self.contract(&factors)
    }

    /// Partial derivative with respect to the listed components, each on a
    /// different qubit. At most second order. Requests that differentiate one
    /// qubit twice return exactly zero.
    pub fn eval_partials(&self, z: &[Vec3], derivs: &[(usize, Axis)]) -> Result<f64> {
        if z.len() != self.n_qubits {
            return Err(Error::Derivative(format!(
                "point has {} spins, density has {} qubits",
                z.len(),
                self.n_qubits
            )));
        }
        if derivs.len() > 2 {
            return Err(Error::Derivative(format!(
                "order {} requested, at most 2 supported",
                derivs.len()
            )));
        }
        if let Some((q, _)) = derivs.iter().find(|(q, _)| *q >= self.n_qubits) {
            return Err(Error::Derivative(format!("qubit {q} out of range")));
        }
        let mut factors: Vec<[f64; 4]> = z.iter().map(|s| [1.0, s[0], s[1], s[2]]).collect();
        let mut touched = vec![false; self.n_qubits];
        for &(q, a) in derivs {
            if touched[q] {
                return Ok(0.0);
            }
            touched[q] = true;
            let mut f = [0.0; 4];
            f[a.index() + 1] = 1.0;
            factors[q] = f;
        }
        Ok(self.contract(&factors))
    }

    /// ∂ρ/∂S^q as a vector.
    pub fn gradient(&self, z: &[Vec3], q: usize) -> Result<Vec3> {
        let mut g = Vec3::zero();
        for a in Axis::ALL {
            g[a.index()] = self.eval_partials(z, &[(q, a)])?;
        }
        Ok(g)
    }

    /// ∂²ρ/∂S^p_i ∂S^q_j as a 3×3 array (zero when p == q).
    pub fn mixed_hessian(&self, z: &[Vec3], p: usize, q: usize) -> Result<[[f64; 3]; 3]> {
        let mut h = [[0.0; 3]; 3];
        for a in Axis::ALL {
            for b in Axis::ALL {
                h[a.index()][b.index()] = self.eval_partials(z, &[(p, a), (q, b)])?;
            }
        }
        Ok(h)
    }
}
