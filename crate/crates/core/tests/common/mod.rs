#![allow(dead_code)]

use qsde::algebra::{Mat3, MultiIndex, SpinOps, Vec3, C64};
use qsde::reference::{bloch_from_density, BlochTensor, DensityMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn up() -> Vec3 {
    Vec3::new(0.0, 0.0, 0.5)
}

pub fn singlet() -> BlochTensor {
    let mut b = BlochTensor::maximally_mixed(2);
    for a in ["x.x", "y.y", "z.z"] {
        b.set(&a.parse::<MultiIndex>().unwrap(), -0.25);
    }
    b
}

/// Haar-random pure state of `n` qubits, as a Bloch tensor.
pub fn random_pure<R: Rng>(n: usize, rng: &mut R) -> BlochTensor {
    let psi: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<C64> = psi.into_iter().map(|c| c / norm).collect();
    let ops = SpinOps::new(n).unwrap();
    bloch_from_density(&DensityMatrix::pure(&psi).unwrap(), &ops).unwrap()
}

/// Uniformly random proper rotation from a normalized quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    Mat3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

/// Applies `r` to the vector index of every qubit of `b`.
pub fn rotate_tensor(b: &BlochTensor, r: &Mat3) -> BlochTensor {
    let n = b.n_qubits();
    let mut c = b.coeffs().to_vec();
    for q in 0..n {
        let stride = 1usize << (2 * (n - 1 - q));
        let mut next = c.clone();
        for (flat, v) in next.iter_mut().enumerate() {
            let digit = (flat / stride) % 4;
            if digit == 0 {
                continue;
            }
            let base = flat - digit * stride;
            *v = (0..3).map(|i| r.get(digit - 1, i) * c[base + (i + 1) * stride]).sum();
        }
        c = next;
    }
    BlochTensor::from_coeffs(n, c).unwrap()
}

pub fn random_point<R: Rng>(n: usize, half_width: f64, rng: &mut R) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(-half_width..half_width),
                rng.gen_range(-half_width..half_width),
                rng.gen_range(-half_width..half_width),
            )
        })
        .collect()
}
