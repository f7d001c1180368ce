use crate::algebra::{MultiIndex, Vec3};

/// Radius below which a spin is treated as sitting on the kernel singularity.
pub const EPS_RADIUS: f64 = 1e-12;

/// 3 S / (4 |S|²), or `None` at radius underflow.
#[inline]
pub fn spin_kernel(s: Vec3) -> Option<Vec3> {
    let r2 = s.norm_sq();
    if !(r2.sqrt() > EPS_RADIUS) {
        return None;
    }
    Some(s.scale(0.75 / r2))
}

/// K_μ(z) = Π_{α∈μ} 3 S^α_{i_α} / (4 |S^α|²). `None` when a qubit in μ
/// underflows.
pub fn kernel(mi: &MultiIndex, z: &[Vec3]) -> Option<f64> {
    let mut k = 1.0;
    for (q, a) in mi.factors() {
        k *= spin_kernel(z[q])?[a.index()];
    }
    Some(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let z1: MultiIndex = "z.0".parse().unwrap();
        assert_eq!(kernel(&z1, &[Vec3::new(0.0, 0.0, 1.0), Vec3::zero()]), Some(0.75));
        assert_eq!(kernel(&MultiIndex::identity(2), &[Vec3::zero(), Vec3::zero()]), Some(1.0));
        let zz: MultiIndex = "z.z".parse().unwrap();
        let s = Vec3::new(0.0, 0.0, 2.0);
        assert_eq!(kernel(&zz, &[s, s]), Some(9.0 / 64.0));
    }

    #[test]
    fn underflow_only_matters_for_qubits_in_the_index() {
        let x0: MultiIndex = "x.0".parse().unwrap();
        let z = [Vec3::new(1.0, 0.0, 0.0), Vec3::zero()];
        assert_eq!(kernel(&x0, &z), Some(0.75));
        let x1: MultiIndex = "0.x".parse().unwrap();
        assert_eq!(kernel(&x1, &z), None);
    }

    #[test]
    fn unit_sphere_kernel_is_three_quarters_of_the_component() {
        let s = Vec3::new(0.6, 0.0, 0.8);
        let xz: MultiIndex = "x.z".parse().unwrap();
        let k = kernel(&xz, &[s, s]).unwrap();
        assert!((k - 9.0 / 16.0 * 0.6 * 0.8).abs() < 1e-15);
    }
}
