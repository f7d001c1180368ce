//! Drift, diffusion and weight-rate terms, generic over the scalar type so the
//! verifier can differentiate exactly the code the integrator runs.

use crate::algebra::{ActivePair, Mat3, Scalar, Snapshot, SystemSpec, Vec3};
use crate::error::{Error, Result};
use crate::phase::EPS_RADIUS;

/// S/|S|, or zero (flagged) at radius underflow.
#[inline]
pub fn unit_or_zero<T: Scalar>(s: &Vec3<T>) -> (Vec3<T>, bool) {
    let r = s.norm();
    if !(r.re() > EPS_RADIUS) {
        return (Vec3::zero(), true);
    }
    (*s * (T::one() / r), false)
}

/// Drift contributions of one pair to qubits a and b, and the number of unit
/// vectors replaced by zero.
#[inline]
pub fn pair_drift<T: Scalar>(sa: &Vec3<T>, sb: &Vec3<T>, j: &Mat3, jt: &Mat3) -> (Vec3<T>, Vec3<T>, u32) {
    let (ua, fa_) = unit_or_zero(sa);
    let (ub, fb_) = unit_or_zero(sb);
    let a = j.mul_vec(&ub);
    let bv = jt.mul_vec(&ua);
    let va = sa.cross(&j.mul_vec(sb)).scale(5.0) + sa.cross(&a).cross(&a) + *sa * sa.norm_sq().scale(6.0) - sa.scale(0.5);
    let vb = sb.cross(&jt.mul_vec(sa)).scale(5.0) + sb.cross(&bv).cross(&bv) + *sb * sb.norm_sq().scale(6.0) - sb.scale(0.5);
    (va, vb, fa_ as u32 + fb_ as u32)
}

/// The eight diffusion columns of one pair as (column on a, column on b), in
/// draw order: η_a (x, y, z), η_b (x, y, z), ξ_1, ξ_2.
pub fn pair_diffusion<T: Scalar>(sa: &Vec3<T>, sb: &Vec3<T>, j: &Mat3, jt: &Mat3) -> [(Vec3<T>, Vec3<T>); 8] {
    let (ua, _) = unit_or_zero(sa);
    let (ub, _) = unit_or_zero(sb);
    let a = j.mul_vec(&ub);
    let bv = jt.mul_vec(&ua);
    let half = |k: usize| Vec3::<T>::from_f64(Vec3::unit(crate::algebra::Axis::ALL[k]).scale(0.5));
    let col = |k: usize| -> (Vec3<T>, Vec3<T>) {
        if k < 3 {
            (half(k).cross(sa), jt.mul_vec(&half(k)))
        } else {
            (j.mul_vec(&half(k - 3)), half(k - 3).cross(sb))
        }
    };
    [
        col(0),
        col(1),
        col(2),
        col(3),
        col(4),
        col(5),
        (sa.cross(&a), *sb * sb.norm()),
        (*sa * sa.norm(), sb.cross(&bv)),
    ]
}

/// h of one pair: −|J u_b|² − |Jᵀ u_a|² + 15(|S_a|² + |S_b|²) − 3/2.
#[inline]
pub fn pair_weight_rate<T: Scalar>(sa: &Vec3<T>, sb: &Vec3<T>, j: &Mat3, jt: &Mat3) -> T {
    let (ua, _) = unit_or_zero(sa);
    let (ub, _) = unit_or_zero(sb);
    let a = j.mul_vec(&ub);
    let bv = jt.mul_vec(&ua);
    (sa.norm_sq() + sb.norm_sq()).scale(15.0) - a.norm_sq() - bv.norm_sq() - T::from_f64(1.5)
}

/// Closed-form divergences (div_a F^a, div_b F^b) of the double cross-product
/// terms.
pub fn pair_divergence(sa: &Vec3, sb: &Vec3, pair: &ActivePair) -> (f64, f64) {
    let (ua, _) = unit_or_zero(sa);
    let (ub, _) = unit_or_zero(sb);
    (-2.0 * pair.j.mul_vec(&ub).norm_sq(), -2.0 * pair.jt.mul_vec(&ua).norm_sq())
}

/// The double cross-product term F^a = (S_a ∧ J u_b) ∧ J u_b (or its b
/// counterpart with Jᵀ u_a when `second` is set).
pub fn cross_term(sa: &Vec3, sb: &Vec3, pair: &ActivePair, second: bool) -> Vec3 {
    let (ua, _) = unit_or_zero(sa);
    let (ub, _) = unit_or_zero(sb);
    if second {
        let bv = pair.jt.mul_vec(&ua);
        sb.cross(&bv).cross(&bv)
    } else {
        let a = pair.j.mul_vec(&ub);
        sa.cross(&a).cross(&a)
    }
}

/// Full drift at z for the parameters in `snap`; adds the number of unit
/// vector substitutions to `underflow`.
pub fn drift_snapshot<T: Scalar>(z: &[Vec3<T>], snap: &Snapshot, out: &mut [Vec3<T>], underflow: &mut u32) {
    for (q, v) in out.iter_mut().enumerate() {
        *v = -Vec3::<T>::from_f64(snap.fields[q]).cross(&z[q]);
    }
    for p in &snap.pairs {
        let (va, vb, u) = pair_drift(&z[p.a], &z[p.b], &p.j, &p.jt);
        out[p.a] += va;
        out[p.b] += vb;
        *underflow += u;
    }
}

pub fn weight_rate_snapshot<T: Scalar>(z: &[Vec3<T>], snap: &Snapshot) -> T {
    let mut h = T::zero();
    for p in &snap.pairs {
        h += pair_weight_rate(&z[p.a], &z[p.b], &p.j, &p.jt);
    }
    h
}

fn check_point(z: &[Vec3], spec: &SystemSpec) -> Result<()> {
    if z.len() != spec.n_qubits() {
        return Err(Error::Argument(format!(
            "point has {} spins, system has {} qubits",
            z.len(),
            spec.n_qubits()
        )));
    }
    Ok(())
}

/// Drift velocity of every spin at time t.
pub fn drift(z: &[Vec3], spec: &SystemSpec, t: f64) -> Result<Vec<Vec3>> {
    check_point(z, spec)?;
    let snap = spec.snapshot(t)?;
    let mut out = vec![Vec3::zero(); z.len()];
    let mut u = 0;
    drift_snapshot(z, &snap, &mut out, &mut u);
    Ok(out)
}

/// Weight growth rate h(z, t).
pub fn weight_rate(z: &[Vec3], spec: &SystemSpec, t: f64) -> Result<f64> {
    check_point(z, spec)?;
    Ok(weight_rate_snapshot(z, &spec.snapshot(t)?))
}
