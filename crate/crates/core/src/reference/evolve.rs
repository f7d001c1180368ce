//! Fixed-step RK4 integration of the von Neumann equation and of the
//! equivalent correlator ODE.

use nalgebra::DVector;

use super::bloch::BlochTensor;
use super::density::DensityMatrix;
use super::generator::{build_hamiltonian, check_dims, quantum_generator};
use crate::algebra::{CMatrix, SpinOps, SystemSpec, C64};
use crate::error::{Error, Result};

/// Constant-parameter interval `[start, end)` split into `steps` equal steps
/// no longer than the requested `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Segment {
    pub fn h(&self) -> f64 {
        (self.end - self.start) / self.steps as f64
    }
}

/// Splits `[t0, t1]` at every schedule breakpoint and every extra stop.
pub fn segments(spec: &SystemSpec, t0: f64, t1: f64, dt: f64, stops: &[f64]) -> Result<Vec<Segment>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::Argument(format!("final time {t1} precedes start {t0}")));
    }
    let mut cuts: Vec<f64> = spec
        .breakpoints()
        .into_iter()
        .chain(stops.iter().copied())
        .filter(|&t| t > t0 && t < t1)
        .collect();
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len());
    let mut a = t0;
    for b in cuts {
        if b <= a {
            continue;
        }
        let steps = (((b - a) / dt) - 1e-9).ceil().max(1.0) as usize;
        out.push(Segment {
            start: a,
            end: b,
            steps,
        });
        a = b;
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Argument("output times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("output times must be non-decreasing".into()));
    }
    Ok(())
}

fn von_neumann_rhs(h: &CMatrix, rho: &CMatrix) -> CMatrix {
    (h * rho - rho * h) * C64::new(0.0, -1.0)
}

fn rk4_matrix(h: &CMatrix, rho: &CMatrix, dt: f64) -> CMatrix {
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = von_neumann_rhs(h, rho);
    let k2 = von_neumann_rhs(h, &(rho + &k1 * half));
    let k3 = von_neumann_rhs(h, &(rho + &k2 * half));
    let k4 = von_neumann_rhs(h, &(rho + &k3 * full));
    rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
}

/// Integrates dρ/dt = -i[H(t), ρ] from t = 0 and returns ρ at each of
/// `times`.
pub fn evolve_von_neumann_series(
    rho0: &DensityMatrix,
    spec: &SystemSpec,
    ops: &SpinOps,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    check_dims(spec, ops)?;
    check_times(times)?;
    if rho0.dim() != ops.dim() {
        return Err(Error::State("initial state dimension mismatch".into()));
    }
    let t_last = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut rho = rho0.matrix().clone();
    let mut pending = times.iter().peekable();
    while pending.next_if(|t| **t <= 0.0).is_some() {
        out.push(DensityMatrix::new_unchecked(rho.clone()));
    }
    for seg in segments(spec, 0.0, t_last, dt, times)? {
        let h = build_hamiltonian(spec, ops, seg.start)?;
        let step = seg.h();
        for _ in 0..seg.steps {
            rho = rk4_matrix(&h, &rho, step);
        }
        while pending.next_if(|t| **t <= seg.end).is_some() {
            out.push(DensityMatrix::new_unchecked(rho.clone()));
        }
    }
    Ok(out)
}

pub fn evolve_von_neumann(
    rho0: &DensityMatrix,
    spec: &SystemSpec,
    ops: &SpinOps,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let mut v = evolve_von_neumann_series(rho0, spec, ops, &[t_final], dt)?;
    Ok(v.pop().expect("one output"))
}

/// Integrates db/dt = L(t) b with RK4 and returns b at each of `times`.
pub fn evolve_bloch_series(
    b0: &BlochTensor,
    spec: &SystemSpec,
    ops: &SpinOps,
    times: &[f64],
    dt: f64,
) -> Result<Vec<BlochTensor>> {
    check_dims(spec, ops)?;
    check_times(times)?;
    if b0.n_qubits() != ops.n_qubits() {
        return Err(Error::State("initial tensor qubit count mismatch".into()));
    }
    let n = b0.n_qubits();
    let t_last = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut b = DVector::from_column_slice(b0.coeffs());
    let to_tensor = |v: &DVector<f64>| BlochTensor::from_coeffs(n, v.as_slice().to_vec()).expect("size");
    let mut pending = times.iter().peekable();
    while pending.next_if(|t| **t <= 0.0).is_some() {
        out.push(to_tensor(&b));
    }
    for seg in segments(spec, 0.0, t_last, dt, times)? {
        let gen = quantum_generator(spec, ops, seg.start)?;
        let l = gen.matrix();
        let h = seg.h();
        for _ in 0..seg.steps {
            let k1 = l * &b;
            let k2 = l * (&b + &k1 * (h / 2.0));
            let k3 = l * (&b + &k2 * (h / 2.0));
            let k4 = l * (&b + &k3 * h);
            b += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        while pending.next_if(|t| **t <= seg.end).is_some() {
            out.push(to_tensor(&b));
        }
    }
    Ok(out)
}

pub fn evolve_bloch(
    b0: &BlochTensor,
    spec: &SystemSpec,
    ops: &SpinOps,
    t_final: f64,
    dt: f64,
) -> Result<BlochTensor> {
    let mut v = evolve_bloch_series(b0, spec, ops, &[t_final], dt)?;
    Ok(v.pop().expect("one output"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Axis, Mat3, MultiIndex, PairCoupling, Schedule, Vec3};
    use crate::reference::density::{bloch_from_density, density_from_bloch};

    fn singlet() -> BlochTensor {
        let mut b = BlochTensor::maximally_mixed(2);
        for a in ["x", "y", "z"] {
            b.set(&format!("{a}.{a}").parse::<MultiIndex>().unwrap(), -0.25);
        }
        b
    }

    #[test]
    fn segments_split_at_breakpoints() {
        let j = Schedule::new(vec![(0.0, Mat3::identity()), (0.25, Mat3::ZERO)]).unwrap();
        let spec = SystemSpec::new(
            2,
            vec![Schedule::constant(Vec3::zero()); 2],
            vec![PairCoupling { a: 0, b: 1, coupling: j }],
        )
        .unwrap();
        let segs = segments(&spec, 0.0, 1.0, 0.1, &[0.5]).unwrap();
        let ends: Vec<f64> = segs.iter().map(|s| s.end).collect();
        assert_eq!(ends, vec![0.25, 0.5, 1.0]);
        assert_eq!(segs[0].steps, 3);
        assert_eq!(segs[2].steps, 5);
        assert!(segments(&spec, 0.0, 1.0, 0.0, &[]).is_err());
        assert_eq!(segments(&spec, 0.0, 1.0, 1e-4, &[]).unwrap().iter().map(|s| s.steps).sum::<usize>(), 10000);
    }

    #[test]
    fn free_evolution_is_identity() {
        let spec = SystemSpec::free(2).unwrap();
        let ops = SpinOps::new(2).unwrap();
        let b0 = singlet();
        let rho0 = density_from_bloch(&b0, &ops).unwrap();
        let rho = evolve_von_neumann(&rho0, &spec, &ops, 0.7, 1e-2).unwrap();
        assert_eq!(rho, rho0);
        assert_eq!(evolve_bloch(&b0, &spec, &ops, 0.7, 1e-2).unwrap(), b0);
    }

    #[test]
    fn precession_closed_form() {
        let w = 2.0;
        let spec = SystemSpec::constant(1, vec![Vec3::new(0.0, 0.0, w)], vec![]).unwrap();
        let ops = SpinOps::new(1).unwrap();
        let b0 = BlochTensor::product(&[Vec3::new(0.5, 0.0, 0.0)]);
        let rho0 = density_from_bloch(&b0, &ops).unwrap();
        let times = [0.0, 0.3, 1.0, 1.7];
        let rhos = evolve_von_neumann_series(&rho0, &spec, &ops, &times, 1e-3).unwrap();
        let bs = evolve_bloch_series(&b0, &spec, &ops, &times, 1e-3).unwrap();
        let x = MultiIndex::from_factors(1, &[(0, Axis::X)]).unwrap();
        let y = MultiIndex::from_factors(1, &[(0, Axis::Y)]).unwrap();
        for ((t, rho), b) in times.iter().zip(&rhos).zip(&bs) {
            let from_rho = bloch_from_density(rho, &ops).unwrap();
            for bt in [&from_rho, b] {
                assert!((bt.get(&x) - 0.5 * (w * t).cos()).abs() < 1e-10);
                assert!((bt.get(&y) + 0.5 * (w * t).sin()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singlet_is_stationary_under_exchange() {
        let spec = SystemSpec::constant(2, vec![Vec3::zero(); 2], vec![(0, 1, Mat3::identity().scaled(0.8))]).unwrap();
        let ops = SpinOps::new(2).unwrap();
        let rho0 = density_from_bloch(&singlet(), &ops).unwrap();
        let rho = evolve_von_neumann(&rho0, &spec, &ops, 1.0, 1e-3).unwrap();
        assert!((rho.matrix() - rho0.matrix()).iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn preserves_trace_hermiticity_and_purity() {
        let j = Mat3([[0.3, -0.2, 0.5], [0.1, 0.6, -0.4], [0.2, 0.0, -0.5]]);
        let spec = SystemSpec::constant(2, vec![Vec3::new(0.4, -0.3, 0.6), Vec3::new(-0.5, 0.2, 0.1)], vec![(0, 1, j)]).unwrap();
        let ops = SpinOps::new(2).unwrap();
        let b0 = BlochTensor::product(&[Vec3::new(0.0, 0.3, 0.4), Vec3::new(0.5, 0.0, 0.0)]);
        let rho0 = density_from_bloch(&b0, &ops).unwrap();
        let rho = evolve_von_neumann(&rho0, &spec, &ops, 1.0, 1e-3).unwrap();
        assert!(rho.hermiticity_error() < 1e-10);
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((rho.purity() - rho0.purity()).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_schedule_matches_piecewise_runs() {
        let f = Schedule::new(vec![(0.0, Vec3::new(0.0, 0.0, 1.0)), (0.4, Vec3::new(1.0, 0.0, 0.0))]).unwrap();
        let spec = SystemSpec::new(1, vec![f], vec![]).unwrap();
        let ops = SpinOps::new(1).unwrap();
        let b0 = BlochTensor::product(&[Vec3::new(0.5, 0.0, 0.0)]);
        let direct = evolve_bloch(&b0, &spec, &ops, 1.0, 7e-3).unwrap();

        let first = SystemSpec::constant(1, vec![Vec3::new(0.0, 0.0, 1.0)], vec![]).unwrap();
        let second = SystemSpec::constant(1, vec![Vec3::new(1.0, 0.0, 0.0)], vec![]).unwrap();
        let mid = evolve_bloch(&b0, &first, &ops, 0.4, 1e-4).unwrap();
        let end = evolve_bloch(&mid, &second, &ops, 0.6, 1e-4).unwrap();
        assert!(direct.max_abs_diff(&end) < 1e-9);
    }

    #[test]
    fn rejects_bad_step() {
        let spec = SystemSpec::free(1).unwrap();
        let ops = SpinOps::new(1).unwrap();
        let b0 = BlochTensor::maximally_mixed(1);
        assert!(evolve_bloch(&b0, &spec, &ops, 1.0, 0.0).is_err());
        assert!(evolve_bloch(&b0, &spec, &ops, 1.0, -1e-3).is_err());
    }
}
