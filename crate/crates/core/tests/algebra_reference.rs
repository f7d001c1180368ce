mod common;

use proptest::prelude::*;
use qsde::algebra::{Mat3, Schedule, SpinOps, SystemSpec, Vec3};
use qsde::reference::{
    bloch_from_density, density_from_bloch, evolve_bloch_series, evolve_von_neumann_series, quantum_generator,
    BlochTensor,
};
use qsde::verify::random_spec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-10.0..10.0f64).prop_map(Vec3)
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-3.0..3.0f64)).prop_map(Mat3)
}

proptest! {
    #[test]
    fn lagrange_identity(a in vec3(), b in vec3()) {
        let lhs = a.cross(&b).norm_sq() + a.dot(&b).powi(2);
        let rhs = a.norm_sq() * b.norm_sq();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn cross_is_antisymmetric_and_orthogonal(a in vec3(), b in vec3()) {
        let c = a.cross(&b);
        prop_assert_eq!(c, -b.cross(&a));
        prop_assert!(a.dot(&c).abs() <= 1e-12 * (a.norm_sq() * b.norm()).max(1.0));
    }

    #[test]
    fn transpose_is_an_involution(m in mat3()) {
        prop_assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn schedule_lookup_is_left_closed(gaps in prop::collection::vec(0.01..2.0f64, 1..6), probe in 0.0..1.0f64) {
        let mut starts = vec![0.0];
        for g in &gaps {
            starts.push(starts.last().unwrap() + g);
        }
        let s = Schedule::new(starts.iter().enumerate().map(|(k, &t)| (t, k)).collect()).unwrap();
        for (k, &t) in starts.iter().enumerate() {
            prop_assert_eq!(*s.at(t).unwrap(), k);
        }
        let t = probe * (starts.last().unwrap() + 1.0);
        let expect = starts.iter().rposition(|&st| st <= t).unwrap();
        prop_assert_eq!(*s.at(t).unwrap(), expect);
        prop_assert!(s.at(-1e-9).is_err());
    }

    #[test]
    fn bloch_density_round_trip(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = common::random_pure(n, &mut rng);
        let ops = SpinOps::new(n).unwrap();
        let back = bloch_from_density(&density_from_bloch(&b, &ops).unwrap(), &ops).unwrap();
        prop_assert!(b.max_abs_diff(&back) <= 1e-12);
    }
}

#[test]
fn generator_conserves_purity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 1usize..=3 {
        let pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|q| (q, q + 1)).collect();
        let spec = random_spec(n, &pairs, &mut rng).unwrap();
        let ops = SpinOps::new(n).unwrap();
        let l = quantum_generator(&spec, &ops, 0.0).unwrap();
        for _ in 0..5 {
            let b = qsde::verify::random_state(n, &mut rng);
            let db = l.apply(&b);
            let d_purity: f64 = b
                .coeffs()
                .iter()
                .zip(db.coeffs())
                .enumerate()
                .map(|(flat, (x, dx))| 2.0 * x * dx * 4f64.powi(qsde::algebra::flat_weight(n, flat) as i32))
                .sum();
            assert!(d_purity.abs() <= 1e-12, "n={n}: {d_purity}");
            assert_eq!(db.coeffs()[0], 0.0);
        }
    }
}

#[test]
fn evolution_paths_commute_with_the_bloch_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let j = Schedule::new(vec![(0.0, Mat3::diagonal(0.4, -0.2, 0.7)), (0.13, Mat3::identity().scaled(0.5))]).unwrap();
    let fields = vec![
        Schedule::new(vec![(0.0, Vec3::new(0.0, 0.0, 1.0)), (0.07, Vec3::new(0.5, 0.0, 0.0))]).unwrap(),
        Schedule::constant(Vec3::new(0.1, -0.3, 0.2)),
    ];
    let spec = SystemSpec::new(2, fields, vec![qsde::algebra::PairCoupling { a: 0, b: 1, coupling: j }]).unwrap();
    let ops = SpinOps::new(2).unwrap();
    let b0 = common::random_pure(2, &mut rng);
    let times = [0.0, 0.05, 0.1, 0.2, 0.3];
    let via_bloch = evolve_bloch_series(&b0, &spec, &ops, &times, 1e-3).unwrap();
    let rho0 = density_from_bloch(&b0, &ops).unwrap();
    let via_rho = evolve_von_neumann_series(&rho0, &spec, &ops, &times, 1e-3).unwrap();
    for (b, r) in via_bloch.iter().zip(&via_rho) {
        let b2: BlochTensor = bloch_from_density(r, &ops).unwrap();
        assert!(b.max_abs_diff(&b2) <= 1e-8);
    }
}
