use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hyperdual::HyperDual;
use crate::algebra::{levi_civita, Mat3, MultiIndex, Snapshot, SpinOps, SystemSpec, Vec3};
use crate::error::{Error, Result};
use crate::phase::{estimate_difference, sample_ensemble, EstimatorOptions, PhaseDensity, SampleOptions};
use crate::reference::{quantum_generator, BlochTensor};
use crate::rng::{Domain, StreamKey};
use crate::sde::{
    cross_term, drift_snapshot, pair_diffusion, pair_divergence, step, weight_rate_snapshot, NoiseStreams,
};

fn check_n(rho: &PhaseDensity, z: &[Vec3], spec: &SystemSpec) -> Result<()> {
    if rho.n_qubits() != spec.n_qubits() || z.len() != spec.n_qubits() {
        return Err(Error::Argument(format!(
            "density ({}), point ({}) and system ({}) disagree on qubit count",
            rho.n_qubits(),
            z.len(),
            spec.n_qubits()
        )));
    }
    Ok(())
}

/// Right-hand side of the phase-space master equation: precession of every
/// qubit plus, for each coupled pair, the first- and second-order coupling
/// terms.
pub fn fp_apply(rho: &PhaseDensity, z: &[Vec3], spec: &SystemSpec, t: f64) -> Result<f64> {
    check_n(rho, z, spec)?;
    let snap = spec.snapshot(t)?;
    let grads = (0..z.len()).map(|q| rho.gradient(z, q)).collect::<Result<Vec<_>>>()?;
    let mut out = 0.0;
    for (q, b) in snap.fields.iter().enumerate() {
        out += b.cross(&z[q]).dot(&grads[q]);
    }
    for p in &snap.pairs {
        let (sa, sb) = (z[p.a], z[p.b]);
        let h = rho.mixed_hessian(z, p.a, p.b)?;
        let va = sa.cross(&p.j.mul_vec(&sb));
        let vb = sb.cross(&p.jt.mul_vec(&sa));
        out -= va.dot(&grads[p.a]) + vb.dot(&grads[p.b]);
        let mut second = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e == 0.0 {
                        continue;
                    }
                    for l in 0..3 {
                        second += 0.25 * e * sa[j] * p.j.get(i, l) * h[k][l];
                        second += 0.25 * e * sb[j] * p.j.get(l, i) * h[l][k];
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                second += (vb[j] * sa[i] + va[i] * sb[j]) * h[i][j];
            }
        }
        out += second;
    }
    Ok(out)
}

fn seeded(z: &[Vec3], c1: Option<usize>, c2: Option<usize>) -> Vec<Vec3<HyperDual>> {
    z.iter()
        .enumerate()
        .map(|(q, s)| {
            Vec3(std::array::from_fn(|i| {
                let c = 3 * q + i;
                HyperDual::new(
                    s[i],
                    if c1 == Some(c) { 1.0 } else { 0.0 },
                    if c2 == Some(c) { 1.0 } else { 0.0 },
                    0.0,
                )
            }))
        })
        .collect()
}

/// Generalized Fokker–Planck operator of the implemented SDE applied to ρ at
/// z: −∂_k(f_k ρ) + ½ ∂_k∂_l(D_kl ρ) + h ρ, with exact derivatives of the
/// engine's own drift and diffusion functions.
pub fn sde_fp_apply(rho: &PhaseDensity, z: &[Vec3], spec: &SystemSpec, t: f64) -> Result<f64> {
    check_n(rho, z, spec)?;
    let snap = spec.snapshot(t)?;
    Ok(sde_fp_snapshot(rho, z, &snap))
}

fn sde_fp_snapshot(rho: &PhaseDensity, z: &[Vec3], snap: &Snapshot) -> f64 {
    let n = z.len();
    let mut out = weight_rate_snapshot(z, snap) * rho.eval(z);
    let mut v = vec![Vec3::<HyperDual>::zero(); n];
    for c in 0..3 * n {
        let zd = seeded(z, Some(c), None);
        let mut u = 0;
        drift_snapshot(&zd, snap, &mut v, &mut u);
        out -= (v[c / 3][c % 3] * rho.eval_generic(&zd)).e1;
    }
    for p in &snap.pairs {
        let coords: Vec<usize> = (0..3).map(|i| 3 * p.a + i).chain((0..3).map(|i| 3 * p.b + i)).collect();
        let comp = |col: &(Vec3<HyperDual>, Vec3<HyperDual>), c: usize| {
            if c / 3 == p.a {
                col.0[c % 3]
            } else {
                col.1[c % 3]
            }
        };
        for &k in &coords {
            for &l in &coords {
                let zd = seeded(z, Some(k), Some(l));
                let cols = pair_diffusion(&zd[p.a], &zd[p.b], &p.j, &p.jt);
                let mut d = HyperDual::default();
                for col in &cols {
                    d += comp(col, k) * comp(col, l);
                }
                out += 0.5 * (d * rho.eval_generic(&zd)).e12;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorReport {
    /// Worst |LHS − RHS| over both operator forms.
    pub max_discrepancy: f64,
    /// Worst discrepancy of the literal master-equation form.
    pub master_discrepancy: f64,
    /// Worst discrepancy of the operator derived from the SDE coefficients.
    pub sde_discrepancy: f64,
    pub trials: usize,
    pub points: usize,
    pub tol: f64,
    pub pass: bool,
}

impl GeneratorReport {
    fn merge(self, o: &GeneratorReport) -> Self {
        let master = self.master_discrepancy.max(o.master_discrepancy);
        let sde = self.sde_discrepancy.max(o.sde_discrepancy);
        let max = master.max(sde);
        GeneratorReport {
            max_discrepancy: max,
            master_discrepancy: master,
            sde_discrepancy: sde,
            trials: self.trials + o.trials,
            points: self.points + o.points,
            tol: self.tol,
            pass: max <= self.tol,
        }
    }
}

impl std::fmt::Display for GeneratorReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "generator equivalence: {}", if self.pass { "PASS" } else { "FAIL" })?;
        writeln!(f, "  trials: {}  points: {}  tolerance: {:e}", self.trials, self.points, self.tol)?;
        writeln!(f, "  master-equation form: max |diff| = {:e}", self.master_discrepancy)?;
        write!(f, "  SDE operator form:    max |diff| = {:e}", self.sde_discrepancy)
    }
}

/// Random normalized correlator tensor with entries in [−½, ½].
pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> BlochTensor {
    let coeffs = (0..1usize << (2 * n))
        .map(|k| if k == 0 { 1.0 } else { rng.gen_range(-0.5..0.5) })
        .collect();
    BlochTensor::from_coeffs(n, coeffs).expect("length matches")
}

/// Constant system with field and coupling entries uniform in [−1, 1].
pub fn random_spec<R: Rng>(n: usize, pairs: &[(usize, usize)], rng: &mut R) -> Result<SystemSpec> {
    let mut r = || rng.gen_range(-1.0..1.0);
    let fields = (0..n).map(|_| Vec3::new(r(), r(), r())).collect();
    let pairs = pairs
        .iter()
        .map(|&(a, b)| (a, b, Mat3(std::array::from_fn(|_| std::array::from_fn(|_| r())))))
        .collect();
    SystemSpec::constant(n, fields, pairs)
}

fn random_point<R: Rng>(n: usize, half_width: f64, rng: &mut R) -> Vec<Vec3> {
    (0..n)
        .map(|_| Vec3(std::array::from_fn(|_| rng.gen_range(-half_width..half_width))))
        .collect()
}

/// Compares both phase-space operators applied to random quantum-state
/// densities against the promoted quantum generator L·b at random points
/// with components in [−2, 2].
pub fn verify_generator(
    spec: &SystemSpec,
    t: f64,
    trials: usize,
    points_per_trial: usize,
    tol: f64,
    seed: u64,
) -> Result<GeneratorReport> {
    let n = spec.n_qubits();
    let ops = SpinOps::new(n)?;
    let l = quantum_generator(spec, &ops, t)?;
    let snap = spec.snapshot(t)?;
    let key = StreamKey::derive(seed, Domain::Verifier, 0);
    let mut report = GeneratorReport {
        max_discrepancy: 0.0,
        master_discrepancy: 0.0,
        sde_discrepancy: 0.0,
        trials: 0,
        points: 0,
        tol,
        pass: true,
    };
    for trial in 0..trials {
        let mut rng = key.stream(trial as u64, 0);
        let b = random_state(n, &mut rng);
        let rho = PhaseDensity::from_bloch(&b)?;
        let target = PhaseDensity::promote(&l.apply(&b));
        let points: Vec<Vec<Vec3>> = (0..points_per_trial).map(|_| random_point(n, 2.0, &mut rng)).collect();
        let (master, sde) = points
            .par_iter()
            .map(|z| {
                let expect = target.eval(z);
                let master = (fp_apply(&rho, z, spec, t).expect("dimensions checked") - expect).abs();
                let sde = (sde_fp_snapshot(&rho, z, &snap) - expect).abs();
                (master, sde)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        report = report.merge(&GeneratorReport {
            max_discrepancy: master.max(sde),
            master_discrepancy: master,
            sde_discrepancy: sde,
            trials: 1,
            points: points_per_trial,
            tol,
            pass: true,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    pub max_rel_error: f64,
    pub trials: usize,
    pub tol: f64,
    pub pass: bool,
}

impl std::fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "divergence closed form: {}", if self.pass { "PASS" } else { "FAIL" })?;
        write!(
            f,
            "  trials: {}  max relative error: {:e}  tolerance: {:e}",
            self.trials, self.max_rel_error, self.tol
        )
    }
}

/// Five-point central difference of Σ_i ∂F_i/∂S_i for one member of a pair.
pub fn divergence_fd(sa: &Vec3, sb: &Vec3, j: &Mat3, second: bool, step: f64) -> Result<f64> {
    let spec = SystemSpec::constant(2, vec![Vec3::zero(); 2], vec![(0, 1, *j)])?;
    let snap = spec.snapshot(0.0)?;
    let Some(pair) = snap.pairs.first() else {
        return Ok(0.0);
    };
    let mut div = 0.0;
    for i in 0..3 {
        let at = |d: f64| {
            let (mut a, mut b) = (*sa, *sb);
            if second {
                b[i] += d;
            } else {
                a[i] += d;
            }
            cross_term(&a, &b, pair, second)[i]
        };
        div += (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2.0 * step)) / (12.0 * step);
    }
    Ok(div)
}

/// Closed-form divergence of the double cross-product drift terms against
/// finite differences, at random couplings and points with |S| ≥ 0.1.
pub fn verify_divergence(trials: usize, tol: f64, seed: u64) -> Result<DivergenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let j = Mat3(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))));
        let mut draw = || loop {
            let s = Vec3(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            if s.norm() >= 0.1 {
                return s;
            }
        };
        let (sa, sb) = (draw(), draw());
        let spec = SystemSpec::constant(2, vec![Vec3::zero(); 2], vec![(0, 1, j)])?;
        let snap = spec.snapshot(0.0)?;
        let (da, db) = match snap.pairs.first() {
            Some(p) => pair_divergence(&sa, &sb, p),
            None => (0.0, 0.0),
        };
        for (closed, second) in [(da, false), (db, true)] {
            let fd = divergence_fd(&sa, &sb, &j, second, 1e-4)?;
            worst = worst.max((fd - closed).abs() / closed.abs().max(1.0));
        }
    }
    Ok(DivergenceReport {
        max_rel_error: worst,
        trials,
        tol,
        pass: worst <= tol,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakStepRow {
    pub observable: MultiIndex,
    pub measured: f64,
    pub stderr: f64,
    pub expected: f64,
    pub tol: f64,
}

impl WeakStepRow {
    pub fn pass(&self) -> bool {
        (self.measured - self.expected).abs() <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakStepReport {
    pub rows: Vec<WeakStepRow>,
    pub pass: bool,
}

impl std::fmt::Display for WeakStepReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "weak one-step consistency: {}", if self.pass { "PASS" } else { "FAIL" })?;
        for r in &self.rows {
            write!(
                f,
                "\n  {:<8} measured {:+.4e} ± {:.2e}  expected {:+.4e}  {}",
                r.observable.name(),
                r.measured,
                r.stderr,
                r.expected,
                if r.pass() { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// One Euler–Maruyama step from a fresh sample: the paired finite difference
/// of every first- and second-order estimate is compared with L·b.
pub fn verify_weak_step(
    spec: &SystemSpec,
    b0: &BlochTensor,
    dt: f64,
    count: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<WeakStepReport> {
    let n = spec.n_qubits();
    let ops = SpinOps::new(n)?;
    let db = quantum_generator(spec, &ops, 0.0)?.apply(b0);
    let rho = PhaseDensity::from_bloch(b0)?;
    let before = sample_ensemble(&rho, &SampleOptions::new(1.0, count, seed))?;
    let mut after = before.clone();
    let mut noise = NoiseStreams::new(seed, 0, count);
    step(&mut after, spec, 0.0, dt, &mut noise)?;
    let observables: Vec<MultiIndex> = MultiIndex::all(n).filter(|m| (1..=2).contains(&m.weight())).collect();
    let diffs = estimate_difference(&before, &after, &observables, opts)?;
    let rows: Vec<WeakStepRow> = diffs
        .into_iter()
        .map(|d| {
            let stderr = d.stderr / dt;
            WeakStepRow {
                expected: db.get(&d.observable),
                measured: d.value / dt,
                tol: (4.0 * stderr).max(10.0 * dt),
                stderr,
                observable: d.observable,
            }
        })
        .collect();
    let pass = rows.iter().all(WeakStepRow::pass);
    Ok(WeakStepReport { rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hamiltonian_gives_zero() {
        let spec = SystemSpec::free(2).unwrap();
        let r = verify_generator(&spec, 0.0, 2, 10, 1e-8, 1).unwrap();
        assert_eq!(r.max_discrepancy, 0.0);
        assert!(r.pass);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = PhaseDensity::from_bloch(&random_state(2, &mut rng)).unwrap();
        let z = random_point(2, 2.0, &mut rng);
        assert_eq!(fp_apply(&rho, &z, &spec, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn precession_term_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = Vec3::new(0.3, -0.7, 1.1);
        let spec = SystemSpec::constant(1, vec![b], vec![]).unwrap();
        let rho = PhaseDensity::from_bloch(&random_state(1, &mut rng)).unwrap();
        let z = random_point(1, 2.0, &mut rng);
        let direct = b.cross(&z[0]).dot(&rho.gradient(&z, 0).unwrap());
        assert!((fp_apply(&rho, &z, &spec, 0.0).unwrap() - direct).abs() < 1e-14);
        assert!((sde_fp_apply(&rho, &z, &spec, 0.0).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn two_qubit_random_spec() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let spec = random_spec(2, &[(0, 1)], &mut rng).unwrap();
        let r = verify_generator(&spec, 0.0, 3, 20, 1e-8, 42).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn divergence_reference_point() {
        let fd = divergence_fd(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0), &Mat3::identity(), false, 1e-4).unwrap();
        assert!((fd + 2.0).abs() < 1e-8);
        let r = verify_divergence(50, 1e-6, 3).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn zero_coupling_divergence_is_zero() {
        let fd = divergence_fd(&Vec3::new(1.0, 0.5, 0.0), &Vec3::new(0.0, 1.0, 0.3), &Mat3::ZERO, true, 1e-4).unwrap();
        assert_eq!(fd, 0.0);
    }
}
