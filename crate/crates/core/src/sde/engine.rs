use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::fields::unit_or_zero;
use crate::algebra::{MultiIndex, Snapshot, SystemSpec, Vec3};
use crate::error::{Error, Result};
use crate::phase::{
    estimate, sample_ensemble, Ensemble, EnsembleStats, EstimatorOptions, PhaseDensity, SampleOptions, SamplingScheme,
};
use crate::reference::BlochTensor;
use crate::rng::{Domain, StreamKey};

/// Per-trajectory noise streams for one sampling epoch.
#[derive(Clone, Debug)]
pub struct NoiseStreams {
    key: StreamKey,
    word_pos: Vec<u128>,
}

impl NoiseStreams {
    pub fn new(seed: u64, epoch: u32, count: usize) -> Self {
        NoiseStreams {
            key: StreamKey::derive(seed, Domain::Noise, epoch),
            word_pos: vec![0; count],
        }
    }

    pub fn len(&self) -> usize {
        self.word_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_pos.is_empty()
    }
}

#[inline]
fn normal3(rng: &mut ChaCha8Rng, sd: f64) -> Vec3 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x * sd, y * sd, z * sd)
}

/// One Itô Euler–Maruyama step of a single trajectory. `z0` is scratch space
/// of the same length as `z`. Returns the number of unit-vector underflows.
#[inline]
fn step_point(z: &mut [Vec3], z0: &mut [Vec3], w: &mut f64, snap: &Snapshot, dt: f64, sd: f64, rng: &mut ChaCha8Rng) -> u32 {
    z0.copy_from_slice(z);
    for (q, s) in z.iter_mut().enumerate() {
        let b = snap.fields[q];
        if b != Vec3::zero() {
            *s -= b.cross(&z0[q]).scale(dt);
        }
    }
    let mut h = 0.0;
    let mut under = 0;
    for p in &snap.pairs {
        let sa = z0[p.a];
        let sb = z0[p.b];
        let eta_a = normal3(rng, sd);
        let eta_b = normal3(rng, sd);
        let x1: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
        let x2: f64 = rng.sample::<f64, _>(StandardNormal) * sd;

        let (ua, fa) = unit_or_zero(&sa);
        let (ub, fb) = unit_or_zero(&sb);
        under += fa as u32 + fb as u32;
        let a = p.j.mul_vec(&ub);
        let bv = p.jt.mul_vec(&ua);
        let ra2 = sa.norm_sq();
        let rb2 = sb.norm_sq();
        let sa_a = sa.cross(&a);
        let sb_b = sb.cross(&bv);

        let va = sa.cross(&p.j.mul_vec(&sb)).scale(5.0) + sa_a.cross(&a) + sa.scale(6.0 * ra2 - 0.5);
        let vb = sb.cross(&p.jt.mul_vec(&sa)).scale(5.0) + sb_b.cross(&bv) + sb.scale(6.0 * rb2 - 0.5);
        let na = eta_a.scale(0.5).cross(&sa) + p.j.mul_vec(&eta_b).scale(0.5) + sa_a.scale(x1) + sa.scale(ra2.sqrt() * x2);
        let nb = eta_b.scale(0.5).cross(&sb) + p.jt.mul_vec(&eta_a).scale(0.5) + sb_b.scale(x2) + sb.scale(rb2.sqrt() * x1);

        z[p.a] += va.scale(dt) + na;
        z[p.b] += vb.scale(dt) + nb;
        h += 15.0 * (ra2 + rb2) - a.norm_sq() - bv.norm_sq() - 1.5;
    }
    if h != 0.0 {
        *w *= (h * dt).exp();
    }
    under
}

/// Advances every live trajectory through consecutive runs of identical
/// parameters. Returns the number of unit-vector underflows.
fn advance_segments(ens: &mut Ensemble, noise: &mut NoiseStreams, segments: &[(u64, Snapshot)], dt: f64) -> Result<u64> {
    if noise.len() != ens.len() {
        return Err(Error::Argument(format!(
            "{} noise streams for {} trajectories",
            noise.len(),
            ens.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let n = ens.n_qubits();
    let sd = dt.sqrt();
    let key = noise.key;
    let (positions, weights, diverged) = ens.parts_mut();
    let under = positions
        .par_chunks_mut(n)
        .zip(weights.par_iter_mut())
        .zip(diverged.par_iter_mut())
        .zip(noise.word_pos.par_iter_mut())
        .enumerate()
        .with_min_len(64)
        .map(|(i, (((z, w), dead), pos))| {
            if *dead {
                return 0u64;
            }
            let mut rng = key.stream(i as u64, *pos);
            let mut z0 = z.to_vec();
            let mut under = 0u64;
            'outer: for (len, snap) in segments {
                for _ in 0..*len {
                    under += step_point(z, &mut z0, w, snap, dt, sd, &mut rng) as u64;
                    if !w.is_finite() || !z.iter().all(Vec3::is_finite) {
                        *dead = true;
                        *w = 0.0;
                        break 'outer;
                    }
                }
            }
            *pos = rng.get_word_pos();
            under
        })
        .sum();
    Ok(under)
}

/// One step from time t.
pub fn step(ens: &mut Ensemble, spec: &SystemSpec, t: f64, dt: f64, noise: &mut NoiseStreams) -> Result<u64> {
    check_ensemble(ens, spec)?;
    let snap = spec.snapshot(t)?;
    advance_segments(ens, noise, &[(1, snap)], dt)
}

/// `n_steps` steps starting at step index `first` (time first·dt).
pub fn advance(ens: &mut Ensemble, spec: &SystemSpec, first: u64, n_steps: u64, dt: f64, noise: &mut NoiseStreams) -> Result<u64> {
    check_ensemble(ens, spec)?;
    let segments = snapshot_runs(spec, first, n_steps, dt)?;
    advance_segments(ens, noise, &segments, dt)
}

fn check_ensemble(ens: &Ensemble, spec: &SystemSpec) -> Result<()> {
    if ens.n_qubits() != spec.n_qubits() {
        return Err(Error::Argument(format!(
            "ensemble has {} qubits, system has {}",
            ens.n_qubits(),
            spec.n_qubits()
        )));
    }
    Ok(())
}

fn snapshot_runs(spec: &SystemSpec, first: u64, n_steps: u64, dt: f64) -> Result<Vec<(u64, Snapshot)>> {
    let mut runs: Vec<(u64, Snapshot)> = Vec::new();
    for k in first..first + n_steps {
        let snap = spec.snapshot(k as f64 * dt)?;
        match runs.last_mut() {
            Some((len, last)) if *last == snap => *len += 1,
            _ => runs.push((1, snap)),
        }
    }
    Ok(runs)
}

/// Estimates the full tensor from `ens` and draws a fresh ensemble from it.
pub fn reset(ens: &Ensemble, opts: &EstimatorOptions, sample: &SampleOptions) -> Result<Ensemble> {
    let b = estimate_tensor(ens, opts).map_err(|e| match e {
        Error::NormalizationCollapse(_) => Error::EnsembleExhausted,
        e => e,
    })?;
    sample_ensemble(&PhaseDensity::promote(&b), sample)
}

/// All 4^N correlators with the normalization slot set to 1.
pub fn estimate_tensor(ens: &Ensemble, opts: &EstimatorOptions) -> Result<BlochTensor> {
    let n = ens.n_qubits();
    let all: Vec<MultiIndex> = MultiIndex::all(n).collect();
    let stats = estimate(ens, &all, opts)?;
    let mut coeffs = stats.values();
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::EnsembleExhausted);
    }
    coeffs[0] = 1.0;
    BlochTensor::from_coeffs(n, coeffs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub t_final: f64,
    pub output_every: u64,
    pub reset_every: Option<u64>,
    /// Cadence (in steps) of the extra ESS samples in [`RunOutput::ess_trace`].
    pub diagnostics_every: Option<u64>,
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
    pub sampling: SamplingScheme,
    /// Empty means every non-trivial correlator.
    pub observables: Vec<MultiIndex>,
    pub estimator: EstimatorOptions,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(dt: f64, t_final: f64, count: usize, seed: u64) -> Self {
        RunConfig {
            dt,
            t_final,
            output_every: 1,
            reset_every: None,
            diagnostics_every: None,
            count,
            radius: 1.0,
            seed,
            sampling: SamplingScheme::Independent,
            observables: Vec::new(),
            estimator: EstimatorOptions::default(),
            workers: None,
        }
    }

    pub fn n_steps(&self) -> Result<u64> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Argument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Argument(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::Argument(format!(
                "t_final {} is not a whole number of steps of {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as u64)
    }

    pub fn validate(&self) -> Result<()> {
        self.n_steps()?;
        if self.output_every == 0 {
            return Err(Error::Argument("output_every must be at least 1".into()));
        }
        if self.reset_every == Some(0) || self.diagnostics_every == Some(0) {
            return Err(Error::Argument("reset and diagnostics cadences must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Argument("workers must be at least 1".into()));
        }
        self.estimator.validate()
    }

    pub fn sample_options(&self, epoch: u32) -> SampleOptions {
        SampleOptions {
            radius: self.radius,
            inner_radius: 0.0,
            count: self.count,
            seed: self.seed,
            epoch,
            scheme: self.sampling,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub step: u64,
    pub t: f64,
    pub stats: EnsembleStats,
    /// Unit-vector underflows in the drift since the previous record.
    pub drift_underflow: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResetEvent {
    pub step: u64,
    pub t: f64,
    pub ess_before: f64,
    pub ess_after: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EssSample {
    pub step: u64,
    pub t: f64,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub observables: Vec<MultiIndex>,
    pub records: Vec<Record>,
    pub resets: Vec<ResetEvent>,
    pub ess_trace: Vec<EssSample>,
    pub drift_underflow: u64,
    pub diverged: usize,
}

/// Samples the initial state and integrates to `t_final`, recording
/// estimates every `output_every` steps and resampling every `reset_every`.
pub fn run(spec: &SystemSpec, b0: &BlochTensor, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if b0.n_qubits() != spec.n_qubits() {
        return Err(Error::Argument(format!(
            "initial state has {} qubits, system has {}",
            b0.n_qubits(),
            spec.n_qubits()
        )));
    }
    let rho = PhaseDensity::from_bloch(b0)?;
    match cfg.workers {
        None => run_inner(spec, &rho, cfg),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(|| run_inner(spec, &rho, cfg)),
    }
}

fn ess_of(ens: &Ensemble, opts: &EstimatorOptions) -> f64 {
    estimate(ens, &[], opts).map(|s| s.ess).unwrap_or(0.0)
}

fn run_inner(spec: &SystemSpec, rho: &PhaseDensity, cfg: &RunConfig) -> Result<RunOutput> {
    let n = spec.n_qubits();
    let observables: Vec<MultiIndex> = if cfg.observables.is_empty() {
        MultiIndex::all(n).skip(1).collect()
    } else {
        cfg.observables.clone()
    };
    let total = cfg.n_steps()?;
    let mut epoch = 0u32;
    let mut ens = sample_ensemble(rho, &cfg.sample_options(epoch))?;
    let mut noise = NoiseStreams::new(cfg.seed, epoch, ens.len());
    let mut out = RunOutput {
        observables: observables.clone(),
        records: Vec::new(),
        resets: Vec::new(),
        ess_trace: Vec::new(),
        drift_underflow: 0,
        diverged: 0,
    };
    let mut pending_under = 0u64;
    let mut diverged_before = 0usize;
    let due = |k: u64, every: Option<u64>| every.is_some_and(|e| k.is_multiple_of(e));

    let mut k = 0u64;
    loop {
        let t = k as f64 * cfg.dt;
        if k.is_multiple_of(cfg.output_every) || k == total {
            let stats = estimate(&ens, &observables, &cfg.estimator)?;
            out.records.push(Record {
                step: k,
                t,
                stats,
                drift_underflow: pending_under,
            });
            pending_under = 0;
        }
        if due(k, cfg.diagnostics_every) {
            out.ess_trace.push(EssSample { step: k, t, ess: ess_of(&ens, &cfg.estimator) });
        }
        if k == total {
            break;
        }
        if k > 0 && due(k, cfg.reset_every) {
            let ess_before = ess_of(&ens, &cfg.estimator);
            diverged_before += ens.diverged_count();
            epoch += 1;
            ens = reset(&ens, &cfg.estimator, &cfg.sample_options(epoch))?;
            noise = NoiseStreams::new(cfg.seed, epoch, ens.len());
            out.resets.push(ResetEvent {
                step: k,
                t,
                ess_before,
                ess_after: ess_of(&ens, &cfg.estimator),
            });
        }
        let mut next = total.min((k / cfg.output_every + 1) * cfg.output_every);
        for every in [cfg.reset_every, cfg.diagnostics_every].into_iter().flatten() {
            next = next.min((k / every + 1) * every);
        }
        let under = advance(&mut ens, spec, k, next - k, cfg.dt, &mut noise)?;
        pending_under += under;
        out.drift_underflow += under;
        k = next;
    }
    out.diverged = diverged_before + ens.diverged_count();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Mat3;
    use crate::phase::{sample_initial, EnsembleMeta, PhasePoint, Trajectory};
    use crate::sde::fields::{drift, pair_diffusion, weight_rate};

    #[test]
    fn free_system_does_not_move() {
        let spec = SystemSpec::free(2).unwrap();
        let rho = PhaseDensity::from_bloch(&BlochTensor::product(&[Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.5, 0.0, 0.0)])).unwrap();
        let mut ens = sample_initial(&rho, 1.0, 100, 4).unwrap();
        let before = ens.clone();
        let mut noise = NoiseStreams::new(4, 0, ens.len());
        advance(&mut ens, &spec, 0, 10, 0.37, &mut noise).unwrap();
        assert_eq!(ens, before);
    }

    #[test]
    fn single_step_matches_drift_and_diffusion_columns() {
        let j = Mat3([[0.3, -0.2, 0.5], [0.1, 0.9, -0.4], [0.0, 0.2, -0.7]]);
        let spec = SystemSpec::constant(2, vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.4, 0.0, 0.5)], vec![(0, 1, j)]).unwrap();
        let z = vec![Vec3::new(0.3, -0.5, 0.2), Vec3::new(0.6, 0.1, -0.4)];
        let ens0 = Ensemble::from_trajectories(
            2,
            vec![Trajectory { point: PhasePoint(z.clone()), weight: 0.7 }],
            EnsembleMeta::default(),
        )
        .unwrap();
        let dt = 1e-3;
        let mut ens = ens0.clone();
        let mut noise = NoiseStreams::new(9, 0, 1);
        step(&mut ens, &spec, 0.0, dt, &mut noise).unwrap();

        // replay the same draws
        let mut rng = NoiseStreams::new(9, 0, 1).key.stream(0, 0);
        let draws: Vec<f64> = (0..8).map(|_| rng.sample::<f64, _>(StandardNormal) * dt.sqrt()).collect();
        let v = drift(&z, &spec, 0.0).unwrap();
        let cols = pair_diffusion(&z[0], &z[1], &j, &j.transpose());
        let mut expect = [z[0] + v[0].scale(dt), z[1] + v[1].scale(dt)];
        for (c, d) in cols.iter().zip(&draws) {
            expect[0] += c.0.scale(*d);
            expect[1] += c.1.scale(*d);
        }
        for q in 0..2 {
            assert!((ens.point(0)[q] - expect[q]).norm() < 1e-14);
        }
        let h = weight_rate(&z, &spec, 0.0).unwrap();
        assert!((ens.weights()[0] - 0.7 * (h * dt).exp()).abs() < 1e-14);
    }

    #[test]
    fn weights_never_change_sign() {
        let spec = SystemSpec::constant(2, vec![Vec3::zero(); 2], vec![(0, 1, Mat3::identity().scaled(0.5))]).unwrap();
        let rho = PhaseDensity::from_bloch(&BlochTensor::product(&[Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, 0.0, 0.5)])).unwrap();
        let mut ens = sample_initial(&rho, 1.0, 2000, 1).unwrap();
        let signs: Vec<f64> = ens.weights().iter().map(|w| w.signum()).collect();
        let mut noise = NoiseStreams::new(1, 0, ens.len());
        advance(&mut ens, &spec, 0, 200, 1e-3, &mut noise).unwrap();
        for ((w, s), d) in ens.weights().iter().zip(&signs).zip(ens.diverged()) {
            assert!(*d || w.signum() == *s);
        }
    }

    #[test]
    fn chunking_does_not_change_the_path() {
        let spec = SystemSpec::constant(2, vec![Vec3::new(0.0, 0.0, 0.3), Vec3::zero()], vec![(0, 1, Mat3::identity())]).unwrap();
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(2)).unwrap();
        let ens0 = sample_initial(&rho, 1.0, 50, 2).unwrap();
        let mut a = ens0.clone();
        let mut na = NoiseStreams::new(2, 0, 50);
        advance(&mut a, &spec, 0, 20, 1e-3, &mut na).unwrap();
        let mut b = ens0;
        let mut nb = NoiseStreams::new(2, 0, 50);
        for k in 0..20 {
            step(&mut b, &spec, k as f64 * 1e-3, 1e-3, &mut nb).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn zero_duration_run_gives_initial_estimates() {
        let spec = SystemSpec::free(1).unwrap();
        let b0 = BlochTensor::product(&[Vec3::new(0.5, 0.0, 0.0)]);
        let mut cfg = RunConfig::new(1e-3, 0.0, 1200, 5);
        cfg.sampling = SamplingScheme::Symmetric;
        let out = run(&spec, &b0, &cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        let x = &out.records[0].stats.estimates[0];
        assert_eq!(x.observable.name(), "x");
        assert!((x.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(0.0, 1.0, 1, 1).validate().is_err());
        assert!(RunConfig::new(0.3, 1.0, 1, 1).validate().is_err());
        let mut c = RunConfig::new(0.25, 1.0, 1, 1);
        c.validate().unwrap();
        c.output_every = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn reset_of_uniform_state_stays_uniform() {
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(2)).unwrap();
        let ens = sample_initial(&rho, 1.0, 1000, 3).unwrap();
        let next = reset(&ens, &EstimatorOptions::default(), &SampleOptions::new(1.0, 1000, 3)).unwrap();
        let b = estimate_tensor(&next, &EstimatorOptions::default()).unwrap();
        assert_eq!(b.normalization(), 1.0);
        let empty = sample_initial(&rho, 1.0, 0, 3).unwrap();
        assert!(matches!(
            reset(&empty, &EstimatorOptions::default(), &SampleOptions::new(1.0, 10, 3)),
            Err(Error::EnsembleExhausted)
        ));
    }
}
