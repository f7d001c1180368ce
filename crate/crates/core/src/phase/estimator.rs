use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::Ensemble;
use super::kernel::spin_kernel;
use crate::algebra::{MultiIndex, Vec3};
use crate::error::{Error, Result};

pub const DEFAULT_BATCHES: usize = 100;
const COLLAPSE_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorOptions {
    /// Only trajectories with r ≤ |S^α| ≤ R for every qubit enter the sums.
    #[serde(default)]
    pub shell: Option<(f64, f64)>,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            shell: None,
            batches: DEFAULT_BATCHES,
        }
    }
}

impl EstimatorOptions {
    pub fn with_shell(r: f64, big_r: f64) -> Self {
        EstimatorOptions {
            shell: Some((r, big_r)),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches < 2 {
            return Err(Error::Argument(format!(
                "at least 2 batches are needed for standard errors, got {}",
                self.batches
            )));
        }
        if let Some((r, big_r)) = self.shell {
            if !(r >= 0.0 && big_r > r && big_r.is_finite()) {
                return Err(Error::Argument(format!("invalid shell ({r}, {big_r})")));
            }
        }
        Ok(())
    }

    fn contains(&self, z: &[Vec3]) -> bool {
        match self.shell {
            None => true,
            Some((r, big_r)) => z.iter().all(|s| {
                let n = s.norm();
                n >= r && n <= big_r
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableEstimate {
    pub observable: MultiIndex,
    pub value: f64,
    pub stderr: f64,
    /// Shell-included trajectories dropped because of radius underflow.
    pub underflow: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub estimates: Vec<ObservableEstimate>,
    pub count: usize,
    /// Finite trajectories inside the shell.
    pub included: usize,
    pub diverged: usize,
    /// Σ' w over included trajectories.
    pub sum_w: f64,
    /// (Σ'|w|)² / Σ' w² over included trajectories.
    pub ess: f64,
    pub neg_w_frac: f64,
    pub mean_abs_w: f64,
    /// Fraction of trajectories with some |S^α| above the sampling radius.
    pub escape_frac: f64,
    pub underflow_count: usize,
}

impl EnsembleStats {
    pub fn get(&self, mi: &MultiIndex) -> Option<&ObservableEstimate> {
        self.estimates.iter().find(|e| &e.observable == mi)
    }

    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }
}

/// Sums accumulated over one contiguous block of trajectories.
#[derive(Clone, Debug, Default)]
pub(crate) struct BatchSums {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub underflow: Vec<usize>,
    pub signed_w: f64,
    pub abs_w: f64,
    pub w_sq: f64,
    pub included: usize,
    pub negative: usize,
    pub escaped: usize,
    pub diverged: usize,
}

impl BatchSums {
    fn new(n_obs: usize) -> Self {
        BatchSums {
            num: vec![0.0; n_obs],
            den: vec![0.0; n_obs],
            underflow: vec![0; n_obs],
            ..Default::default()
        }
    }

    fn merge(mut self, other: &BatchSums) -> Self {
        for k in 0..self.num.len() {
            self.num[k] += other.num[k];
            self.den[k] += other.den[k];
            self.underflow[k] += other.underflow[k];
        }
        self.signed_w += other.signed_w;
        self.abs_w += other.abs_w;
        self.w_sq += other.w_sq;
        self.included += other.included;
        self.negative += other.negative;
        self.escaped += other.escaped;
        self.diverged += other.diverged;
        self
    }
}

/// Sum in a fixed binary tree over the slice order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn pairwise_merge(v: &[BatchSums]) -> BatchSums {
    if v.len() == 1 {
        return v[0].clone();
    }
    let mid = v.len() / 2;
    pairwise_merge(&v[..mid]).merge(&pairwise_merge(&v[mid..]))
}

fn is_finite_point(z: &[Vec3]) -> bool {
    z.iter().all(Vec3::is_finite)
}

/// Per-batch sums with weights divided by `scale` (keeps Σw² representable
/// when weights have grown large).
pub(crate) fn batch_sums(ens: &Ensemble, observables: &[MultiIndex], opts: &EstimatorOptions, scale: f64) -> Vec<BatchSums> {
    let n = ens.len();
    let batches = opts.batches.min(n).max(1);
    let nq = ens.n_qubits();
    let n_obs = observables.len();
    let radius = ens.meta().radius;
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * n / batches;
            let hi = (b + 1) * n / batches;
            let mut s = BatchSums::new(n_obs);
            let mut kern: Vec<Option<Vec3>> = vec![None; nq];
            for i in lo..hi {
                let z = ens.point(i);
                let w = ens.weights()[i];
                if ens.diverged()[i] || !is_finite_point(z) || !w.is_finite() {
                    s.diverged += 1;
                    s.escaped += 1;
                    continue;
                }
                if z.iter().any(|v| v.norm() > radius) {
                    s.escaped += 1;
                }
                if !opts.contains(z) {
                    continue;
                }
                let ws = w / scale;
                s.included += 1;
                s.signed_w += ws;
                s.abs_w += ws.abs();
                s.w_sq += ws * ws;
                if w < 0.0 {
                    s.negative += 1;
                }
                for (q, k) in kern.iter_mut().enumerate() {
                    *k = spin_kernel(z[q]);
                }
                'obs: for (o, mi) in observables.iter().enumerate() {
                    let mut k = 1.0;
                    for (q, a) in mi.factors() {
                        match kern[q] {
                            Some(v) => k *= v[a.index()],
                            None => {
                                s.underflow[o] += 1;
                                continue 'obs;
                            }
                        }
                    }
                    s.num[o] += ws * k;
                    s.den[o] += ws;
                }
            }
            s
        })
        .collect()
}

fn max_abs_weight(ens: &Ensemble, opts: &EstimatorOptions) -> f64 {
    (0..ens.len())
        .into_par_iter()
        .filter(|&i| {
            let z = ens.point(i);
            !ens.diverged()[i] && ens.weights()[i].is_finite() && is_finite_point(z) && opts.contains(z)
        })
        .map(|i| ens.weights()[i].abs())
        .reduce(|| 0.0, f64::max)
}

fn weight_scale(ens: &Ensemble, opts: &EstimatorOptions) -> f64 {
    let m = max_abs_weight(ens, opts);
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

/// Linearized batch-means standard error of the ratio Σ num / Σ den.
fn ratio_stderr(batches: &[BatchSums], o: usize, est: f64, den: f64) -> f64 {
    let b = batches.len();
    if b < 2 {
        return f64::NAN;
    }
    let ss: f64 = batches
        .iter()
        .map(|s| {
            let r = s.num[o] - est * s.den[o];
            r * r
        })
        .sum();
    (b as f64 / (b as f64 - 1.0) * ss).sqrt() / den.abs()
}

/// Ratio estimates Σ' w K_μ / Σ' w with batch-means standard errors and
/// weight diagnostics.
pub fn estimate(ens: &Ensemble, observables: &[MultiIndex], opts: &EstimatorOptions) -> Result<EnsembleStats> {
    opts.validate()?;
    for mi in observables {
        if mi.n_qubits() != ens.n_qubits() {
            return Err(Error::Argument(format!(
                "observable {mi} does not match {} qubits",
                ens.n_qubits()
            )));
        }
    }
    if ens.is_empty() {
        return Err(Error::NormalizationCollapse(0.0));
    }
    let scale = weight_scale(ens, opts);
    let batches = batch_sums(ens, observables, opts, scale);
    let total = pairwise_merge(&batches);
    let sum_w_scaled = total.signed_w;
    if !(sum_w_scaled.abs() * scale > COLLAPSE_FLOOR) || !sum_w_scaled.is_finite() {
        return Err(Error::NormalizationCollapse(sum_w_scaled * scale));
    }
    let mut estimates = Vec::with_capacity(observables.len());
    for (o, mi) in observables.iter().enumerate() {
        let den = total.den[o];
        let (value, stderr) = if den.abs() * scale > COLLAPSE_FLOOR {
            let v = total.num[o] / den;
            (v, ratio_stderr(&batches, o, v, den))
        } else {
            (f64::NAN, f64::NAN)
        };
        estimates.push(ObservableEstimate {
            observable: mi.clone(),
            value,
            stderr,
            underflow: total.underflow[o],
        });
    }
    let included = total.included;
    let ess = if total.w_sq > 0.0 {
        total.abs_w * total.abs_w / total.w_sq
    } else {
        0.0
    };
    Ok(EnsembleStats {
        estimates,
        count: ens.len(),
        included,
        diverged: total.diverged,
        sum_w: sum_w_scaled * scale,
        ess,
        neg_w_frac: if included > 0 {
            total.negative as f64 / included as f64
        } else {
            0.0
        },
        mean_abs_w: if included > 0 {
            total.abs_w * scale / included as f64
        } else {
            0.0
        },
        escape_frac: total.escaped as f64 / ens.len() as f64,
        underflow_count: total.underflow.iter().sum(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceEstimate {
    pub observable: MultiIndex,
    pub value: f64,
    pub stderr: f64,
}

/// est(after) − est(before) for two states of the same trajectories, with a
/// standard error from paired batch residuals.
pub fn estimate_difference(
    before: &Ensemble,
    after: &Ensemble,
    observables: &[MultiIndex],
    opts: &EstimatorOptions,
) -> Result<Vec<DifferenceEstimate>> {
    opts.validate()?;
    if before.len() != after.len() || before.n_qubits() != after.n_qubits() {
        return Err(Error::Argument("paired ensembles differ in size".into()));
    }
    if before.is_empty() {
        return Err(Error::NormalizationCollapse(0.0));
    }
    let b0 = batch_sums(before, observables, opts, weight_scale(before, opts));
    let b1 = batch_sums(after, observables, opts, weight_scale(after, opts));
    let t0 = pairwise_merge(&b0);
    let t1 = pairwise_merge(&b1);
    let nb = b0.len();
    let mut out = Vec::with_capacity(observables.len());
    for (o, mi) in observables.iter().enumerate() {
        let (d0, d1) = (t0.den[o], t1.den[o]);
        if !(d0.abs() > 0.0 && d1.abs() > 0.0) {
            return Err(Error::NormalizationCollapse(0.0));
        }
        let e0 = t0.num[o] / d0;
        let e1 = t1.num[o] / d1;
        let stderr = if nb < 2 {
            f64::NAN
        } else {
            let ss: f64 = b0
                .iter()
                .zip(&b1)
                .map(|(s0, s1)| {
                    let r = (s1.num[o] - e1 * s1.den[o]) / d1 - (s0.num[o] - e0 * s0.den[o]) / d0;
                    r * r
                })
                .sum();
            (nb as f64 / (nb as f64 - 1.0) * ss).sqrt()
        };
        out.push(DifferenceEstimate {
            observable: mi.clone(),
            value: e1 - e0,
            stderr,
        });
    }
    Ok(out)
}
