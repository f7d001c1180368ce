use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::PhaseDensity;
use super::ensemble::{Ensemble, EnsembleMeta};
use crate::algebra::Vec3;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamKey};

/// Size of the per-qubit symmetry orbit used by [`SamplingScheme::Symmetric`].
pub const ORBIT_SIZE: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    /// Every trajectory drawn independently.
    #[default]
    Independent,
    /// Each independent draw is expanded into its orbit under the twelve
    /// proper rotations of the tetrahedron applied to every qubit separately
    /// (12^N images). Odd moments up to second order cancel exactly, so any
    /// multilinear state is reproduced without sampling error.
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleOptions {
    pub radius: f64,
    pub inner_radius: f64,
    pub count: usize,
    pub seed: u64,
    pub epoch: u32,
    pub scheme: SamplingScheme,
}

impl SampleOptions {
    pub fn new(radius: f64, count: usize, seed: u64) -> Self {
        SampleOptions {
            radius,
            inner_radius: 0.0,
            count,
            seed,
            epoch: 0,
            scheme: SamplingScheme::Independent,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Argument(format!("sampling radius must be positive, got {}", self.radius)));
        }
        if !(self.inner_radius >= 0.0 && self.inner_radius < self.radius) {
            return Err(Error::Argument(format!(
                "inner radius {} must lie in [0, {})",
                self.inner_radius, self.radius
            )));
        }
        if self.scheme == SamplingScheme::Symmetric {
            let orbit = orbit_len(n_qubits)?;
            if !self.count.is_multiple_of(orbit) {
                return Err(Error::Argument(format!(
                    "symmetric sampling needs a count divisible by 12^{n_qubits} = {orbit}, got {}",
                    self.count
                )));
            }
        }
        Ok(())
    }
}

fn orbit_len(n_qubits: usize) -> Result<usize> {
    ORBIT_SIZE
        .checked_pow(n_qubits as u32)
        .ok_or_else(|| Error::Argument(format!("orbit of 12^{n_qubits} points is too large")))
}

/// Element `g` of the rotation group of the tetrahedron: a cyclic axis
/// permutation followed by an even number of sign flips.
pub fn orbit_image(v: Vec3, g: usize) -> Vec3 {
    const SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let p = g / 4;
    let s = SIGNS[g % 4];
    Vec3::new(s[0] * v[p % 3], s[1] * v[(p + 1) % 3], s[2] * v[(p + 2) % 3])
}

/// Uniform point in the shell r ≤ |S| ≤ R.
fn draw_spin<R: Rng>(rng: &mut R, r: f64, big_r: f64) -> Vec3 {
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let u: f64 = rng.gen();
    let rad = if r == 0.0 {
        big_r * u.cbrt()
    } else {
        (r.powi(3) + u * (big_r.powi(3) - r.powi(3))).cbrt()
    };
    Vec3(dir).scale(rad)
}

/// Uniform proposal in the product of balls of radius `radius`, weights
/// w = ρ(z).
pub fn sample_initial(rho: &PhaseDensity, radius: f64, count: usize, seed: u64) -> Result<Ensemble> {
    sample_ensemble(rho, &SampleOptions::new(radius, count, seed))
}

pub fn sample_ensemble(rho: &PhaseDensity, opts: &SampleOptions) -> Result<Ensemble> {
    let n = rho.n_qubits();
    opts.validate(n)?;
    let meta = EnsembleMeta {
        radius: opts.radius,
        inner_radius: opts.inner_radius,
        seed: opts.seed,
        epoch: opts.epoch,
    };
    let key = StreamKey::derive(opts.seed, Domain::Sampling, opts.epoch);
    let orbit = match opts.scheme {
        SamplingScheme::Independent => 1,
        SamplingScheme::Symmetric => orbit_len(n)?,
    };
    let mut positions = vec![Vec3::zero(); opts.count * n];
    let mut weights = vec![0.0; opts.count];
    positions
        .par_chunks_mut(n.max(1))
        .zip(weights.par_iter_mut())
        .enumerate()
        .for_each(|(i, (z, w))| {
            let mut rng = key.stream((i / orbit) as u64, 0);
            let mut image = i % orbit;
            for q in (0..n).rev() {
                z[q] = draw_spin(&mut rng, opts.inner_radius, opts.radius);
            }
            if orbit > 1 {
                for q in (0..n).rev() {
                    z[q] = orbit_image(z[q], image % ORBIT_SIZE);
                    image /= ORBIT_SIZE;
                }
            }
            *w = rho.eval(z);
        });
    Ensemble::from_parts(n, positions, weights, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::BlochTensor;

    #[test]
    fn orbit_elements_are_distinct_rotations() {
        let v = Vec3::new(0.3, -0.5, 0.7);
        let imgs: Vec<Vec3> = (0..ORBIT_SIZE).map(|g| orbit_image(v, g)).collect();
        for (i, a) in imgs.iter().enumerate() {
            assert!((a.norm() - v.norm()).abs() < 1e-15);
            for b in &imgs[i + 1..] {
                assert_ne!(a, b);
            }
        }
        // determinant +1: images of a right-handed frame stay right-handed
        let (ex, ey, ez) = (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
        for g in 0..ORBIT_SIZE {
            let c = orbit_image(ex, g).cross(&orbit_image(ey, g));
            assert_eq!(c, orbit_image(ez, g));
        }
    }

    #[test]
    fn empty_and_uniform() {
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(2)).unwrap();
        assert!(sample_initial(&rho, 1.0, 0, 1).unwrap().is_empty());
        let ens = sample_initial(&rho, 1.0, 100, 1).unwrap();
        assert!(ens.weights().iter().all(|w| *w == 0.25));
        assert!(ens.positions().iter().all(|s| s.norm() <= 1.0));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(1)).unwrap();
        let a = sample_initial(&rho, 1.0, 50, 9).unwrap();
        let b = sample_initial(&rho, 1.0, 50, 9).unwrap();
        let c = sample_initial(&rho, 1.0, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn shell_proposal_stays_in_shell() {
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(2)).unwrap();
        let opts = SampleOptions {
            inner_radius: 1.0,
            ..SampleOptions::new(2.0, 1000, 3)
        };
        let ens = sample_ensemble(&rho, &opts).unwrap();
        assert!(ens.positions().iter().all(|s| (1.0..=2.0).contains(&s.norm())));
    }

    #[test]
    fn invalid_options() {
        let rho = PhaseDensity::from_bloch(&BlochTensor::maximally_mixed(1)).unwrap();
        assert!(sample_initial(&rho, 0.0, 10, 1).is_err());
        let opts = SampleOptions {
            scheme: SamplingScheme::Symmetric,
            ..SampleOptions::new(1.0, 13, 1)
        };
        assert!(sample_ensemble(&rho, &opts).is_err());
    }
}
