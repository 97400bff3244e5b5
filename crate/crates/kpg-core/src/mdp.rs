//! Environment contract and the Gaussian RKHS policy.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::rkhs::FunctionExpansion;
use crate::{Error, Result};

/// A Markov decision process with bounded reward.
///
/// `step` is a pure transition kernel: the next state and reward depend
/// only on `(s, a)` and the rng draw, never on hidden instance state. The
/// caller owns the system state, which is what makes cloned environments
/// usable for parallel Monte Carlo.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;

    /// Bound on |r(s, a)|.
    fn reward_bound(&self) -> f64;

    fn initial_state(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Advances one step from `(s, a)`: returns `(s', r(s, a))`.
    fn step(&self, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> (Vec<f64>, f64);
}

/// Gaussian policy π(a|s) = N(h(s), Σ) with diagonal covariance Σ.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    mean: FunctionExpansion,
    covariance: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean: FunctionExpansion, covariance: Vec<f64>) -> Result<Self> {
        if covariance.len() != mean.spec().action_dim() {
            return Err(Error::DimensionMismatch {
                context: "policy covariance",
                expected: mean.spec().action_dim(),
                got: covariance.len(),
            });
        }
        if covariance.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "policy covariance entries must be finite and > 0".into(),
            ));
        }
        Ok(Self { mean, covariance })
    }

    pub fn mean(&self) -> &FunctionExpansion {
        &self.mean
    }

    /// Replaces the mean function, keeping Σ.
    pub fn with_mean(&self, mean: FunctionExpansion) -> Self {
        Self {
            mean,
            covariance: self.covariance.clone(),
        }
    }

    /// Diagonal of Σ.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn action_dim(&self) -> usize {
        self.covariance.len()
    }

    /// λ_min(Σ).
    pub fn min_variance(&self) -> f64 {
        self.covariance.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// a = h(s) + Σ^{1/2} z with z standard normal.
    pub fn sample_action(&self, s: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let noise: Vec<f64> = (0..self.covariance.len())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        self.action_with_noise(s, &noise)
    }

    /// Deterministic variant of `sample_action` for a given standard-normal
    /// draw z; used by the antithetic-noise trainer and by tests.
    pub fn action_with_noise(&self, s: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        if noise.len() != self.covariance.len() {
            return Err(Error::DimensionMismatch {
                context: "action noise",
                expected: self.covariance.len(),
                got: noise.len(),
            });
        }
        let mut a = self.mean.evaluate(s)?;
        for (i, (ai, z)) in a.iter_mut().zip(noise).enumerate() {
            *ai += self.covariance[i].sqrt() * z;
        }
        Ok(a)
    }

    /// Σ⁻¹ (a − h(s)); the action-dependent factor of the score function.
    pub fn score_factor(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.covariance.len() {
            return Err(Error::DimensionMismatch {
                context: "score action",
                expected: self.covariance.len(),
                got: a.len(),
            });
        }
        let mean = self.mean.evaluate(s)?;
        Ok(a.iter()
            .zip(&mean)
            .zip(&self.covariance)
            .map(|((ai, mi), v)| (ai - mi) / v)
            .collect())
    }

    /// Reflection of `a` through the mean: ā = 2 h(s) − a.
    pub fn mirror_action(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.covariance.len() {
            return Err(Error::DimensionMismatch {
                context: "mirror action",
                expected: self.covariance.len(),
                got: a.len(),
            });
        }
        let mean = self.mean.evaluate(s)?;
        // The defining property is exact negation of the deviation:
        // score_factor(s, ā) = −score_factor(s, a) bit for bit, which the
        // antithetic pairing relies on. Plain m − (a − m) can land one ulp
        // off after rounding, so snap to a neighbor that restores the
        // identity when one exists.
        Ok(a.iter()
            .zip(&mean)
            .map(|(ai, mi)| {
                let d = ai - mi;
                let u = mi - d;
                if u - mi == -d {
                    return u;
                }
                for cand in [u.next_up(), u.next_down()] {
                    if cand - mi == -d {
                        return cand;
                    }
                }
                u
            })
            .collect())
    }
}

/// One observed transition; trace record for diagnostics and CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub step: usize,
}
