//! Monte-Carlo estimators of values, gradients and gradient inner
//! products, plus trajectory analytics. These are the measurement tools
//! behind the ascent-direction and value-trend checks; the trainer never
//! depends on them.

use std::collections::HashMap;

use rand::{Rng, RngCore};

use crate::mdp::{Environment, GaussianPolicy, Transition};
use crate::pg::{GradientEstimator, VarianceMode};
use crate::rkhs::FunctionExpansion;
use crate::{Error, Result};

/// Truncated-horizon Monte Carlo value estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    /// Sample standard deviation / √N.
    pub stderr: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub state: Vec<f64>,
    /// Training iteration of the evaluated policy snapshot, when known.
    pub snapshot_iteration: Option<u64>,
}

/// Average of N discounted returns over episodes of length `horizon` + 1
/// started at `s`. Unbiased for the truncated value; the truncation bias
/// is at most B_r γ^{horizon+1}/(1−γ).
pub fn mc_value(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s: &[f64],
    gamma: f64,
    episodes: usize,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<ValueEstimate> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "mc_value needs at least one episode".into(),
        ));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    if gamma.powi(horizon as i32) > 1e-3 {
        log::warn!(
            "mc_value horizon {horizon} leaves gamma^T = {:.3e}; the truncation \
             bias may not be negligible",
            gamma.powi(horizon as i32)
        );
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..episodes {
        let mut state = s.to_vec();
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..=horizon {
            let action = policy.sample_action(&state, rng)?;
            let (next, reward) = env.step(&state, &action, rng);
            ret += discount * reward;
            discount *= gamma;
            state = next;
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let stderr = if episodes > 1 {
        let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(ValueEstimate {
        mean,
        stderr,
        episodes,
        horizon,
        gamma,
        state: s.to_vec(),
        snapshot_iteration: None,
    })
}

/// Monte Carlo average of independent stochastic gradients, all
/// conditioned at the same state.
///
/// Keeps the per-sample rank-one pieces so inner products can be
/// bootstrapped. Samples sharing a center (bit-exact) are grouped, which
/// keeps the mean expansion compact on discrete-state environments.
#[derive(Debug, Clone)]
pub struct GradientEstimateBundle {
    mean: FunctionExpansion,
    group_centers: Vec<Vec<f64>>,
    sample_group: Vec<usize>,
    sample_weights: Vec<Vec<f64>>,
    conditioning_state: Vec<f64>,
}

impl GradientEstimateBundle {
    /// Mean gradient as a function expansion (each sample scaled 1/N).
    pub fn mean(&self) -> &FunctionExpansion {
        &self.mean
    }

    pub fn len(&self) -> usize {
        self.sample_group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_group.is_empty()
    }

    pub fn conditioning_state(&self) -> &[f64] {
        &self.conditioning_state
    }

    /// Mean gradient evaluated at a probe state; by the reproducing
    /// property this is the derivative of the objective with respect to a
    /// unit weight placed at that center.
    pub fn coordinate(&self, probe: &[f64]) -> Result<Vec<f64>> {
        self.mean.evaluate(probe)
    }

    /// Per-sample values of ⟨κ(s_T,·)w̃, κ(probe,·)e_i⟩, for standard
    /// errors of coordinate estimates.
    pub fn coordinate_samples(&self, probe: &[f64], coord: usize) -> Result<Vec<f64>> {
        let spec = self.mean.spec();
        if coord >= spec.action_dim() {
            return Err(Error::IndexOutOfRange {
                index: coord,
                order: spec.action_dim(),
            });
        }
        let kernels: Vec<f64> = self
            .group_centers
            .iter()
            .map(|c| crate::rkhs::kernel_eval(spec, c, probe))
            .collect::<Result<_>>()?;
        Ok(self
            .sample_group
            .iter()
            .zip(&self.sample_weights)
            .map(|(g, w)| kernels[*g] * w[coord])
            .collect())
    }
}

fn center_key(center: &[f64]) -> Vec<u64> {
    center.iter().map(|x| x.to_bits()).collect()
}

/// Averages `n` independent gradient samples conditioned at `s`.
pub fn mc_gradient(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s: &[f64],
    gamma: f64,
    n: usize,
    mode: VarianceMode,
    rng: &mut dyn RngCore,
) -> Result<GradientEstimateBundle> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mc_gradient needs at least one sample".into(),
        ));
    }
    let mut estimator = GradientEstimator::new(mode);
    let mut group_centers: Vec<Vec<f64>> = Vec::new();
    let mut group_index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut sample_group = Vec::with_capacity(n);
    let mut sample_weights = Vec::with_capacity(n);
    for _ in 0..n {
        let sample = estimator.sample(env, policy, s, gamma, rng)?;
        let key = center_key(&sample.center);
        let group = *group_index.entry(key).or_insert_with(|| {
            group_centers.push(sample.center.clone());
            group_centers.len() - 1
        });
        sample_group.push(group);
        sample_weights.push(sample.weight);
    }
    let mean = aggregate_mean(
        policy,
        &group_centers,
        &sample_group,
        &sample_weights,
        sample_group.len(),
    )?;
    Ok(GradientEstimateBundle {
        mean,
        group_centers,
        sample_group,
        sample_weights,
        conditioning_state: s.to_vec(),
    })
}

fn aggregate_mean(
    policy: &GaussianPolicy,
    group_centers: &[Vec<f64>],
    sample_group: &[usize],
    sample_weights: &[Vec<f64>],
    n: usize,
) -> Result<FunctionExpansion> {
    let p = policy.action_dim();
    let mut agg = vec![vec![0.0; p]; group_centers.len()];
    for (g, w) in sample_group.iter().zip(sample_weights) {
        for c in 0..p {
            agg[*g][c] += w[c];
        }
    }
    let scale = 1.0 / n as f64;
    for w in &mut agg {
        for c in w.iter_mut() {
            *c *= scale;
        }
    }
    FunctionExpansion::new(
        policy.mean().spec().clone(),
        group_centers.to_vec(),
        agg,
    )
}

/// RKHS inner product of two mean-gradient estimates. With bundles built
/// from independent randomness this is an unbiased estimate of
/// ⟨∇U_{s₁}, ∇U_{s₂}⟩; positive values certify an ascent direction.
pub fn ascent_alignment(
    first: &GradientEstimateBundle,
    second: &GradientEstimateBundle,
) -> Result<f64> {
    first.mean.inner_product(&second.mean)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentEstimate {
    pub point: f64,
    /// 95% bootstrap percentile interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

/// Percentile-bootstrap confidence interval for the alignment: resamples
/// each bundle's gradient samples with replacement and recomputes the
/// inner product of the resampled means.
pub fn ascent_alignment_bootstrap(
    first: &GradientEstimateBundle,
    second: &GradientEstimateBundle,
    resamples: usize,
    rng: &mut dyn RngCore,
) -> Result<AlignmentEstimate> {
    if resamples < 2 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least two resamples".into(),
        ));
    }
    let point = ascent_alignment(first, second)?;
    if first.is_empty() || second.is_empty() {
        return Ok(AlignmentEstimate {
            point,
            ci_low: point,
            ci_high: point,
            resamples,
        });
    }
    let spec = first.mean.spec();
    if spec != second.mean.spec() {
        return Err(Error::SpecMismatch("ascent_alignment_bootstrap"));
    }
    let p = spec.action_dim();
    // Cross-kernel between the two bundles' unique centers, computed once.
    let cross = crate::rkhs::gram(spec, &first.group_centers, &second.group_centers);

    let mut stats = Vec::with_capacity(resamples);
    let mut agg1 = vec![0.0; first.group_centers.len() * p];
    let mut agg2 = vec![0.0; second.group_centers.len() * p];
    for _ in 0..resamples {
        resample_aggregate(first, rng, &mut agg1);
        resample_aggregate(second, rng, &mut agg2);
        let mut inner = 0.0;
        for g1 in 0..first.group_centers.len() {
            for g2 in 0..second.group_centers.len() {
                let k = cross[(g1, g2)];
                if k == 0.0 {
                    continue;
                }
                let mut dot = 0.0;
                for c in 0..p {
                    dot += agg1[g1 * p + c] * agg2[g2 * p + c];
                }
                inner += k * dot;
            }
        }
        stats.push(inner / (first.len() as f64 * second.len() as f64));
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap stats"));
    let lo_idx = ((resamples as f64) * 0.025).floor() as usize;
    let hi_idx = (((resamples as f64) * 0.975).ceil() as usize)
        .saturating_sub(1)
        .min(resamples - 1);
    Ok(AlignmentEstimate {
        point,
        ci_low: stats[lo_idx],
        ci_high: stats[hi_idx],
        resamples,
    })
}

/// Draws a with-replacement resample and accumulates unscaled group
/// weights into `agg` (flattened groups × p).
fn resample_aggregate(bundle: &GradientEstimateBundle, rng: &mut dyn RngCore, agg: &mut [f64]) {
    let p = bundle.mean.spec().action_dim();
    agg.fill(0.0);
    let n = bundle.len();
    for _ in 0..n {
        let pick = rng.random_range(0..n);
        let g = bundle.sample_group[pick];
        let w = &bundle.sample_weights[pick];
        for c in 0..p {
            agg[g * p + c] += w[c];
        }
    }
}

/// Rolls the policy out from `s0` and records every transition.
pub fn policy_rollout_trace(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s0: &[f64],
    num_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Transition>> {
    let mut out = Vec::with_capacity(num_steps);
    let mut state = s0.to_vec();
    for t in 0..num_steps {
        let action = policy.sample_action(&state, rng)?;
        let (next, reward) = env.step(&state, &action, rng);
        out.push(Transition {
            state: state.clone(),
            action,
            reward,
            next_state: next.clone(),
            step: t,
        });
        state = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{chain_exact_value, ChainMdp, ConstantRewardEnv};
    use crate::rkhs::KernelSpec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain_policy(weights: &[(f64, f64)], variance: f64) -> GaussianPolicy {
        let spec = KernelSpec::isotropic(1, 1, 1.0).unwrap();
        let centers = weights.iter().map(|(c, _)| vec![*c]).collect();
        let ws = weights.iter().map(|(_, w)| vec![*w]).collect();
        GaussianPolicy::new(FunctionExpansion::new(spec, centers, ws).unwrap(), vec![variance])
            .unwrap()
    }

    #[test]
    fn mc_value_constant_reward_is_deterministic() {
        let env = ConstantRewardEnv { reward: 1.0 };
        let policy = chain_policy(&[(0.0, 0.0)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = mc_value(&env, &policy, &[0.0], 0.9, 50, 100, &mut rng).unwrap();
        let expected = (1.0 - 0.9f64.powi(101)) / 0.1;
        assert_relative_eq!(est.mean, expected, max_relative = 1e-12);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_value_rejects_zero_episodes() {
        let env = ConstantRewardEnv { reward: 1.0 };
        let policy = chain_policy(&[(0.0, 0.0)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(mc_value(&env, &policy, &[0.0], 0.9, 0, 10, &mut rng).is_err());
    }

    #[test]
    fn mc_value_matches_chain_oracle() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(3.0, 0.5), (8.0, 0.3)], 1.0);
        let gamma = 0.9;
        let exact = chain_exact_value(&policy, 0, gamma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = mc_value(&env, &policy, &[0.0], gamma, 20_000, 200, &mut rng).unwrap();
        assert!(
            (est.mean - exact).abs() <= 4.0 * est.stderr,
            "MC {} vs exact {exact} (stderr {})",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn mc_value_stderr_shrinks_like_inverse_sqrt_n() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(2.0, 0.4)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = mc_value(&env, &policy, &[0.0], 0.9, 100, 120, &mut rng).unwrap();
        let large = mc_value(&env, &policy, &[0.0], 0.9, 400, 120, &mut rng).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "stderr ratio {ratio} outside [1.6, 2.4]"
        );
    }

    #[test]
    fn mc_gradient_single_sample_is_the_raw_expansion() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(5.0, 0.5)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bundle =
            mc_gradient(&env, &policy, &[3.0], 0.9, 1, VarianceMode::Plain, &mut rng).unwrap();
        assert_eq!(bundle.len(), 1);
        assert_eq!(bundle.mean().model_order(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sample = crate::pg::stochastic_gradient(
            &env,
            &policy,
            &[3.0],
            0.9,
            VarianceMode::Plain,
            &mut rng,
        )
        .unwrap();
        assert_eq!(bundle.mean().centers()[0], sample.center);
        assert_eq!(bundle.mean().weights()[0], sample.weight);
    }

    #[test]
    fn mc_gradient_groups_repeated_centers() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(5.0, 0.5)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bundle =
            mc_gradient(&env, &policy, &[3.0], 0.9, 500, VarianceMode::Plain, &mut rng).unwrap();
        // Chain states are integers 0..=10, so at most 11 groups.
        assert!(bundle.mean().model_order() <= 11);
        assert_eq!(bundle.len(), 500);
    }

    #[test]
    fn alignment_trivial_cases() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(5.0, 0.5)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bundle =
            mc_gradient(&env, &policy, &[0.0], 0.9, 200, VarianceMode::Plain, &mut rng).unwrap();
        // Same object → squared norm, non-negative.
        let self_alignment = ascent_alignment(&bundle, &bundle).unwrap();
        assert!(self_alignment >= 0.0);
        assert_relative_eq!(
            self_alignment,
            bundle.mean().norm_squared(),
            max_relative = 1e-12
        );
        // Symmetry.
        let other =
            mc_gradient(&env, &policy, &[2.0], 0.9, 200, VarianceMode::Plain, &mut rng).unwrap();
        assert_relative_eq!(
            ascent_alignment(&bundle, &other).unwrap(),
            ascent_alignment(&other, &bundle).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn alignment_empty_bundle_is_zero() {
        let policy = chain_policy(&[(5.0, 0.5)], 1.0);
        let empty = GradientEstimateBundle {
            mean: FunctionExpansion::empty(policy.mean().spec().clone()),
            group_centers: vec![],
            sample_group: vec![],
            sample_weights: vec![],
            conditioning_state: vec![0.0],
        };
        let env = ChainMdp::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let other =
            mc_gradient(&env, &policy, &[0.0], 0.9, 50, VarianceMode::Plain, &mut rng).unwrap();
        assert_eq!(ascent_alignment(&empty, &other).unwrap(), 0.0);
        let boot = ascent_alignment_bootstrap(&empty, &other, 10, &mut rng).unwrap();
        assert_eq!(boot.point, 0.0);
    }

    #[test]
    fn bootstrap_interval_brackets_the_point_estimate() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(4.0, 0.5), (8.0, 0.4)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b1 =
            mc_gradient(&env, &policy, &[0.0], 0.9, 400, VarianceMode::SymmetricQ, &mut rng)
                .unwrap();
        let b2 =
            mc_gradient(&env, &policy, &[5.0], 0.9, 400, VarianceMode::SymmetricQ, &mut rng)
                .unwrap();
        let est = ascent_alignment_bootstrap(&b1, &b2, 400, &mut rng).unwrap();
        assert!(est.ci_low <= est.ci_high);
        assert!(
            est.point >= est.ci_low - 1e-9 && est.point <= est.ci_high + 1e-9,
            "point {} outside [{}, {}]",
            est.point,
            est.ci_low,
            est.ci_high
        );
    }

    #[test]
    fn alignment_concentrates_with_more_samples() {
        // Spread of the inner product across independent replications must
        // shrink as the per-bundle sample count grows.
        let env = ChainMdp::new();
        let policy = chain_policy(&[(4.0, 0.5), (8.0, 0.4)], 1.0);
        let spread = |n: usize, seed: u64| {
            let mut vals = Vec::new();
            for trial in 0..12 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed + trial);
                let b1 = mc_gradient(
                    &env,
                    &policy,
                    &[0.0],
                    0.9,
                    n,
                    VarianceMode::SymmetricQ,
                    &mut rng,
                )
                .unwrap();
                let b2 = mc_gradient(
                    &env,
                    &policy,
                    &[5.0],
                    0.9,
                    n,
                    VarianceMode::SymmetricQ,
                    &mut rng,
                )
                .unwrap();
                vals.push(ascent_alignment(&b1, &b2).unwrap());
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64
        };
        let coarse = spread(60, 100);
        let fine = spread(960, 200);
        assert!(
            fine < coarse,
            "variance did not shrink: n=60 → {coarse}, n=960 → {fine}"
        );
    }

    #[test]
    fn rollout_trace_is_consistent() {
        let env = ChainMdp::new();
        let policy = chain_policy(&[(5.0, 0.5)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trace = policy_rollout_trace(&env, &policy, &[0.0], 50, &mut rng).unwrap();
        assert_eq!(trace.len(), 50);
        for pair in trace.windows(2) {
            assert_eq!(pair[0].next_state, pair[1].state);
            assert_eq!(pair[0].step + 1, pair[1].step);
        }
    }
}
