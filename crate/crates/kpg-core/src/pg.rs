//! Stochastic policy gradient machinery and the fully online trainer.
//!
//! One trainer iteration runs the system T steps (T geometric), estimates
//! the Q value at the reached state-action pair with a second
//! geometric-horizon rollout, appends the resulting rank-one gradient to
//! the policy mean with step size η, compresses the dictionary with a
//! budget of K·η, and continues from wherever the rollouts left the
//! system. No resets anywhere.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::komp;
use crate::mdp::{Environment, GaussianPolicy};
use crate::rkhs::{FunctionExpansion, KernelSpec};
use crate::{Error, Result};

/// How the gradient estimator fights variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Single rollout, raw estimate.
    Plain,
    /// Averages the Q difference between the sampled action and its mirror
    /// through the mean. Needs a second rollout from the same state, so it
    /// is usable only with resettable simulators (semi-online).
    SymmetricQ,
    /// Flips the sign of the root-action exploration noise on every other
    /// iteration. Fully online.
    AntitheticNoise,
}

impl Default for VarianceMode {
    fn default() -> Self {
        VarianceMode::Plain
    }
}

/// Trainer hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Discount factor γ ∈ (0, 1).
    pub gamma: f64,
    /// Constant step size η.
    pub eta: f64,
    /// Compression factor K; the per-step budget is ε_K = K·η.
    pub compression_k: f64,
    pub variance_mode: VarianceMode,
    /// Abort when the model order passes this bound.
    pub max_model_order_guard: Option<usize>,
    pub seed: u64,
    /// Replicates the draft estimator that scales Q̂ by (1−γ). That scaling
    /// biases the estimate (the unscaled sum of T_Q+1 rewards already has
    /// expectation Q); off by default.
    pub legacy_q_scaling: bool,
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eta must be finite and >= 0, got {}",
                self.eta
            )));
        }
        if !(self.compression_k >= 0.0) || !self.compression_k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "compression_k must be finite and >= 0, got {}",
                self.compression_k
            )));
        }
        Ok(())
    }

    /// Per-step compression budget ε_K = K·η.
    pub fn compression_budget(&self) -> f64 {
        self.compression_k * self.eta
    }
}

/// Draws T with P(T = t) = (1−γ)γ^t by inverting the geometric CDF.
///
/// Draws beyond ceil(50/(1−γ)) (probability below e⁻⁵⁰) are rejected and
/// redrawn so a single step cannot stall; the second component counts the
/// rejections.
pub fn draw_geometric(gamma: f64, rng: &mut dyn RngCore) -> (u32, u32) {
    let cap = (50.0 / (1.0 - gamma)).ceil() as u32;
    let log_gamma = gamma.ln();
    let mut rejected = 0;
    loop {
        let u: f64 = rng.random();
        // 1−u ∈ (0, 1] keeps the logarithm finite.
        let t = ((1.0 - u).ln() / log_gamma).floor();
        if t <= cap as f64 {
            return (t as u32, rejected);
        }
        rejected += 1;
    }
}

/// Result of one geometric-horizon Q rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct QEstimate {
    /// Unscaled sum of the T_Q + 1 collected rewards; an unbiased estimate
    /// of Q(s, a).
    pub value: f64,
    /// System state after the final step; the online trainer continues
    /// from here.
    pub end_state: Vec<f64>,
    /// The drawn horizon T_Q.
    pub horizon: u32,
    /// Horizon draws rejected by the cap.
    pub rejected_draws: u32,
}

/// Unbiased Q estimate: rolls out T_Q + 1 steps from (s, a) under the
/// policy, T_Q geometric with parameter γ, and sums the rewards.
pub fn estimate_q(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s: &[f64],
    a: &[f64],
    gamma: f64,
    rng: &mut dyn RngCore,
) -> Result<QEstimate> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    let (horizon, rejected_draws) = draw_geometric(gamma, rng);
    let mut total = 0.0;
    let mut state = s.to_vec();
    let mut action = a.to_vec();
    for t in 0..=horizon {
        let (next, reward) = env.step(&state, &action, rng);
        total += reward;
        state = next;
        if t < horizon {
            action = policy.sample_action(&state, rng)?;
        }
    }
    Ok(QEstimate {
        value: total,
        end_state: state,
        horizon,
        rejected_draws,
    })
}

/// One stochastic gradient: the rank-one kernel element κ(s_T, ·) w̃.
///
/// The step size is *not* applied here; the trainer scales the weight by η
/// before appending.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    /// Kernel center s_T.
    pub center: Vec<f64>,
    /// w̃ = Q̂ Σ⁻¹(a_T − h(s_T)) / (1−γ) (halved Q difference in symmetric
    /// mode).
    pub weight: Vec<f64>,
    /// Q estimate at (s_T, a_T).
    pub q_estimate: f64,
    /// Q estimate at the mirrored action, in symmetric mode.
    pub q_mirror: Option<f64>,
    pub horizon_t: u32,
    pub horizon_tq: u32,
    pub horizon_tq_mirror: Option<u32>,
    /// System state after all rollouts; the next iteration starts here.
    pub end_state: Vec<f64>,
    /// Standard-normal draw used for the root action (antithetic pairing).
    pub root_noise: Vec<f64>,
    /// Environment steps consumed.
    pub env_steps: u64,
    /// Horizon draws rejected by the cap.
    pub rejected_draws: u32,
}

/// Gradient sampler. Holds the across-call state needed by the
/// antithetic-noise mode (the previous root noise and the call parity);
/// plain and symmetric modes are stateless.
#[derive(Debug, Clone)]
pub struct GradientEstimator {
    mode: VarianceMode,
    legacy_q_scaling: bool,
    last_root_noise: Option<Vec<f64>>,
    calls: u64,
}

impl GradientEstimator {
    pub fn new(mode: VarianceMode) -> Self {
        Self {
            mode,
            legacy_q_scaling: false,
            last_root_noise: None,
            calls: 0,
        }
    }

    pub fn with_legacy_q_scaling(mut self, on: bool) -> Self {
        self.legacy_q_scaling = on;
        self
    }

    #[cfg(test)]
    fn with_pending_mirror(mut self, noise: Vec<f64>) -> Self {
        self.last_root_noise = Some(noise);
        self.calls = 1;
        self
    }

    /// Runs the gradient rollout from `s_start` and returns the rank-one
    /// estimate together with the state the system ends in.
    pub fn sample(
        &mut self,
        env: &dyn Environment,
        policy: &GaussianPolicy,
        s_start: &[f64],
        gamma: f64,
        rng: &mut dyn RngCore,
    ) -> Result<GradientSample> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0,1), got {gamma}"
            )));
        }
        let p = policy.action_dim();
        let (horizon_t, mut rejected) = draw_geometric(gamma, rng);

        // Root action: fresh noise on even calls, mirrored previous noise
        // on odd calls in antithetic mode.
        let root_noise: Vec<f64> = match (&self.mode, self.calls % 2, &self.last_root_noise) {
            (VarianceMode::AntitheticNoise, 1, Some(prev)) if prev.len() == p => {
                prev.iter().map(|z| -z).collect()
            }
            _ => (0..p).map(|_| StandardNormal.sample(rng)).collect(),
        };
        let mut state = s_start.to_vec();
        let mut action = policy.action_with_noise(&state, &root_noise)?;
        let mut env_steps = 0u64;
        for _ in 0..horizon_t {
            let (next, _reward) = env.step(&state, &action, rng);
            env_steps += 1;
            state = next;
            action = policy.sample_action(&state, rng)?;
        }

        let scale_q = |q: f64| if self.legacy_q_scaling { (1.0 - gamma) * q } else { q };
        let primary = estimate_q(env, policy, &state, &action, gamma, rng)?;
        rejected += primary.rejected_draws;
        env_steps += u64::from(primary.horizon) + 1;
        let q_primary = scale_q(primary.value);
        let score = policy.score_factor(&state, &action)?;

        let (weight, q_mirror, horizon_tq_mirror, end_state) = match self.mode {
            VarianceMode::SymmetricQ => {
                let mirrored = policy.mirror_action(&state, &action)?;
                let second = estimate_q(env, policy, &state, &mirrored, gamma, rng)?;
                rejected += second.rejected_draws;
                env_steps += u64::from(second.horizon) + 1;
                let q_m = scale_q(second.value);
                let factor = (q_primary - q_m) / (2.0 * (1.0 - gamma));
                let w = score.iter().map(|f| factor * f).collect();
                (w, Some(q_m), Some(second.horizon), second.end_state)
            }
            VarianceMode::Plain | VarianceMode::AntitheticNoise => {
                let factor = q_primary / (1.0 - gamma);
                let w = score.iter().map(|f| factor * f).collect();
                (w, None, None, primary.end_state)
            }
        };

        self.last_root_noise = Some(root_noise.clone());
        self.calls += 1;

        Ok(GradientSample {
            center: state,
            weight,
            q_estimate: q_primary,
            q_mirror,
            horizon_t,
            horizon_tq: primary.horizon,
            horizon_tq_mirror,
            end_state,
            root_noise,
            env_steps,
            rejected_draws: rejected,
        })
    }
}

/// One-shot stochastic gradient with fresh noise.
pub fn stochastic_gradient(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s_start: &[f64],
    gamma: f64,
    mode: VarianceMode,
    rng: &mut dyn RngCore,
) -> Result<GradientSample> {
    GradientEstimator::new(mode).sample(env, policy, s_start, gamma, rng)
}

/// Mutable trainer snapshot.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub policy: GaussianPolicy,
    /// Current system state s_k; rollouts continue from here.
    pub system_state: Vec<f64>,
    pub iteration: u64,
    pub model_order: usize,
    pub env_steps: u64,
    pub rejected_horizon_draws: u64,
}

/// Per-iteration log entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    /// Model order after compression.
    pub model_order: usize,
    pub horizon_t: u32,
    pub horizon_tq: u32,
    pub q_hat: f64,
    /// Euclidean norm of w̃ (equals the RKHS norm of the rank-one update).
    pub wtilde_norm: f64,
    /// Recomputed RKHS distance introduced by compression; Proposition-2
    /// bias for this step.
    pub komp_residual: f64,
    pub removed_count: usize,
    pub eta: f64,
    pub eps_k: f64,
    /// System state after the step.
    pub system_state: Vec<f64>,
}

/// Fully online policy gradient ascent with per-step compression.
pub struct Trainer {
    config: TrainerConfig,
    state: TrainerState,
    estimator: GradientEstimator,
    rng: ChaCha8Rng,
}

impl Trainer {
    /// Starts from the zero policy mean at the environment's initial state.
    pub fn new(
        env: &dyn Environment,
        kernel: KernelSpec,
        covariance: Vec<f64>,
        config: TrainerConfig,
    ) -> Result<Self> {
        let policy = GaussianPolicy::new(FunctionExpansion::empty(kernel), covariance)?;
        Self::with_policy(env, policy, config)
    }

    /// Starts from an existing policy (warm start).
    pub fn with_policy(
        env: &dyn Environment,
        policy: GaussianPolicy,
        config: TrainerConfig,
    ) -> Result<Self> {
        config.validate()?;
        if policy.mean().spec().state_dim() != env.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "trainer kernel state dim",
                expected: env.state_dim(),
                got: policy.mean().spec().state_dim(),
            });
        }
        if policy.action_dim() != env.action_dim() {
            return Err(Error::DimensionMismatch {
                context: "trainer action dim",
                expected: env.action_dim(),
                got: policy.action_dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let system_state = env.initial_state(&mut rng);
        let model_order = policy.mean().model_order();
        Ok(Self {
            estimator: GradientEstimator::new(config.variance_mode)
                .with_legacy_q_scaling(config.legacy_q_scaling),
            state: TrainerState {
                policy,
                system_state,
                iteration: 0,
                model_order,
                env_steps: 0,
                rejected_horizon_draws: 0,
            },
            config,
            rng,
        })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    /// One online iteration: gradient sample at s_k, ascent step, KOMP
    /// compression, state hand-off.
    pub fn step(&mut self, env: &dyn Environment) -> Result<StepRecord> {
        let sample = self.estimator.sample(
            env,
            &self.state.policy,
            &self.state.system_state,
            self.config.gamma,
            &mut self.rng,
        )?;

        let eta = self.config.eta;
        let scaled: Vec<f64> = sample.weight.iter().map(|w| eta * w).collect();
        let appended = self.state.policy.mean().append(sample.center.clone(), scaled)?;
        let budget = self.config.compression_budget();
        let report = komp::komp(&appended, budget)?;

        let model_order = report.pruned.model_order();
        if let Some(guard) = self.config.max_model_order_guard {
            if model_order > guard {
                return Err(Error::ModelOrderExceeded {
                    order: model_order,
                    guard,
                });
            }
        }

        self.state.policy = self.state.policy.with_mean(report.pruned);
        self.state.system_state = sample.end_state.clone();
        self.state.model_order = model_order;
        self.state.env_steps += sample.env_steps;
        self.state.rejected_horizon_draws += u64::from(sample.rejected_draws);
        let k = self.state.iteration;
        self.state.iteration += 1;

        let wtilde_norm = sample.weight.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(StepRecord {
            k,
            model_order,
            horizon_t: sample.horizon_t,
            horizon_tq: sample.horizon_tq,
            q_hat: sample.q_estimate,
            wtilde_norm,
            komp_residual: report.residual_norm,
            removed_count: report.removed_count,
            eta,
            eps_k: budget,
            system_state: sample.end_state,
        })
    }

    /// Runs `iterations` steps and collects the history.
    pub fn run(&mut self, env: &dyn Environment, iterations: u64) -> Result<Vec<StepRecord>> {
        let mut history = Vec::with_capacity(iterations as usize);
        for _ in 0..iterations {
            history.push(self.step(env)?);
        }
        Ok(history)
    }
}

/// Convenience wrapper: fresh trainer, `iterations` steps, returns the
/// history and the final state. Deterministic given the config seed.
pub fn train(
    env: &dyn Environment,
    kernel: KernelSpec,
    covariance: Vec<f64>,
    config: TrainerConfig,
    iterations: u64,
) -> Result<(Vec<StepRecord>, TrainerState)> {
    let mut trainer = Trainer::new(env, kernel, covariance, config)?;
    let history = trainer.run(env, iterations)?;
    Ok((history, trainer.state))
}
