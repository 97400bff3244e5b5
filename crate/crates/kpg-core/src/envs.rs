//! Bundled environments: the 11-state chain, a constant-reward test MDP,
//! and the surveillance/battery navigation task.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::mdp::{Environment, GaussianPolicy};
use crate::{Error, Result};

/// Number of states in the chain: {0, …, 10}.
pub const CHAIN_STATES: usize = 11;
const CHAIN_TOP: f64 = 10.0;

/// Chain MDP on states {0,…,10} embedded as one real coordinate.
///
/// Continuous 1-d actions are binarized by sign (ties count as +1).
/// Moving up from 10 is impossible (absorbing), moving down from 0 is
/// blocked. Reward is 1 at state 10 and 0 elsewhere.
#[derive(Debug, Clone, Default)]
pub struct ChainMdp;

impl ChainMdp {
    pub fn new() -> Self {
        ChainMdp
    }

    fn next_state(s: f64, up: bool) -> f64 {
        if s >= CHAIN_TOP {
            CHAIN_TOP
        } else if up {
            s + 1.0
        } else if s <= 0.0 {
            0.0
        } else {
            s - 1.0
        }
    }
}

impl Environment for ChainMdp {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reward_bound(&self) -> f64 {
        1.0
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        vec![0.0]
    }

    fn step(&self, s: &[f64], a: &[f64], _rng: &mut dyn RngCore) -> (Vec<f64>, f64) {
        let up = a[0] >= 0.0;
        let reward = if s[0] >= CHAIN_TOP { 1.0 } else { 0.0 };
        (vec![Self::next_state(s[0], up)], reward)
    }
}

/// Probability that the policy's continuous action at chain state `s` comes
/// out non-negative: Φ(h(s)/σ).
fn chain_up_probability(policy: &GaussianPolicy, s: f64) -> Result<f64> {
    let mean = policy.mean().evaluate(&[s])?[0];
    let sigma = policy.covariance()[0].sqrt();
    Ok(normal_cdf(mean / sigma))
}

/// Standard normal CDF.
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact discounted value of `policy` on the chain from integer state `s0`:
/// builds the 11×11 transition matrix induced by p_up(s) = Φ(h(s)/σ) and
/// solves (I − γP) u = r̄ directly. Test oracle for every Monte Carlo
/// estimator in this crate.
pub fn chain_exact_value(policy: &GaussianPolicy, s0: usize, gamma: f64) -> Result<f64> {
    Ok(chain_exact_values(policy, gamma)?[s0])
}

/// Exact values for all 11 chain states at once.
pub fn chain_exact_values(policy: &GaussianPolicy, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    if policy.mean().spec().state_dim() != 1 || policy.action_dim() != 1 {
        return Err(Error::InvalidArgument(
            "chain oracle needs a 1-d state, 1-d action policy".into(),
        ));
    }
    let n = CHAIN_STATES;
    let mut p = DMatrix::zeros(n, n);
    let mut rewards = DVector::zeros(n);
    for s in 0..n {
        let sf = s as f64;
        if s == n - 1 {
            p[(s, s)] = 1.0;
            rewards[s] = 1.0;
            continue;
        }
        let up = chain_up_probability(policy, sf)?;
        let up_state = (sf + 1.0) as usize;
        let down_state = if s == 0 { 0 } else { s - 1 };
        p[(s, up_state)] += up;
        p[(s, down_state)] += 1.0 - up;
    }
    let system = DMatrix::identity(n, n) - gamma * p;
    let u = system
        .lu()
        .solve(&rewards)
        .ok_or_else(|| Error::InvalidArgument("singular chain system".into()))?;
    Ok(u.iter().cloned().collect())
}

/// Exact Q(s, a) on the chain: first reward plus γ times the exact value of
/// the deterministic successor of (s, sign(a)).
pub fn chain_exact_q(policy: &GaussianPolicy, s: usize, action: f64, gamma: f64) -> Result<f64> {
    let values = chain_exact_values(policy, gamma)?;
    let sf = s as f64;
    let reward = if sf >= CHAIN_TOP { 1.0 } else { 0.0 };
    let next = ChainMdp::next_state(sf, action >= 0.0) as usize;
    Ok(reward + gamma * values[next])
}

/// Trivial MDP paying a constant reward; the state never moves.
#[derive(Debug, Clone)]
pub struct ConstantRewardEnv {
    pub reward: f64,
}

impl Environment for ConstantRewardEnv {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reward_bound(&self) -> f64 {
        self.reward.abs()
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        vec![0.0]
    }

    fn step(&self, s: &[f64], _a: &[f64], _rng: &mut dyn RngCore) -> (Vec<f64>, f64) {
        (s.to_vec(), self.reward)
    }
}

/// Parameters of the surveillance/battery task. State is
/// `(x1, x2, v1, v2, b, d)`: planar position and velocity, battery charge
/// in [0, 100], and the charge delta over the last step. Actions are
/// planar accelerations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveillanceParams {
    /// Surveilled location x_g.
    pub goal: [f64; 2],
    /// Battery charger location x_b.
    pub charger: [f64; 2],
    /// Start position x_0.
    pub start: [f64; 2],
    /// Initial battery charge.
    pub initial_charge: f64,
    /// Charge gained (at the charger) or lost (elsewhere) per step.
    pub charge_rate: f64,
    /// Radius of the charging neighborhood.
    pub charger_radius: f64,
    /// Integration step.
    pub dt: f64,
    /// Per-step velocity damping in [0, 1): v ← (1 − damping)·v + dt·a.
    /// Keeps the velocity of an untrained (pure-noise) policy bounded so
    /// the agent cannot diffuse out of the reward basin before learning
    /// starts.
    pub velocity_damping: f64,
    /// Half-widths of the admissible position box around the origin; the
    /// state space is compact and positions clamp at these walls.
    pub arena_half: [f64; 2],
    /// Speed clamp per velocity axis.
    pub max_speed: f64,
    /// Battery level below which the agent is steered to the charger.
    pub low_threshold: f64,
    /// Battery level up to which charging continues once started.
    pub high_threshold: f64,
    /// Elliptic obstacle center.
    pub obstacle_center: [f64; 2],
    /// Full axis lengths of the obstacle ellipse.
    pub obstacle_axes: [f64; 2],
    /// Weight of the quadratic distance-to-target term.
    pub position_weight: f64,
    /// Weight of the quadratic velocity term.
    pub velocity_weight: f64,
    /// Weight of the quadratic action term.
    pub action_weight: f64,
    /// Weight of the logarithmic obstacle barrier.
    pub barrier_weight: f64,
    /// Floor for the ellipse level set inside the log.
    pub barrier_floor: f64,
    /// Reward saturation bound B_r.
    pub reward_bound: f64,
}

impl Default for SurveillanceParams {
    fn default() -> Self {
        Self {
            goal: [-1.0, -5.0],
            charger: [-1.0, 5.0],
            start: [3.0, 0.0],
            initial_charge: 100.0,
            charge_rate: 1.0,
            charger_radius: 0.5,
            dt: 0.1,
            velocity_damping: 0.1,
            arena_half: [8.0, 9.0],
            max_speed: 4.0,
            low_threshold: 40.0,
            high_threshold: 90.0,
            obstacle_center: [-1.0, 0.0],
            obstacle_axes: [1.8, 0.9],
            position_weight: 0.02,
            velocity_weight: 0.005,
            action_weight: 0.001,
            barrier_weight: 0.05,
            barrier_floor: 1e-3,
            reward_bound: 5.0,
        }
    }
}

/// Which location the reward currently steers toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteerTarget {
    Goal,
    Charger,
}

#[derive(Debug, Clone)]
pub struct SurveillanceEnv {
    params: SurveillanceParams,
}

impl SurveillanceEnv {
    pub fn new(params: SurveillanceParams) -> Result<Self> {
        if !(params.charge_rate > 0.0)
            || !(params.dt > 0.0)
            || !(params.charger_radius > 0.0)
            || !(params.reward_bound > 0.0)
            || !(params.barrier_floor > 0.0)
        {
            return Err(Error::InvalidArgument(
                "surveillance rates, radii and bounds must be > 0".into(),
            ));
        }
        if !(params.low_threshold < params.high_threshold) {
            return Err(Error::InvalidArgument(
                "surveillance thresholds must satisfy low < high".into(),
            ));
        }
        if !(0.0..1.0).contains(&params.velocity_damping) {
            return Err(Error::InvalidArgument(
                "velocity_damping must lie in [0, 1)".into(),
            ));
        }
        if !(params.arena_half[0] > 0.0 && params.arena_half[1] > 0.0)
            || !(params.max_speed > 0.0)
        {
            return Err(Error::InvalidArgument(
                "arena_half and max_speed must be > 0".into(),
            ));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &SurveillanceParams {
        &self.params
    }

    /// Steering mode from the battery state: the charger attracts while
    /// below the low threshold and discharging, or below the high threshold
    /// and charging (d = 0 counts as charging so the at-charger fixed point
    /// is stable); the goal attracts otherwise.
    pub fn target_of(&self, charge: f64, delta: f64) -> SteerTarget {
        let p = &self.params;
        if (charge < p.low_threshold && delta < 0.0)
            || (charge < p.high_threshold && delta >= 0.0)
        {
            SteerTarget::Charger
        } else {
            SteerTarget::Goal
        }
    }

    pub fn at_charger(&self, x: &[f64]) -> bool {
        let p = &self.params;
        let dx = x[0] - p.charger[0];
        let dy = x[1] - p.charger[1];
        (dx * dx + dy * dy).sqrt() <= p.charger_radius
    }

    /// Ellipse level set: negative inside the obstacle, zero on its
    /// boundary, growing outside.
    fn obstacle_level(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        let rx = (x[0] - p.obstacle_center[0]) / (p.obstacle_axes[0] / 2.0);
        let ry = (x[1] - p.obstacle_center[1]) / (p.obstacle_axes[1] / 2.0);
        rx * rx + ry * ry - 1.0
    }

    fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        let p = &self.params;
        let target = match self.target_of(s[4], s[5]) {
            SteerTarget::Goal => p.goal,
            SteerTarget::Charger => p.charger,
        };
        let dx = s[0] - target[0];
        let dy = s[1] - target[1];
        let pos = dx * dx + dy * dy;
        let vel = s[2] * s[2] + s[3] * s[3];
        let act = a[0] * a[0] + a[1] * a[1];
        let barrier = p.barrier_weight * self.obstacle_level(s).max(p.barrier_floor).ln();
        let raw = -p.position_weight * pos - p.velocity_weight * vel - p.action_weight * act
            + barrier;
        raw.clamp(-p.reward_bound, p.reward_bound)
    }
}

impl Environment for SurveillanceEnv {
    fn state_dim(&self) -> usize {
        6
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn reward_bound(&self) -> f64 {
        self.params.reward_bound
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        let p = &self.params;
        vec![p.start[0], p.start[1], 0.0, 0.0, p.initial_charge, 0.0]
    }

    fn step(&self, s: &[f64], a: &[f64], _rng: &mut dyn RngCore) -> (Vec<f64>, f64) {
        let p = &self.params;
        let reward = self.reward(s, a);
        let rate = if self.at_charger(s) {
            p.charge_rate
        } else {
            -p.charge_rate
        };
        let charge = (s[4] + rate).clamp(0.0, 100.0);
        let keep = 1.0 - p.velocity_damping;
        let next = vec![
            (s[0] + p.dt * s[2]).clamp(-p.arena_half[0], p.arena_half[0]),
            (s[1] + p.dt * s[3]).clamp(-p.arena_half[1], p.arena_half[1]),
            (keep * s[2] + p.dt * a[0]).clamp(-p.max_speed, p.max_speed),
            (keep * s[3] + p.dt * a[1]).clamp(-p.max_speed, p.max_speed),
            charge,
            charge - s[4],
        ];
        (next, reward)
    }
}
