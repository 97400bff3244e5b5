//! Closed-form evaluation of the convergence-analysis constants and
//! admissibility checks for the step size, compression factor and kernel
//! width. Everything here is plain arithmetic on user-supplied problem
//! constants; nothing is estimated from data.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Problem constants entering the convergence analysis. All user-supplied;
/// the doc comment of each field names the quantity it bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConstants {
    /// Reward bound B_r: |r(s,a)| ≤ B_r.
    pub reward_bound: f64,
    /// Lipschitz bound L_rs on ∂r/∂s.
    pub reward_lipschitz_state: f64,
    /// Lipschitz bound L_ra on ∂r/∂a.
    pub reward_lipschitz_action: f64,
    /// Lower occupancy bound β_ρ ≤ ρ(s).
    pub occupancy_lower: f64,
    /// Upper occupancy bound B_ρ ≥ ρ(s).
    pub occupancy_upper: f64,
    /// Lipschitz constant L_p of the transition density.
    pub transition_lipschitz: f64,
    /// Lipschitz constant L_ps of ∂p/∂a in the state argument.
    pub transition_grad_lipschitz_state: f64,
    /// Lipschitz constant L_pa of ∂p/∂a in the action argument.
    pub transition_grad_lipschitz_action: f64,
    /// Discount factor γ ∈ (0, 1).
    pub gamma: f64,
    /// Action dimension p.
    pub action_dim: usize,
    /// State dimension n.
    pub state_dim: usize,
    /// λ_min(Σ) of the policy covariance.
    pub policy_cov_min: f64,
    /// λ_min(Σ_H) of the kernel bandwidth.
    pub kernel_cov_min: f64,
    /// λ_max(Σ_H) = ‖Σ_H‖ of the kernel bandwidth.
    pub kernel_cov_max: f64,
    /// det Σ_H.
    pub kernel_cov_det: f64,
    /// Measure |S| of the (compact) state space.
    pub state_space_measure: f64,
    /// RKHS norm ‖h‖ of the current policy mean.
    pub policy_norm: f64,
    /// Stationarity threshold ε of the convergence statement.
    pub stationarity_epsilon: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("reward_bound", self.reward_bound),
            ("occupancy_lower", self.occupancy_lower),
            ("occupancy_upper", self.occupancy_upper),
            ("policy_cov_min", self.policy_cov_min),
            ("kernel_cov_min", self.kernel_cov_min),
            ("kernel_cov_max", self.kernel_cov_max),
            ("kernel_cov_det", self.kernel_cov_det),
            ("state_space_measure", self.state_space_measure),
            ("stationarity_epsilon", self.stationarity_epsilon),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let non_negatives = [
            ("reward_lipschitz_state", self.reward_lipschitz_state),
            ("reward_lipschitz_action", self.reward_lipschitz_action),
            ("transition_lipschitz", self.transition_lipschitz),
            (
                "transition_grad_lipschitz_state",
                self.transition_grad_lipschitz_state,
            ),
            (
                "transition_grad_lipschitz_action",
                self.transition_grad_lipschitz_action,
            ),
            ("policy_norm", self.policy_norm),
        ];
        for (name, v) in non_negatives {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if self.action_dim == 0 || self.state_dim == 0 {
            return Err(Error::InvalidArgument(
                "state_dim and action_dim must be positive".into(),
            ));
        }
        if self.occupancy_lower > self.occupancy_upper {
            return Err(Error::InvalidArgument(
                "occupancy_lower must not exceed occupancy_upper".into(),
            ));
        }
        Ok(())
    }

    /// β_ρ / B_ρ.
    fn occupancy_ratio(&self) -> f64 {
        self.occupancy_lower / self.occupancy_upper
    }
}

/// Lipschitz constants of the value-function gradient:
/// ‖∇U(g) − ∇U(h)‖ ≤ linear·‖g−h‖ + quadratic·‖g−h‖².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    pub linear: f64,
    pub quadratic: f64,
}

pub fn smoothness(pc: &ProblemConstants) -> SmoothnessConstants {
    let p = pc.action_dim as f64;
    let g = pc.gamma;
    let lam = pc.policy_cov_min;
    let linear = pc.reward_bound * (1.0 - g + p * (1.0 + g)) / (lam * (1.0 - g) * (1.0 - g));
    let quadratic =
        pc.reward_bound * (1.0 + p) * p.sqrt() / (lam.powf(1.5) * (1.0 - g).powi(3));
    SmoothnessConstants { linear, quadratic }
}

/// Moment bound σ of the stochastic gradient:
/// σ = (3γ)^{1/3} / (λ_min(Σ^{1/2})(1−γ)²) · (4Γ(2+p/2)/Γ(p/2))^{1/4}.
pub fn gradient_moment_bound(pc: &ProblemConstants) -> f64 {
    let p = pc.action_dim as f64;
    let g = pc.gamma;
    let lam_sqrt = pc.policy_cov_min.sqrt();
    let gamma_ratio = 4.0 * gamma_fn(2.0 + p / 2.0) / gamma_fn(p / 2.0);
    (3.0 * g).cbrt() / (lam_sqrt * (1.0 - g) * (1.0 - g)) * gamma_ratio.powf(0.25)
}

/// Coefficients of the η² and η³ terms in the per-step drift bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    pub quadratic: f64,
    pub cubic: f64,
}

pub fn drift_constants(sm: &SmoothnessConstants, sigma: f64, k: f64) -> DriftConstants {
    let s = sigma * sigma + 2.0 * k * sigma + k * k;
    DriftConstants {
        quadratic: sm.linear * s,
        cubic: sm.quadratic * s.powf(1.5),
    }
}

/// Gradient norm bound: ‖∇U(h)‖ ≤ √p·B_r / ((1−γ)² λ_min(Σ^{1/2})).
pub fn gradient_norm_bound(pc: &ProblemConstants) -> f64 {
    let p = pc.action_dim as f64;
    let g = pc.gamma;
    p.sqrt() * pc.reward_bound / ((1.0 - g) * (1.0 - g) * pc.policy_cov_min.sqrt())
}

/// Largest admissible compression factor: K must stay strictly below
/// (ε / 2B_∇)(β_ρ / B_ρ) for a positive step size to exist.
pub fn max_compression(pc: &ProblemConstants, grad_bound: f64) -> f64 {
    pc.stationarity_epsilon / (2.0 * grad_bound) * pc.occupancy_ratio()
}

/// Largest admissible step size for compression factor `k`:
/// η_max = (√(C₁² + 4C₂(εβ_ρ/2B_ρ − B_∇K)) − C₁) / 2C₂.
///
/// Returns an infeasible-configuration error when k exceeds the largest
/// admissible compression factor; k at the boundary yields exactly zero.
pub fn max_step(
    pc: &ProblemConstants,
    drift: &DriftConstants,
    grad_bound: f64,
    k: f64,
) -> Result<f64> {
    // Written as B_∇(K_max − K), identical to εβ_ρ/(2B_ρ) − B_∇K, so the
    // boundary case k = K_max cancels exactly.
    let headroom = grad_bound * (max_compression(pc, grad_bound) - k);
    if headroom < 0.0 {
        return Err(Error::InfeasibleConfiguration(format!(
            "compression factor {k} exceeds the admissible maximum {}",
            max_compression(pc, grad_bound)
        )));
    }
    if headroom == 0.0 {
        // Discriminant term vanishes; the quotient is identically zero.
        return Ok(0.0);
    }
    let c1 = drift.quadratic;
    let c2 = drift.cubic;
    if c2 == 0.0 {
        return Ok(headroom / c1);
    }
    // Cancellation-free form of (√(C₁² + 4C₂·headroom) − C₁)/2C₂.
    Ok(2.0 * headroom / ((c1 * c1 + 4.0 * c2 * headroom).sqrt() + c1))
}

/// Gaussian normalization factor Z = √(det 2πΣ_H) = (2π)^{n/2} √(det Σ_H).
pub fn normalization_factor(pc: &ProblemConstants) -> f64 {
    (2.0 * std::f64::consts::PI).powf(pc.state_dim as f64 / 2.0) * pc.kernel_cov_det.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConditionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Maximum-kernel-width condition:
/// √(np)(1 + β_ρ/B_ρ)‖Σ_H‖ Z L B |S| ≤ (ε/2)(β_ρ/B_ρ).
///
/// `lipschitz` and `bound` are the product constants L and B from
/// [`lipschitz_constants`]; `z` is the normalization factor.
pub fn kernel_condition(
    pc: &ProblemConstants,
    lipschitz: f64,
    bound: f64,
    z: f64,
) -> KernelConditionCheck {
    let np = (pc.state_dim * pc.action_dim) as f64;
    let ratio = pc.occupancy_ratio();
    let lhs = np.sqrt()
        * (1.0 + ratio)
        * pc.kernel_cov_max
        * z
        * lipschitz
        * bound
        * pc.state_space_measure;
    let rhs = 0.5 * pc.stationarity_epsilon * ratio;
    KernelConditionCheck {
        lhs,
        rhs,
        satisfied: lhs <= rhs,
    }
}

/// Bound and Lipschitz constants of the smoothed action derivative of the
/// Q-function and of its product with the occupancy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzConstants {
    /// B_D = √2 B_r/(1−γ) · Γ((p+1)/2)/Γ(p/2).
    pub action_derivative_bound: f64,
    /// L_h = ‖h‖ λ_min(Σ_H)^{-1/2}.
    pub policy_lipschitz: f64,
    /// L_Qs = L_rs + B_r L_ps |S|/(1−γ).
    pub q_grad_lipschitz_state: f64,
    /// L_Qa = L_ra + B_r L_pa |S|/(1−γ).
    pub q_grad_lipschitz_action: f64,
    /// L_D = L_Qs + L_Qa L_h.
    pub action_derivative_lipschitz: f64,
    /// B = B_ρ B_D.
    pub product_bound: f64,
    /// L = B_D L_p + B_ρ L_D.
    pub product_lipschitz: f64,
}

/// Evaluates the lemma-statement constants. `gamma_factored` switches to
/// the appendix-proof variant that multiplies the transition terms of
/// L_Qs, L_Qa by γ.
pub fn lipschitz_constants(pc: &ProblemConstants, gamma_factored: bool) -> LipschitzConstants {
    let p = pc.action_dim as f64;
    let g = pc.gamma;
    let discount = 1.0 / (1.0 - g);
    let transition_factor = if gamma_factored { g * discount } else { discount };

    let action_derivative_bound = std::f64::consts::SQRT_2 * pc.reward_bound * discount
        * gamma_fn((p + 1.0) / 2.0)
        / gamma_fn(p / 2.0);
    let policy_lipschitz = pc.policy_norm / pc.kernel_cov_min.sqrt();
    let q_grad_lipschitz_state = pc.reward_lipschitz_state
        + pc.reward_bound
            * transition_factor
            * pc.transition_grad_lipschitz_state
            * pc.state_space_measure;
    let q_grad_lipschitz_action = pc.reward_lipschitz_action
        + pc.reward_bound
            * transition_factor
            * pc.transition_grad_lipschitz_action
            * pc.state_space_measure;
    let action_derivative_lipschitz =
        q_grad_lipschitz_state + q_grad_lipschitz_action * policy_lipschitz;
    LipschitzConstants {
        action_derivative_bound,
        policy_lipschitz,
        q_grad_lipschitz_state,
        q_grad_lipschitz_action,
        action_derivative_lipschitz,
        product_bound: pc.occupancy_upper * action_derivative_bound,
        product_lipschitz: action_derivative_bound * pc.transition_lipschitz
            + pc.occupancy_upper * action_derivative_lipschitz,
    }
}

/// Everything the `bounds` CLI subcommand prints, evaluated in one sweep
/// for a given compression factor.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub smoothness: SmoothnessConstants,
    pub moment_bound: f64,
    pub drift: DriftConstants,
    pub gradient_bound: f64,
    pub max_compression: f64,
    /// None when the requested compression factor is inadmissible.
    pub max_step: Option<f64>,
    pub lipschitz: LipschitzConstants,
    pub normalization: f64,
    pub kernel_condition: KernelConditionCheck,
    pub compression_factor: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.max_step.map(|eta| eta > 0.0).unwrap_or(false) && self.kernel_condition.satisfied
    }
}

pub fn feasibility(
    pc: &ProblemConstants,
    compression_factor: f64,
    gamma_factored: bool,
) -> Result<FeasibilityReport> {
    pc.validate()?;
    let sm = smoothness(pc);
    let sigma = gradient_moment_bound(pc);
    let drift = drift_constants(&sm, sigma, compression_factor);
    let grad_bound = gradient_norm_bound(pc);
    let k_max = max_compression(pc, grad_bound);
    let eta_max = max_step(pc, &drift, grad_bound, compression_factor).ok();
    let lips = lipschitz_constants(pc, gamma_factored);
    let z = normalization_factor(pc);
    let cond = kernel_condition(pc, lips.product_lipschitz, lips.product_bound, z);
    Ok(FeasibilityReport {
        smoothness: sm,
        moment_bound: sigma,
        drift,
        gradient_bound: grad_bound,
        max_compression: k_max,
        max_step: eta_max,
        lipschitz: lips,
        normalization: z,
        kernel_condition: cond,
        compression_factor,
    })
}

/// Gamma function via the Lanczos approximation (g = 7, 9 terms),
/// relative error well under 1e-10 on the half-integer arguments used
/// here.
fn gamma_fn(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        // Reflection formula.
        return pi / ((pi * x).sin() * gamma_fn(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * pi).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Baseline constants used across tests; individual tests override
    /// fields as needed.
    fn base() -> ProblemConstants {
        ProblemConstants {
            reward_bound: 1.0,
            reward_lipschitz_state: 1.0,
            reward_lipschitz_action: 1.0,
            occupancy_lower: 0.5,
            occupancy_upper: 1.0,
            transition_lipschitz: 1.0,
            transition_grad_lipschitz_state: 1.0,
            transition_grad_lipschitz_action: 1.0,
            gamma: 0.9,
            action_dim: 1,
            state_dim: 1,
            policy_cov_min: 1.0,
            kernel_cov_min: 1.0,
            kernel_cov_max: 1.0,
            kernel_cov_det: 1.0,
            state_space_measure: 1.0,
            policy_norm: 1.0,
            stationarity_epsilon: 1.0,
        }
    }

    #[test]
    fn gamma_fn_matches_half_integer_recurrence() {
        // Exact recurrence from Γ(1/2) = √π and Γ(1) = 1.
        let mut exact_half = std::f64::consts::PI.sqrt();
        let mut exact_int = 1.0f64;
        for i in 0..12 {
            let half_arg = 0.5 + i as f64;
            let int_arg = 1.0 + i as f64;
            assert_relative_eq!(gamma_fn(half_arg), exact_half, max_relative = 1e-12);
            assert_relative_eq!(gamma_fn(int_arg), exact_int, max_relative = 1e-12);
            exact_half *= half_arg;
            exact_int *= int_arg;
        }
    }

    #[test]
    fn gamma_fn_matches_statrs() {
        for x in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 5.5, 10.0, 0.25, 0.75] {
            assert_relative_eq!(
                gamma_fn(x),
                statrs::function::gamma::gamma(x),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn smoothness_printed_example() {
        // B_r = 1, p = 1, γ = 0.9, λ_min(Σ) = 1 → linear = 200.
        let sm = smoothness(&base());
        assert_relative_eq!(sm.linear, 200.0, max_relative = 1e-12);
    }

    #[test]
    fn smoothness_scales_linearly_in_reward_bound() {
        let mut pc = base();
        let a = smoothness(&pc);
        pc.reward_bound = 2.0;
        let b = smoothness(&pc);
        assert_relative_eq!(b.linear, 2.0 * a.linear, max_relative = 1e-12);
        assert_relative_eq!(b.quadratic, 2.0 * a.quadratic, max_relative = 1e-12);
    }

    #[test]
    fn smoothness_gamma_zero_limit() {
        // γ → 0: linear → B_r (1+p)/λ_min(Σ). Validation forbids γ = 0, so
        // evaluate the formula at a tiny γ.
        let mut pc = base();
        pc.gamma = 1e-14;
        let sm = smoothness(&pc);
        assert_relative_eq!(sm.linear, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn moment_bound_printed_example() {
        // p = 2, γ = 0.9, λ_min(Σ^{1/2}) = 1:
        // σ = (2.7)^{1/3} · 100 · 8^{1/4}.
        let mut pc = base();
        pc.action_dim = 2;
        let direct = 2.7f64.cbrt() * 100.0 * 8.0f64.powf(0.25);
        assert_relative_eq!(gradient_moment_bound(&pc), direct, max_relative = 1e-12);
    }

    #[test]
    fn moment_bound_vanishes_with_gamma() {
        let mut pc = base();
        pc.gamma = 1e-18;
        assert!(gradient_moment_bound(&pc) < 1e-5);
    }

    #[test]
    fn drift_constants_cases() {
        let sm = SmoothnessConstants {
            linear: 200.0,
            quadratic: 3.0,
        };
        // K = 0 → quadratic = L₁σ², cubic = L₂σ³.
        let d = drift_constants(&sm, 2.0, 0.0);
        assert_relative_eq!(d.quadratic, 800.0, max_relative = 1e-12);
        assert_relative_eq!(d.cubic, 24.0, max_relative = 1e-12);
        // (σ + K)² identity.
        let d = drift_constants(&sm, 1.0, 1.0);
        assert_relative_eq!(d.quadratic, 200.0 * 4.0, max_relative = 1e-12);
    }

    #[test]
    fn gradient_bound_printed_example() {
        // p = 1, B_r = 1, γ = 0.9, λ_min(Σ^{1/2}) = 1 → 100.
        assert_relative_eq!(gradient_norm_bound(&base()), 100.0, max_relative = 1e-12);
        // Degree-1 homogeneity in B_r.
        let mut pc = base();
        pc.reward_bound = 3.0;
        assert_relative_eq!(gradient_norm_bound(&pc), 300.0, max_relative = 1e-12);
    }

    #[test]
    fn max_compression_printed_example() {
        // ε = 1, β/B = 0.5, B_∇ = 100 → 0.0025.
        assert_relative_eq!(
            max_compression(&base(), 100.0),
            0.0025,
            max_relative = 1e-12
        );
    }

    #[test]
    fn max_step_boundary_and_limits() {
        let pc = base();
        let grad = gradient_norm_bound(&pc);
        let k_max = max_compression(&pc, grad);
        let sm = smoothness(&pc);
        let sigma = gradient_moment_bound(&pc);

        // K = K_max → η_max = 0 exactly.
        let drift = drift_constants(&sm, sigma, k_max);
        assert_eq!(max_step(&pc, &drift, grad, k_max).unwrap(), 0.0);

        // K beyond the maximum is infeasible.
        let drift = drift_constants(&sm, sigma, 2.0 * k_max);
        assert!(matches!(
            max_step(&pc, &drift, grad, 2.0 * k_max),
            Err(Error::InfeasibleConfiguration(_))
        ));

        // C₂ → 0 limit: η_max → headroom / C₁.
        let headroom = grad * (k_max - 0.5 * k_max);
        let d0 = DriftConstants {
            quadratic: 10.0,
            cubic: 0.0,
        };
        assert_relative_eq!(
            max_step(&pc, &d0, grad, 0.5 * k_max).unwrap(),
            headroom / 10.0,
            max_relative = 1e-12
        );
        let d_small = DriftConstants {
            quadratic: 10.0,
            cubic: 1e-9,
        };
        assert_relative_eq!(
            max_step(&pc, &d_small, grad, 0.5 * k_max).unwrap(),
            headroom / 10.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn max_step_monotone_decreasing_in_k() {
        let pc = base();
        let grad = gradient_norm_bound(&pc);
        let k_max = max_compression(&pc, grad);
        let sm = smoothness(&pc);
        let sigma = gradient_moment_bound(&pc);
        let mut last = f64::INFINITY;
        for i in 0..=50 {
            let k = k_max * i as f64 / 50.0;
            let drift = drift_constants(&sm, sigma, k);
            let eta = max_step(&pc, &drift, grad, k).unwrap();
            assert!(eta <= last + 1e-15, "eta_max not decreasing at k={k}");
            assert!(eta >= 0.0);
            last = eta;
        }
    }

    #[test]
    fn kernel_condition_printed_example() {
        // n = p = 2, Σ_H = 1e-2 I, ε = 1, β = B, L·B·|S| = 1.
        let mut pc = base();
        pc.state_dim = 2;
        pc.action_dim = 2;
        pc.occupancy_lower = 1.0;
        pc.occupancy_upper = 1.0;
        pc.kernel_cov_max = 1e-2;
        pc.kernel_cov_det = 1e-4;
        let z = normalization_factor(&pc);
        assert_relative_eq!(z, 2.0 * std::f64::consts::PI * 1e-2, max_relative = 1e-12);
        let check = kernel_condition(&pc, 1.0, 1.0, z);
        let direct = 2.0 * 2.0 * 1e-2 * (2.0 * std::f64::consts::PI * 1e-2);
        assert_relative_eq!(check.lhs, direct, max_relative = 1e-12);
        assert_relative_eq!(check.rhs, 0.5, max_relative = 1e-12);
        assert!(check.satisfied);
    }

    #[test]
    fn kernel_condition_vanishes_with_shrinking_kernel() {
        let mut pc = base();
        let mut last_lhs = f64::INFINITY;
        for scale in [1.0, 1e-1, 1e-2, 1e-3] {
            pc.kernel_cov_max = scale;
            pc.kernel_cov_min = scale;
            pc.kernel_cov_det = scale;
            let z = normalization_factor(&pc);
            let check = kernel_condition(&pc, 1.0, 1.0, z);
            assert!(check.lhs < last_lhs);
            last_lhs = check.lhs;
        }
        assert!(last_lhs < 1e-3);
    }

    #[test]
    fn lipschitz_printed_examples() {
        // p = 1: B_D = √2 B_r / ((1−γ)√π).
        let pc = base();
        let l = lipschitz_constants(&pc, false);
        let direct = std::f64::consts::SQRT_2 / (0.1 * std::f64::consts::PI.sqrt());
        assert_relative_eq!(l.action_derivative_bound, direct, max_relative = 1e-12);

        // ‖h‖ = 0 → L_D = L_Qs.
        let mut pc0 = base();
        pc0.policy_norm = 0.0;
        let l0 = lipschitz_constants(&pc0, false);
        assert_eq!(
            l0.action_derivative_lipschitz,
            l0.q_grad_lipschitz_state
        );
    }

    #[test]
    fn lipschitz_gamma_factored_variant() {
        let pc = base();
        let lemma = lipschitz_constants(&pc, false);
        let appendix = lipschitz_constants(&pc, true);
        // L_Qs: L_rs + B_r L_ps |S| /(1−γ) vs γ-multiplied transition term.
        assert_relative_eq!(lemma.q_grad_lipschitz_state, 11.0, max_relative = 1e-12);
        assert_relative_eq!(appendix.q_grad_lipschitz_state, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn all_outputs_positive_for_valid_constants() {
        let pc = base();
        let report = feasibility(&pc, 0.001, false).unwrap();
        assert!(report.smoothness.linear > 0.0);
        assert!(report.smoothness.quadratic > 0.0);
        assert!(report.moment_bound > 0.0);
        assert!(report.drift.quadratic > 0.0);
        assert!(report.drift.cubic > 0.0);
        assert!(report.gradient_bound > 0.0);
        assert!(report.max_compression > 0.0);
        assert!(report.lipschitz.action_derivative_bound > 0.0);
        assert!(report.lipschitz.product_bound > 0.0);
        assert!(report.lipschitz.product_lipschitz > 0.0);
        assert!(report.normalization > 0.0);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut pc = base();
        pc.gamma = 1.0;
        assert!(pc.validate().is_err());
        let mut pc = base();
        pc.occupancy_lower = 2.0;
        assert!(pc.validate().is_err());
        let mut pc = base();
        pc.reward_bound = 0.0;
        assert!(pc.validate().is_err());
    }
}
