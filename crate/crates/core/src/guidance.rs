//! Guidance laws: barrier-Lyapunov backstepping, the sliding-mode
//! deviated-pursuit stage, the multi-stage composite, and baselines.
//!
//! The main law treats the saturation state `a_M` as a virtual control for
//! the impact-time error `rho`, whose dynamics are
//!
//! ```text
//! rho_dot = F_p + G_p a_M
//! F_p = 1 - cos(sigma) (1 - sin^2(sigma) / kappa)
//! G_p = r sin(2 sigma) / (kappa V_M^2)
//! ```
//!
//! Backstepping through the saturation model yields a commanded acceleration
//! that keeps `rho` strictly between its moving barriers, which is exactly
//! the field-of-view bound, while the saturation dynamics keep `|a_M|`
//! strictly below `a_max`. For desired impact times beyond the single-stage
//! window, a terminal-sliding-mode stage first steers the lead angle to a
//! held deviated-pursuit value and hands over once the desired time-to-go
//! drops to the maximum achievable one.

use serde::{Deserialize, Serialize};

use crate::actuator::ActuatorConfig;
use crate::timing::{ErrorTerms, TimingGains};
use crate::SimError;

/// Lead-angle band treated as the `G_p` singularity: below it the
/// stabilizing function and its rate are replaced by their proven limits.
const SIN_2SIGMA_SINGULARITY: f64 = 1e-4;
/// Barrier magnitudes below this are degenerate (interception instant);
/// the gain ratios hold their last finite values.
const RHO_DEGENERACY: f64 = 1e-9;
/// Saturation-model inversion guard: below this denominator the previous
/// command is held.
const DENOMINATOR_GUARD: f64 = 1e-6;
/// Commands are clipped to this multiple of `a_max` before entering the
/// saturation model, which needs a finite command bound.
const COMMAND_CLAMP_FACTOR: f64 = 50.0;
/// Lead-angle error band inside which stage one degrades to pure
/// deviated-pursuit tracking.
const HOLD_SIGMA_E: f64 = 0.1 * std::f64::consts::PI / 180.0;

/// All tunables of the backstepping law and the sliding-mode stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceGains {
    /// Backstepping gain on the impact-time error, 1/s.
    pub kappa1_bar: f64,
    /// Backstepping gain on the virtual-control error, 1/s.
    pub kappa3_bar: f64,
    /// Floor inside the time-varying gain `kappa2_bar`.
    pub beta_bar: f64,
    /// Barrier exponent; the error enters as `rho^(2p)`.
    pub p: u32,
    /// Navigation constant behind the time-to-go estimate.
    pub n_nav: f64,
    /// Field-of-view bound on the lead angle, rad.
    pub sigma_max: f64,
    /// Sliding-surface scale.
    pub xi: f64,
    /// Fractional-power numerator; odd.
    pub p_f: u32,
    /// Fractional-power denominator; odd, with `1 < p_f/q_f < 2`.
    pub q_f: u32,
    /// Reaching-law gain, m/s^2.
    pub c: f64,
    /// Lead angle held during the deviated-pursuit stage, rad.
    pub sigma_d: f64,
    /// Margin added to the desired impact time in the analytic switching
    /// instant, s.
    pub epsilon_t1: f64,
    /// Width of the linear band replacing the sign function, in surface
    /// units; zero restores the pure sign.
    pub boundary_layer: f64,
}

impl GuidanceGains {
    /// Gains used throughout the benchmark scenarios.
    pub fn paper_defaults() -> Self {
        GuidanceGains {
            kappa1_bar: 1.0,
            kappa3_bar: 1.0,
            beta_bar: 1.0,
            p: 1,
            n_nav: 3.0,
            sigma_max: 80f64.to_radians(),
            xi: 1.0,
            p_f: 11,
            q_f: 9,
            c: 1000.0,
            sigma_d: 65f64.to_radians(),
            epsilon_t1: 0.01,
            boundary_layer: 0.01,
        }
    }

    pub fn timing(&self) -> TimingGains {
        TimingGains::new(self.n_nav).expect("validated navigation constant")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("kappa1_bar", self.kappa1_bar),
            ("kappa3_bar", self.kappa3_bar),
            ("beta_bar", self.beta_bar),
            ("xi", self.xi),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.p < 1 {
            return Err(SimError::config("p must be a positive integer"));
        }
        TimingGains::new(self.n_nav)?;
        if !(self.sigma_max > 0.0 && self.sigma_max < std::f64::consts::FRAC_PI_2) {
            return Err(SimError::config(format!(
                "sigma_max must lie in (0, 90) degrees, got {} rad",
                self.sigma_max
            )));
        }
        if self.p_f % 2 == 0 || self.q_f % 2 == 0 || self.p_f == 0 || self.q_f == 0 {
            return Err(SimError::config(
                "p_f and q_f must be odd positive integers",
            ));
        }
        let ratio = self.p_f as f64 / self.q_f as f64;
        if !(ratio > 1.0 && ratio < 2.0) {
            return Err(SimError::config(format!(
                "p_f/q_f must lie in (1, 2), got {ratio}"
            )));
        }
        if !(self.sigma_d < self.sigma_max) {
            return Err(SimError::config(
                "sigma_d must stay below the field-of-view bound sigma_max",
            ));
        }
        if self.epsilon_t1 < 0.0 || self.boundary_layer < 0.0 {
            return Err(SimError::config(
                "epsilon_t1 and boundary_layer must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Which branch produced the current command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveStage {
    Blf,
    Sliding,
    Clamped,
}

impl ActiveStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActiveStage::Blf => "blf",
            ActiveStage::Sliding => "sliding",
            ActiveStage::Clamped => "clamped",
        }
    }
}

/// Internals of one guidance evaluation, logged alongside the command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceDiagnostics {
    pub alpha1: f64,
    pub alpha1_dot: f64,
    pub mu: f64,
    pub kappa2_bar: f64,
    pub z2_bar: f64,
    pub s_surface: f64,
    pub active_stage: ActiveStage,
    pub f_p: f64,
    pub g_p: f64,
}

impl GuidanceDiagnostics {
    fn zeroed(stage: ActiveStage) -> Self {
        GuidanceDiagnostics {
            alpha1: 0.0,
            alpha1_dot: 0.0,
            mu: 0.0,
            kappa2_bar: 0.0,
            z2_bar: 0.0,
            s_surface: 0.0,
            active_stage: stage,
            f_p: 0.0,
            g_p: 0.0,
        }
    }
}

/// Guard and anomaly events latched over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GuidanceEvents {
    pub kappa2_degenerate: bool,
    pub barrier_violation: bool,
    pub denominator_guard: bool,
    pub command_clamped: bool,
}

/// What the guidance law sees at one step: truth in nominal runs, the
/// zero-order-held filtered proxy in noisy runs.
#[derive(Debug, Clone, Copy)]
pub struct GuidanceInputs {
    pub t: f64,
    pub r: f64,
    pub sigma: f64,
    pub r_dot: f64,
    pub theta_l_dot: f64,
    pub sigma_dot: f64,
    /// Acceleration currently driving the kinematics (equals the saturation
    /// state without an autopilot).
    pub a_achieved: f64,
}

/// Multi-stage progression; the flip into `Blf` is one-way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Sliding,
    Blf,
}

/// Per-scenario mutable guidance state: the stage flag, the backward
/// difference memory for `kappa2_bar`, and the guard events. One context per
/// scenario; never shared.
#[derive(Debug, Clone)]
pub struct GuidanceContext {
    phase: Phase,
    realized_switch_time: Option<f64>,
    hold_entered_at: Option<f64>,
    prev_kappa2: Option<(f64, f64)>, // (t, kappa2)
    last_ratio1: f64,
    last_ratio2: f64,
    last_command: f64,
    events: GuidanceEvents,
}

impl GuidanceContext {
    /// Context for a single-stage run: the barrier law is active from launch.
    pub fn single_stage() -> Self {
        GuidanceContext {
            phase: Phase::Blf,
            realized_switch_time: Some(0.0),
            hold_entered_at: None,
            prev_kappa2: None,
            last_ratio1: 0.0,
            last_ratio2: 0.0,
            last_command: 0.0,
            events: GuidanceEvents::default(),
        }
    }

    /// Context for a multi-stage run: starts in the sliding stage and flips
    /// when the desired time-to-go first drops to the achievable maximum.
    pub fn multi_stage() -> Self {
        GuidanceContext {
            phase: Phase::Sliding,
            realized_switch_time: None,
            ..GuidanceContext::single_stage()
        }
    }

    pub fn realized_switch_time(&self) -> Option<f64> {
        self.realized_switch_time
    }

    /// First instant stage one entered its deviated-pursuit hold band.
    pub fn hold_entered_at(&self) -> Option<f64> {
        self.hold_entered_at
    }

    pub fn events(&self) -> GuidanceEvents {
        self.events
    }

    pub fn in_terminal_stage(&self) -> bool {
        self.phase == Phase::Blf
    }
}

/// Coefficients of the impact-time error dynamics `rho_dot = F_p + G_p a_M`.
pub fn error_dynamics_terms(r: f64, sigma: f64, v_m: f64, kappa: f64) -> (f64, f64) {
    let f_p = 1.0 - sigma.cos() * (1.0 - sigma.sin().powi(2) / kappa);
    let g_p = r * (2.0 * sigma).sin() / (kappa * v_m * v_m);
    (f_p, g_p)
}

/// Time-varying gain `sqrt(beta + (rho1_dot/rho1)^2 + (rho2_dot/rho2)^2)`.
///
/// Degenerate barriers (interception instant) are the caller's concern; this
/// form divides directly.
pub fn kappa2_bar(errors: &ErrorTerms, beta_bar: f64) -> f64 {
    let r1 = errors.rho1_dot / errors.rho1;
    let r2 = errors.rho2_dot / errors.rho2;
    (beta_bar + r1 * r1 + r2 * r2).sqrt()
}

/// As [`kappa2_bar`] but holding each ratio at its last finite value when
/// the corresponding barrier magnitude falls below the degeneracy threshold.
fn kappa2_bar_guarded(errors: &ErrorTerms, beta_bar: f64, ctx: &mut GuidanceContext) -> f64 {
    let r1 = if errors.rho1.abs() < RHO_DEGENERACY {
        ctx.events.kappa2_degenerate = true;
        ctx.last_ratio1
    } else {
        let v = errors.rho1_dot / errors.rho1;
        ctx.last_ratio1 = v;
        v
    };
    let r2 = if errors.rho2.abs() < RHO_DEGENERACY {
        ctx.events.kappa2_degenerate = true;
        ctx.last_ratio2
    } else {
        let v = errors.rho2_dot / errors.rho2;
        ctx.last_ratio2 = v;
        v
    };
    (beta_bar + r1 * r1 + r2 * r2).sqrt()
}

/// Stabilizing function `alpha_1`: the virtual acceleration that cancels
/// `F_p` and drives `rho` down at rate `kappa1 + kappa2`.
///
/// Inside the `G_p` singularity band (lead angle near 0 or +/-90 degrees)
/// the proven limit 0 is returned instead of dividing.
pub fn alpha1(sigma: f64, f_p: f64, g_p: f64, rho: f64, kappa1: f64, kappa2: f64) -> f64 {
    if (2.0 * sigma).sin().abs() < SIN_2SIGMA_SINGULARITY {
        return 0.0;
    }
    (-f_p - (kappa1 + kappa2) * rho) / g_p
}

/// Barrier selector `mu`; positive in the interior of `(rho2, rho1)`.
///
/// Returns `(mu, violated)`. Outside the active barrier the value is clamped
/// to 99.9% of the violated bound and flagged rather than blowing up.
pub fn mu(rho: f64, rho1: f64, rho2: f64, p: u32, q_positive: bool) -> (f64, bool) {
    let two_p = 2 * p as i32;
    let bound = if q_positive { rho1 } else { rho2 };
    let violated = !(rho > rho2 && rho < rho1);
    let rho_eval = if rho.powi(two_p) >= bound.powi(two_p) {
        0.999 * bound
    } else {
        rho
    };
    (
        1.0 / (bound.powi(two_p) - rho_eval.powi(two_p)),
        violated,
    )
}

/// Total time derivative of `alpha_1` along the closed-loop flow, by the
/// chain rule through `(sigma, r, rho, kappa2_bar)`.
#[allow(clippy::too_many_arguments)]
pub fn alpha1_dot(
    r: f64,
    sigma: f64,
    r_dot: f64,
    sigma_dot: f64,
    rho: f64,
    rho_dot: f64,
    kappa: f64,
    v_m: f64,
    kappa1: f64,
    kappa2: f64,
    kappa2_dot: f64,
    f_p: f64,
    g_p: f64,
) -> f64 {
    if (2.0 * sigma).sin().abs() < SIN_2SIGMA_SINGULARITY {
        return 0.0;
    }
    let (sin_s, cos_s) = sigma.sin_cos();
    let dfp_dsigma = sin_s + (2.0 * sin_s * cos_s * cos_s - sin_s.powi(3)) / kappa;
    let fp_dot = dfp_dsigma * sigma_dot;
    let gp_dot = (r_dot * (2.0 * sigma).sin() + 2.0 * r * (2.0 * sigma).cos() * sigma_dot)
        / (kappa * v_m * v_m);
    let big_k = kappa1 + kappa2;
    let numer = -f_p - big_k * rho;
    let numer_dot = -fp_dot - big_k * rho_dot - kappa2_dot * rho;
    (numer_dot * g_p - numer * gp_dot) / (g_p * g_p)
}

/// Applies the saturation-model inversion and the command clamp shared by
/// the barrier and sliding commands.
fn finalize_command(
    numerator: f64,
    a_m: f64,
    actuator: &ActuatorConfig,
    ctx: &mut GuidanceContext,
    stage: ActiveStage,
) -> (f64, ActiveStage) {
    let denom = 1.0 - (a_m / actuator.a_max).powi(actuator.n as i32);
    let mut stage = stage;
    let mut cmd = if denom.abs() < DENOMINATOR_GUARD {
        ctx.events.denominator_guard = true;
        stage = ActiveStage::Clamped;
        ctx.last_command
    } else {
        numerator / denom
    };
    let clamp = COMMAND_CLAMP_FACTOR * actuator.a_max;
    if cmd.abs() > clamp {
        ctx.events.command_clamped = true;
        stage = ActiveStage::Clamped;
        cmd = cmd.clamp(-clamp, clamp);
    }
    ctx.last_command = cmd;
    (cmd, stage)
}

/// Barrier-Lyapunov backstepping command.
pub fn blf_command(
    inputs: &GuidanceInputs,
    errors: &ErrorTerms,
    gains: &GuidanceGains,
    actuator: &ActuatorConfig,
    a_m: f64,
    v_m: f64,
    ctx: &mut GuidanceContext,
) -> (f64, GuidanceDiagnostics) {
    let kappa = gains.timing().kappa();
    let (f_p, g_p) = error_dynamics_terms(inputs.r, inputs.sigma, v_m, kappa);
    let k2 = kappa2_bar_guarded(errors, gains.beta_bar, ctx);
    let k2_dot = match ctx.prev_kappa2 {
        Some((t_prev, k_prev)) if inputs.t > t_prev => (k2 - k_prev) / (inputs.t - t_prev),
        _ => 0.0,
    };
    ctx.prev_kappa2 = Some((inputs.t, k2));

    let a1 = alpha1(inputs.sigma, f_p, g_p, errors.rho, gains.kappa1_bar, k2);
    let rho_dot = f_p + g_p * inputs.a_achieved;
    let a1_dot = alpha1_dot(
        inputs.r,
        inputs.sigma,
        inputs.r_dot,
        inputs.sigma_dot,
        errors.rho,
        rho_dot,
        kappa,
        v_m,
        gains.kappa1_bar,
        k2,
        k2_dot,
        f_p,
        g_p,
    );

    let (mu_val, violated) = mu(errors.rho, errors.rho1, errors.rho2, gains.p, errors.rho > 0.0);
    if violated {
        ctx.events.barrier_violation = true;
    }
    let z2 = a_m - a1;
    let rho_pow = errors.rho.powi(2 * gains.p as i32 - 1);
    let numerator =
        actuator.rho * a_m + a1_dot - mu_val * g_p * rho_pow - gains.kappa3_bar * z2;
    let (cmd, stage) = finalize_command(numerator, a_m, actuator, ctx, ActiveStage::Blf);
    (
        cmd,
        GuidanceDiagnostics {
            alpha1: a1,
            alpha1_dot: a1_dot,
            mu: mu_val,
            kappa2_bar: k2,
            z2_bar: z2,
            s_surface: 0.0,
            active_stage: stage,
            f_p,
            g_p,
        },
    )
}

/// Proportional navigation baseline `N V_M theta_L_dot`.
pub fn png_command(r: f64, sigma: f64, v_m: f64, n_nav: f64) -> f64 {
    debug_assert!(r > 0.0);
    n_nav * v_m * (-v_m * sigma.sin() / r)
}

/// Deviated pursuit baseline `V_M theta_L_dot`; holds the lead angle exactly.
pub fn deviated_pursuit_command(r: f64, sigma: f64, v_m: f64) -> f64 {
    debug_assert!(r > 0.0);
    v_m * (-v_m * sigma.sin() / r)
}

/// Signed real power `sign(x) |x|^a`, the real-valued odd realization of the
/// fractional exponents in the sliding stage.
pub fn spow(x: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0);
    x.signum() * x.abs().powf(a)
}

/// Terminal sliding surface `sigma_e + spow(sigma_e_dot, p_f/q_f) / xi`.
pub fn sliding_surface(sigma_e: f64, sigma_e_dot: f64, xi: f64, p_f: u32, q_f: u32) -> f64 {
    sigma_e + spow(sigma_e_dot, p_f as f64 / q_f as f64) / xi
}

/// Sign function with a linear boundary layer; `width <= 0` restores the
/// pure sign.
fn sgn_smooth(s: f64, width: f64) -> f64 {
    if width > 0.0 {
        (s / width).clamp(-1.0, 1.0)
    } else {
        s.signum()
    }
}

/// Stage-one command: drives the lead angle to `sigma_d` on a terminal
/// sliding surface, then holds the deviated-pursuit course through the
/// saturation-model inversion.
pub fn stage1_command(
    inputs: &GuidanceInputs,
    gains: &GuidanceGains,
    actuator: &ActuatorConfig,
    a_m: f64,
    v_m: f64,
    ctx: &mut GuidanceContext,
) -> (f64, GuidanceDiagnostics) {
    let sigma_e = inputs.sigma - gains.sigma_d;
    let sigma_e_dot = inputs.sigma_dot;
    let s = sliding_surface(sigma_e, sigma_e_dot, gains.xi, gains.p_f, gains.q_f);
    let theta_l_ddot = -2.0 * inputs.r_dot * inputs.theta_l_dot / inputs.r
        - (inputs.sigma.cos() / inputs.r) * inputs.a_achieved;

    // Inside the hold band the sliding terms vanish by design; dropping them
    // outright keeps the on-surface reduction a_M = V_M theta_L_dot exact.
    // The band is re-evaluated every step so drift re-engages the surface.
    let hold = sigma_e.abs() < HOLD_SIGMA_E && s.abs() < gains.boundary_layer.max(f64::EPSILON);
    if hold && ctx.hold_entered_at.is_none() {
        ctx.hold_entered_at = Some(inputs.t);
    }
    let ratio = gains.p_f as f64 / gains.q_f as f64;
    let numerator = if hold {
        actuator.rho * a_m + v_m * theta_l_ddot
    } else {
        actuator.rho * a_m + v_m * theta_l_ddot
            - v_m * gains.xi / ratio * spow(sigma_e_dot, 2.0 - ratio)
            - gains.c * sgn_smooth(s, gains.boundary_layer)
    };
    let (cmd, stage) = finalize_command(numerator, a_m, actuator, ctx, ActiveStage::Sliding);
    let mut diag = GuidanceDiagnostics::zeroed(stage);
    diag.s_surface = s;
    (cmd, diag)
}

/// Analytic switching instant for the multi-stage strategy, clamped to be
/// non-negative. Diagnostic only: the binding switch rule is the event
/// `t_go_d <= t_go_max`.
///
/// Uses the deviated-pursuit stretch factor `Lambda = 1 + sin^2(sigma_d) /
/// kappa` at the held lead angle.
pub fn switching_time_t1(
    r0: f64,
    sigma_d: f64,
    v_m: f64,
    t_d: f64,
    kappa: f64,
    epsilon_t1: f64,
) -> Result<f64, SimError> {
    let lambda = 1.0 + sigma_d.sin().powi(2) / kappa;
    let denom = 1.0 - lambda * sigma_d.cos();
    if denom <= 0.0 {
        return Err(SimError::config(format!(
            "deviated pursuit at sigma_d = {:.3} rad cannot stretch the impact time \
             (1 - Lambda cos sigma_d = {denom:.4} <= 0)",
            sigma_d
        )));
    }
    let t1 = (v_m * (t_d + epsilon_t1) - lambda * r0) / (v_m * denom);
    Ok(t1.max(0.0))
}

/// Multi-stage composite: sliding stage until the desired time-to-go first
/// drops to the achievable maximum, then the barrier law. The flip is
/// one-way and its instant is recorded in the context.
pub fn multi_stage_command(
    inputs: &GuidanceInputs,
    errors: &ErrorTerms,
    gains: &GuidanceGains,
    actuator: &ActuatorConfig,
    a_m: f64,
    v_m: f64,
    ctx: &mut GuidanceContext,
) -> (f64, GuidanceDiagnostics) {
    if ctx.phase == Phase::Sliding && errors.rho1 >= 0.0 {
        // t_go_d <= t_go_max: the barrier interval has opened.
        ctx.phase = Phase::Blf;
        ctx.realized_switch_time = Some(inputs.t);
        ctx.prev_kappa2 = None;
    }
    match ctx.phase {
        Phase::Blf => blf_command(inputs, errors, gains, actuator, a_m, v_m, ctx),
        Phase::Sliding => stage1_command(inputs, gains, actuator, a_m, v_m, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engagement::EngagementState;
    use crate::timing::error_terms;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const V: f64 = 250.0;

    fn nominal_inputs() -> GuidanceInputs {
        // sigma0 = 60 deg, r0 = 10 km, a_M = 0.
        let sigma = 60f64.to_radians();
        let theta_l_dot = -V * sigma.sin() / 10_000.0;
        GuidanceInputs {
            t: 0.0,
            r: 10_000.0,
            sigma,
            r_dot: -V * sigma.cos(),
            theta_l_dot,
            sigma_dot: -theta_l_dot,
            a_achieved: 0.0,
        }
    }

    fn nominal_errors() -> ErrorTerms {
        let state = EngagementState {
            r: 10_000.0,
            theta_l: 0.0,
            sigma: 60f64.to_radians(),
            x: 0.0,
            y: 0.0,
            t: 0.0,
        };
        error_terms(&state, 42.0, 80f64.to_radians(), V, &TimingGains::new(3.0).unwrap())
    }

    #[test]
    fn error_dynamics_values() {
        let (f_p, g_p) = error_dynamics_terms(10_000.0, 60f64.to_radians(), V, 10.0);
        assert_abs_diff_eq!(f_p, 0.5375, epsilon = 1e-12);
        assert_abs_diff_eq!(g_p, 0.013856406460551018, epsilon = 1e-15);

        let (f0, g0) = error_dynamics_terms(10_000.0, 0.0, V, 10.0);
        assert_eq!((f0, g0), (0.0, 0.0));
    }

    #[test]
    fn kappa2_values() {
        let e = nominal_errors();
        assert_abs_diff_eq!(kappa2_bar(&e, 1.0), 1.0584027233209715, epsilon = 1e-12);

        let flat = ErrorTerms { rho1_dot: 0.0, rho2_dot: 0.0, ..e };
        assert_eq!(kappa2_bar(&flat, 1.0), 1.0);
    }

    #[test]
    fn alpha1_nominal_value_and_sign() {
        let e = nominal_errors();
        let (f_p, g_p) = error_dynamics_terms(10_000.0, 60f64.to_radians(), V, 10.0);
        let k2 = kappa2_bar(&e, 1.0);
        let a1 = alpha1(60f64.to_radians(), f_p, g_p, e.rho, 1.0, k2);
        assert_abs_diff_eq!(a1, -187.34314201243069, epsilon = 1e-9);
        assert!(a1 < 0.0, "positive rho inside (0, 90) deg lead commands deceleration");
    }

    #[test]
    fn alpha1_zero_in_singularity_band() {
        let (f_p, g_p) = error_dynamics_terms(10_000.0, 1e-6, V, 10.0);
        assert_eq!(alpha1(1e-6, f_p, g_p, 0.0, 1.0, 1.0), 0.0);
        assert_eq!(alpha1(std::f64::consts::FRAC_PI_2, 1.0, 1e-9, 0.5, 1.0, 1.0), 0.0);
    }

    #[test]
    fn mu_branches() {
        // rho = 0 with q = 0 selects the lower barrier.
        let (m, v) = mu(0.0, 1.8794, -2.0, 1, false);
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-12);
        assert!(!v);

        let (m, _) = mu(1.0, 1.8793852415718168, -2.0, 1, true);
        assert_abs_diff_eq!(m, 0.39493084363469846, epsilon = 1e-12);

        // Approaching the barrier blows up; violation clamps and flags.
        let (near, _) = mu(1.879, 1.8794, -2.0, 1, true);
        assert!(near > 300.0);
        let (clamped, violated) = mu(2.5, 1.8794, -2.0, 1, true);
        assert!(violated);
        assert!(clamped.is_finite() && clamped > 0.0);
    }

    #[test]
    fn alpha1_dot_frozen_state_is_zero() {
        let a = alpha1_dot(
            10_000.0,
            60f64.to_radians(),
            0.0,
            0.0,
            1.0,
            0.0,
            10.0,
            V,
            1.0,
            1.05,
            0.0,
            0.5375,
            0.013856406460551018,
        );
        assert_eq!(a, 0.0);
    }

    #[test]
    fn alpha1_dot_nominal_value() {
        // Oracle: chain rule evaluated independently at the t = 0 scenario.
        let e = nominal_errors();
        let i = nominal_inputs();
        let (f_p, g_p) = error_dynamics_terms(i.r, i.sigma, V, 10.0);
        let k2 = kappa2_bar(&e, 1.0);
        let a1d = alpha1_dot(
            i.r, i.sigma, i.r_dot, i.sigma_dot, e.rho, f_p, 10.0, V, 1.0, k2, 0.0, f_p, g_p,
        );
        assert_abs_diff_eq!(a1d, -88.191629582217336, epsilon = 1e-9);
    }

    #[test]
    fn blf_command_nominal_start() {
        // Oracle: independent spreadsheet evaluation of the full command at
        // t = 0 for sigma0 = 60 deg, t_d = 42 s, paper gains, a_M = 0.
        let gains = GuidanceGains::paper_defaults();
        let actuator = ActuatorConfig {
            a_max: 20.0 * crate::actuator::STANDARD_GRAVITY,
            n: 2,
            rho: 0.1,
            autopilot: crate::actuator::Autopilot::None,
        };
        let mut ctx = GuidanceContext::single_stage();
        let (cmd, diag) = blf_command(
            &nominal_inputs(),
            &nominal_errors(),
            &gains,
            &actuator,
            0.0,
            V,
            &mut ctx,
        );
        assert_abs_diff_eq!(cmd, -275.54024391694123, epsilon = 1e-9);
        assert_abs_diff_eq!(diag.z2_bar, 187.34314201243069, epsilon = 1e-9);
        assert_eq!(diag.active_stage, ActiveStage::Blf);
        assert!(!ctx.events().command_clamped);
    }

    #[test]
    fn blf_command_trivial_zero() {
        // rho = 0, a_M = alpha1 = 0, frozen rates, rho_act = 0 -> command 0.
        let gains = GuidanceGains::paper_defaults();
        let actuator = ActuatorConfig {
            a_max: 196.2,
            n: 2,
            rho: 0.0_f64.max(1e-12), // validated rho > 0; use negligible damping
            autopilot: crate::actuator::Autopilot::None,
        };
        let inputs = GuidanceInputs {
            t: 0.0,
            r: 10_000.0,
            sigma: 1e-7, // inside the singularity band: alpha terms zero
            r_dot: 0.0,
            theta_l_dot: 0.0,
            sigma_dot: 0.0,
            a_achieved: 0.0,
        };
        let errors = ErrorTerms {
            rho: 0.0,
            rho1: 1.0,
            rho2: -1.0,
            rho1_dot: 0.0,
            rho2_dot: 0.0,
            t_go: 40.0,
            t_go_d: 40.0,
        };
        let mut ctx = GuidanceContext::single_stage();
        let (cmd, _) = blf_command(&inputs, &errors, &gains, &actuator, 0.0, V, &mut ctx);
        assert_abs_diff_eq!(cmd, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn baselines() {
        let sigma = 60f64.to_radians();
        assert_abs_diff_eq!(
            png_command(10_000.0, sigma, V, 3.0),
            -16.237976320958225,
            epsilon = 1e-12
        );
        assert_eq!(png_command(10_000.0, 0.0, V, 3.0), 0.0);
        // Turns toward the collision course.
        assert!(png_command(10_000.0, 0.3, V, 3.0) < 0.0);
        assert!(png_command(10_000.0, -0.3, V, 3.0) > 0.0);

        assert_abs_diff_eq!(
            deviated_pursuit_command(10_000.0, 65f64.to_radians(), V),
            -5.6644236689790623,
            epsilon = 1e-12
        );
        assert_eq!(deviated_pursuit_command(10_000.0, 0.0, V), 0.0);
    }

    #[test]
    fn spow_values() {
        assert_abs_diff_eq!(spow(-8.0, 1.0 / 3.0), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spow(0.5, 11.0 / 9.0), 0.42862199142653642, epsilon = 1e-12);
    }

    #[test]
    fn sliding_surface_values() {
        assert_eq!(sliding_surface(0.0, 0.0, 1.0, 11, 9), 0.0);
        assert_abs_diff_eq!(
            sliding_surface(0.1, 0.05, 1.0, 11, 9),
            0.12569521332005487,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sgn_smooth_shape() {
        assert_eq!(sgn_smooth(0.5, 0.01), 1.0);
        assert_eq!(sgn_smooth(-0.5, 0.01), -1.0);
        assert_abs_diff_eq!(sgn_smooth(0.005, 0.01), 0.5, epsilon = 1e-12);
        assert_eq!(sgn_smooth(0.0, 0.0), 0.0);
    }

    #[test]
    fn stage1_on_surface_is_los_rate_tracking() {
        // At sigma_e = sigma_e_dot = 0 with negligible damping, the command
        // reduces to V_M theta_L_ddot over the saturation denominator.
        let mut gains = GuidanceGains::paper_defaults();
        gains.sigma_d = 65f64.to_radians();
        let actuator = ActuatorConfig {
            a_max: 196.2,
            n: 2,
            rho: 1e-12,
            autopilot: crate::actuator::Autopilot::None,
        };
        let sigma = gains.sigma_d;
        let theta_l_dot = -V * sigma.sin() / 10_000.0;
        let inputs = GuidanceInputs {
            t: 10.0,
            r: 10_000.0,
            sigma,
            r_dot: -V * sigma.cos(),
            theta_l_dot,
            sigma_dot: 0.0,
            a_achieved: V * theta_l_dot,
        };
        let mut ctx = GuidanceContext::multi_stage();
        let (cmd, diag) = stage1_command(&inputs, &gains, &actuator, V * theta_l_dot, V, &mut ctx);
        let theta_l_ddot = -2.0 * inputs.r_dot * theta_l_dot / inputs.r
            - (sigma.cos() / inputs.r) * inputs.a_achieved;
        let denom = 1.0 - (V * theta_l_dot / 196.2).powi(2);
        assert_abs_diff_eq!(cmd, V * theta_l_ddot / denom, epsilon = 1e-9);
        assert_eq!(diag.s_surface, 0.0);
        assert!(ctx.hold_entered_at().is_some());
    }

    #[test]
    fn theta_l_ddot_matches_oracle() {
        // Oracle value at sigma = 65 deg, r = 10 km, a_M = 0.
        let sigma = 65f64.to_radians();
        let r = 10_000.0;
        let r_dot = -V * sigma.cos();
        let theta_l_dot = -V * sigma.sin() / r;
        let val = -2.0 * r_dot * theta_l_dot / r;
        assert_abs_diff_eq!(val, -4.7877777694936127e-4, epsilon = 1e-15);
    }

    #[test]
    fn switching_time_values() {
        // Inside the single-stage window the analytic instant clamps to 0.
        let t1 = switching_time_t1(10_000.0, 65f64.to_radians(), V, 42.0, 10.0, 0.0).unwrap();
        assert_eq!(t1, 0.0);

        let t1 = switching_time_t1(10_000.0, 65f64.to_radians(), V, 55.0, 10.0, 0.0).unwrap();
        assert_abs_diff_eq!(t1, 21.586719400386688, epsilon = 1e-9);

        // dt1/dt_d > 1.
        let t1b = switching_time_t1(10_000.0, 65f64.to_radians(), V, 55.1, 10.0, 0.0).unwrap();
        assert!((t1b - t1) / 0.1 > 1.0);

        // A lead angle too shallow to stretch the time errors out.
        assert!(switching_time_t1(10_000.0, 0.05, V, 80.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn multi_stage_switches_immediately_inside_window() {
        let gains = GuidanceGains::paper_defaults();
        let actuator = ActuatorConfig {
            a_max: 196.2,
            n: 2,
            rho: 0.1,
            autopilot: crate::actuator::Autopilot::None,
        };
        let mut ctx = GuidanceContext::multi_stage();
        let (_, diag) = multi_stage_command(
            &nominal_inputs(),
            &nominal_errors(), // rho1 = 1.88 >= 0 from the start for t_d = 42
            &gains,
            &actuator,
            0.0,
            V,
            &mut ctx,
        );
        assert_eq!(ctx.realized_switch_time(), Some(0.0));
        assert_eq!(diag.active_stage, ActiveStage::Blf);
    }

    #[test]
    fn gains_validation() {
        assert!(GuidanceGains::paper_defaults().validate().is_ok());
        let mut g = GuidanceGains::paper_defaults();
        g.q_f = 10;
        assert!(g.validate().is_err());
        g = GuidanceGains::paper_defaults();
        g.p_f = 19; // ratio > 2
        assert!(g.validate().is_err());
        g = GuidanceGains::paper_defaults();
        g.sigma_d = g.sigma_max;
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn spow_is_odd(x in -100.0f64..100.0, a in 0.1f64..3.0) {
            prop_assert!((spow(-x, a) + spow(x, a)).abs() < 1e-9 * (1.0 + x.abs().powf(a)));
        }

        #[test]
        fn kappa2_scale_invariant(
            lambda in 0.01f64..100.0,
            r1 in 0.1f64..5.0,
            r2 in -5.0f64..-0.1,
            d1 in -1.0f64..1.0,
            d2 in -1.0f64..1.0,
        ) {
            let base = ErrorTerms {
                rho: 0.0, rho1: r1, rho2: r2, rho1_dot: d1, rho2_dot: d2,
                t_go: 0.0, t_go_d: 0.0,
            };
            let scaled = ErrorTerms {
                rho1: lambda * r1, rho2: lambda * r2,
                rho1_dot: lambda * d1, rho2_dot: lambda * d2,
                ..base
            };
            let a = kappa2_bar(&base, 1.0);
            let b = kappa2_bar(&scaled, 1.0);
            prop_assert!((a - b).abs() < 1e-9 * a);
        }

        #[test]
        fn png_turns_toward_collision_course(sigma in -1.4f64..1.4) {
            prop_assume!(sigma.abs() > 1e-6);
            let cmd = png_command(10_000.0, sigma, V, 3.0);
            prop_assert!(cmd * sigma < 0.0);
        }
    }
}
