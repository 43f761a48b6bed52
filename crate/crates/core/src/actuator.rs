//! Input saturation model and optional autopilot lag.
//!
//! Commanded acceleration never reaches the airframe directly. It drives the
//! smooth saturation dynamics
//!
//! ```text
//! a_M_dot = [1 - (a_M / a_max)^n] a_M_c - rho a_M
//! ```
//!
//! whose output provably stays strictly inside `(-a_max, a_max)` for any
//! bounded command: with `|a_M_c| <= U_M` the reachable set is capped by
//! `delta_M = a_max (U_M / (U_M + rho a_max))^(1/n) < a_max`. An optional
//! first- or second-order lag models autopilot dynamics downstream of the
//! saturation state.

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Standard gravity used to express acceleration bounds in g.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Autopilot lag placed between the saturation state and the kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Autopilot {
    None,
    FirstOrder { tau: f64 },
    SecondOrder { tau1: f64, tau2: f64 },
}

impl Autopilot {
    /// The truncated higher-order autopilot used by the benchmark scenarios.
    pub fn standard_second_order() -> Self {
        Autopilot::SecondOrder { tau1: 0.56, tau2: 0.1 }
    }
}

/// Static configuration of the actuator chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorConfig {
    /// Hard acceleration bound, m/s^2.
    pub a_max: f64,
    /// Saturation sharpness; even integer >= 2.
    pub n: u32,
    /// Damping constant of the saturation model, 1/s.
    pub rho: f64,
    pub autopilot: Autopilot,
}

impl ActuatorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.a_max > 0.0) {
            return Err(SimError::config(format!("a_max must be > 0, got {}", self.a_max)));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(SimError::config(format!(
                "saturation exponent n must be an even integer >= 2, got {}",
                self.n
            )));
        }
        if !(self.rho > 0.0) {
            return Err(SimError::config(format!("rho must be > 0, got {}", self.rho)));
        }
        match self.autopilot {
            Autopilot::None => Ok(()),
            Autopilot::FirstOrder { tau } if tau > 0.0 => Ok(()),
            Autopilot::SecondOrder { tau1, tau2 } if tau1 > 0.0 && tau2 > 0.0 => Ok(()),
            _ => Err(SimError::config("autopilot time constants must be > 0")),
        }
    }
}

/// Dynamic state of the actuator chain. Lag states are unused (held at zero)
/// unless the corresponding autopilot order is configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorChainState {
    /// Saturation-model acceleration state, m/s^2.
    pub a_m: f64,
    pub ap1: f64,
    pub ap2: f64,
    pub config: ActuatorConfig,
}

impl ActuatorChainState {
    /// Chain at rest; the benchmark scenarios start with all states at zero.
    pub fn at_rest(config: ActuatorConfig) -> Self {
        ActuatorChainState { a_m: 0.0, ap1: 0.0, ap2: 0.0, config }
    }
}

/// Rate of the saturation state for a commanded acceleration `a_m_c`.
pub fn saturation_rhs(a_m: f64, a_m_c: f64, a_max: f64, n: u32, rho: f64) -> f64 {
    debug_assert!(a_m.abs() <= a_max * (1.0 + 1e-9), "saturation state escaped its bound");
    (1.0 - (a_m / a_max).powi(n as i32)) * a_m_c - rho * a_m
}

/// The strict sub-bound the saturation state cannot exceed under commands
/// bounded by `u_m`.
pub fn delta_m(u_m: f64, a_max: f64, rho: f64, n: u32) -> f64 {
    debug_assert!(u_m > 0.0);
    a_max * (u_m / (u_m + rho * a_max)).powf(1.0 / n as f64)
}

/// Lag-state derivatives `(ap1_dot, ap2_dot)` for a desired acceleration
/// `a_m_d` (the saturation-model output). Unused states report zero rate.
pub fn autopilot_rhs(chain: &ActuatorChainState, a_m_d: f64) -> (f64, f64) {
    match chain.config.autopilot {
        Autopilot::None => (0.0, 0.0),
        Autopilot::FirstOrder { tau } => ((a_m_d - chain.ap1) / tau, 0.0),
        Autopilot::SecondOrder { tau1, tau2 } => {
            ((a_m_d - chain.ap1) / tau1, (chain.ap1 - chain.ap2) / tau2)
        }
    }
}

/// Acceleration that actually reaches the kinematics: the saturation state
/// when no autopilot is configured, otherwise the last lag state.
pub fn achieved_acceleration(chain: &ActuatorChainState) -> f64 {
    match chain.config.autopilot {
        Autopilot::None => chain.a_m,
        Autopilot::FirstOrder { .. } => chain.ap1,
        Autopilot::SecondOrder { .. } => chain.ap2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engagement::rk4_step;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn cfg(a_max: f64) -> ActuatorConfig {
        ActuatorConfig { a_max, n: 2, rho: 0.1, autopilot: Autopilot::None }
    }

    #[test]
    fn saturation_rhs_values() {
        // At the bound the model reduces to pure damping.
        assert_abs_diff_eq!(
            saturation_rhs(196.2, 5000.0, 196.2, 2, 0.1),
            -0.1 * 196.2,
            epsilon = 1e-12
        );
        assert_eq!(saturation_rhs(0.0, 100.0, 196.2, 2, 0.1), 100.0);
        assert_abs_diff_eq!(
            saturation_rhs(98.1, 500.0, 196.2, 2, 0.1),
            365.19,
            epsilon = 1e-10
        );
    }

    #[test]
    fn delta_m_value_and_limits() {
        assert_abs_diff_eq!(
            delta_m(1000.0, 196.2, 0.1, 2),
            194.3031450267288,
            epsilon = 1e-9
        );
        assert!(delta_m(1000.0, 196.2, 0.1, 2) < 196.2);
        assert_abs_diff_eq!(delta_m(1000.0, 196.2, 1e-12, 2), 196.2, epsilon = 1e-6);
        assert_abs_diff_eq!(delta_m(1000.0, 196.2, 0.1, 1000), 196.2, epsilon = 1e-2);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(196.2).validate().is_ok());
        assert!(ActuatorConfig { n: 3, ..cfg(196.2) }.validate().is_err());
        assert!(ActuatorConfig { n: 0, ..cfg(196.2) }.validate().is_err());
        assert!(ActuatorConfig { rho: 0.0, ..cfg(196.2) }.validate().is_err());
        assert!(ActuatorConfig {
            autopilot: Autopilot::FirstOrder { tau: -1.0 },
            ..cfg(196.2)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn autopilot_dc_gain_is_unity() {
        let mut chain = ActuatorChainState::at_rest(ActuatorConfig {
            autopilot: Autopilot::standard_second_order(),
            ..cfg(196.2)
        });
        chain.a_m = 50.0;
        chain.ap1 = 50.0;
        chain.ap2 = 50.0;
        assert_eq!(autopilot_rhs(&chain, 50.0), (0.0, 0.0));
        assert_eq!(achieved_acceleration(&chain), 50.0);
    }

    #[test]
    fn achieved_follows_configured_order() {
        let mut chain = ActuatorChainState::at_rest(cfg(196.2));
        chain.a_m = 50.0;
        assert_eq!(achieved_acceleration(&chain), 50.0);

        chain.config.autopilot = Autopilot::SecondOrder { tau1: 0.56, tau2: 0.1 };
        chain.ap1 = 31.0;
        chain.ap2 = 17.0;
        assert_eq!(achieved_acceleration(&chain), 17.0);
    }

    fn step_response(autopilot: Autopilot, t_end: f64) -> f64 {
        let chain_cfg = ActuatorConfig { autopilot, ..cfg(196.2) };
        let dt = 1e-3;
        let steps = (t_end / dt).round() as usize;
        let mut y = [0.0f64, 0.0];
        for k in 0..steps {
            y = rk4_step(k as f64 * dt, &y, dt, |_, v| {
                let chain = ActuatorChainState { a_m: 1.0, ap1: v[0], ap2: v[1], config: chain_cfg };
                let (d1, d2) = autopilot_rhs(&chain, 1.0);
                [d1, d2]
            })
            .unwrap();
        }
        match autopilot {
            Autopilot::FirstOrder { .. } => y[0],
            _ => y[1],
        }
    }

    #[test]
    fn first_order_step_matches_closed_form() {
        // Oracle: 1 - exp(-1) at t = tau.
        let y = step_response(Autopilot::FirstOrder { tau: 0.5 }, 0.5);
        assert_abs_diff_eq!(y, 0.63212055882855768, epsilon = 1e-6);
    }

    #[test]
    fn second_order_step_matches_closed_form() {
        // Oracle: 1 - (t1 e^{-t/t1} - t2 e^{-t/t2}) / (t1 - t2) at t = 0.56
        // for the (0.56, 0.1) cascade.
        let y = step_response(Autopilot::standard_second_order(), 0.56);
        assert_abs_diff_eq!(y, 0.5529506506861752, epsilon = 1e-6);
    }

    /// Integrates the saturation model under a piecewise-constant command
    /// stream and returns the peak |a_M|.
    fn peak_under_commands(rng: &mut ChaCha12Rng, u_m: f64, a_max: f64, horizon: f64) -> f64 {
        let dt = 1e-3;
        let steps = (horizon / dt) as usize;
        let mut a = [0.0f64];
        let mut peak: f64 = 0.0;
        let mut cmd = 0.0;
        for k in 0..steps {
            if k % 50 == 0 {
                // Adversarial bias: usually push along the current sign.
                let mag = rng.gen_range(0.0..=u_m);
                cmd = if rng.gen_bool(0.8) {
                    mag * if a[0] >= 0.0 { 1.0 } else { -1.0 }
                } else {
                    mag * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                };
            }
            a = rk4_step(k as f64 * dt, &a, dt, |_, v| {
                [saturation_rhs(v[0], cmd, a_max, 2, 0.1)]
            })
            .unwrap();
            peak = peak.max(a[0].abs());
        }
        peak
    }

    #[test]
    fn bounded_commands_stay_below_delta_m() {
        let a_max = 196.2;
        let u_m = 1000.0;
        let bound = delta_m(u_m, a_max, 0.1, 2) + 1e-6 * a_max;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let peak = peak_under_commands(&mut rng, u_m, a_max, 10.0);
            assert!(peak <= bound, "peak {peak} exceeded {bound}");
        }
    }

    #[test]
    fn opposite_sign_command_decreases_magnitude() {
        // If a_M and the command disagree in sign, |a_M| strictly decreases.
        let dt = 1e-3;
        for (a0, cmd) in [(50.0, -10.0), (-80.0, 25.0), (150.0, -400.0)] {
            let next = rk4_step(0.0, &[a0], dt, |_, v| {
                [saturation_rhs(v[0], cmd, 196.2, 2, 0.1)]
            })
            .unwrap();
            assert!(next[0].abs() < a0.abs(), "{a0} -> {}", next[0]);
        }
    }

    proptest! {
        #[test]
        fn delta_m_strictly_inside_bound(
            u_m in 1.0f64..1e6,
            a_max in 1.0f64..500.0,
            rho in 1e-3f64..2.0,
        ) {
            let d = delta_m(u_m, a_max, rho, 2);
            prop_assert!(d > 0.0 && d < a_max);
        }
    }
}
