//! Time-to-go estimation, impact-time error, and its moving barriers.
//!
//! The time-to-go estimate for a proportional-navigation-class interceptor
//! with a large heading error is
//!
//! ```text
//! t_go = (r / V_M) (1 + sin^2(sigma) / kappa),   kappa = 2 (2 N - 1)
//! ```
//!
//! Because the estimate is even and increasing in `|sigma|`, clamping the
//! lead angle to `|sigma| <= sigma_max` pins `t_go` between `r / V_M` and
//! the same expression evaluated at `sigma_max`. Subtracting the desired
//! time-to-go turns those envelopes into time-varying barriers
//! `(rho_2, rho_1)` on the impact-time error `rho`; keeping `rho` between
//! them is equivalent to honoring the field-of-view bound.

use serde::{Deserialize, Serialize};

use crate::engagement::EngagementState;
use crate::SimError;

/// Navigation constant and the derived estimate coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingGains {
    n_nav: f64,
    kappa: f64,
}

impl TimingGains {
    /// `n_nav` must exceed 1 so that `kappa = 2 (2 n_nav - 1) > 2`.
    pub fn new(n_nav: f64) -> Result<Self, SimError> {
        if !(n_nav > 1.0) {
            return Err(SimError::config(format!(
                "navigation constant must be > 1, got {n_nav}"
            )));
        }
        Ok(TimingGains {
            n_nav,
            kappa: 2.0 * (2.0 * n_nav - 1.0),
        })
    }

    pub fn navigation_constant(&self) -> f64 {
        self.n_nav
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Impact-time error, its barriers, and their rates at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTerms {
    /// Impact-time error `t_go - t_go_d`, s.
    pub rho: f64,
    /// Upper barrier `t_go_max - t_go_d`, s.
    pub rho1: f64,
    /// Lower barrier `r / V_M - t_go_d`, s.
    pub rho2: f64,
    pub rho1_dot: f64,
    pub rho2_dot: f64,
    /// Current time-to-go estimate, s.
    pub t_go: f64,
    /// Desired time-to-go `t_d - t`, s. Negative once the run overshoots.
    pub t_go_d: f64,
}

/// Time-to-go estimate. Zero iff `r` is zero.
pub fn time_to_go(r: f64, sigma: f64, v_m: f64, gains: &TimingGains) -> f64 {
    debug_assert!(r >= 0.0 && v_m > 0.0);
    (r / v_m) * (1.0 + sigma.sin().powi(2) / gains.kappa())
}

/// Impact-time error and barrier terms for the state at `state.t`.
///
/// Running past `t_d` is allowed; `t_go_d` then goes negative and callers
/// flag the run rather than abort.
pub fn error_terms(
    state: &EngagementState,
    t_d: f64,
    sigma_max: f64,
    v_m: f64,
    gains: &TimingGains,
) -> ErrorTerms {
    let kappa = gains.kappa();
    let t_go = time_to_go(state.r, state.sigma, v_m, gains);
    let t_go_d = t_d - state.t;
    let t_go_max = (state.r / v_m) * (1.0 + sigma_max.sin().powi(2) / kappa);
    let t_go_min = state.r / v_m;
    let cos_sigma = state.sigma.cos();
    ErrorTerms {
        rho: t_go - t_go_d,
        rho1: t_go_max - t_go_d,
        rho2: t_go_min - t_go_d,
        rho1_dot: 1.0 - cos_sigma - cos_sigma * sigma_max.sin().powi(2) / kappa,
        rho2_dot: 1.0 - cos_sigma,
        t_go,
        t_go_d,
    }
}

/// Range of desired impact times a single-stage run can realize from the
/// initial geometry: `(r0 / V_M, t_go_max(r0))`.
pub fn feasibility_window(
    r0: f64,
    v_m: f64,
    sigma_max: f64,
    gains: &TimingGains,
) -> (f64, f64) {
    let t_min = r0 / v_m;
    (
        t_min,
        t_min * (1.0 + sigma_max.sin().powi(2) / gains.kappa()),
    )
}

/// Largest impact time achievable under the field-of-view bound,
/// `r0 / (V_M cos(sigma_max))`.
pub fn max_achievable_impact_time(r0: f64, v_m: f64, sigma_max: f64) -> Result<f64, SimError> {
    if !(sigma_max < std::f64::consts::FRAC_PI_2) {
        return Err(SimError::config(format!(
            "sigma_max must be below 90 degrees, got {} rad",
            sigma_max
        )));
    }
    Ok(r0 / (v_m * sigma_max.cos()))
}

/// Guaranteed envelope on the impact-time error at time `t`, given the
/// initial Lyapunov value `v_bar0` and decay rate `kappa_p`.
///
/// Returns `(rho_lower, rho_upper)`. Diagnostic only; never fed back into
/// the control loop.
pub fn barrier_envelope(
    rho1: f64,
    rho2: f64,
    v_bar0: f64,
    kappa_p: f64,
    p: u32,
    t: f64,
) -> (f64, f64) {
    debug_assert!(p >= 1 && kappa_p > 0.0);
    let shrink = 1.0 - (-2.0 * p as f64 * v_bar0 * (-2.0 * kappa_p * t).exp()).exp();
    (rho2 * shrink, rho1 * shrink)
}

/// Barrier Lyapunov value `V_1(rho)` for the asymmetric log barrier, used to
/// seed the envelope monitor.
pub fn barrier_lyapunov(rho: f64, rho1: f64, rho2: f64, p: u32) -> f64 {
    let two_p = 2 * p as i32;
    let bound = if rho > 0.0 { rho1 } else { rho2 };
    let b2p = bound.powi(two_p);
    (b2p / (b2p - rho.powi(two_p))).ln() / (2.0 * p as f64)
}
