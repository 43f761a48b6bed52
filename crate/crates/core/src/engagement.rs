//! Planar engagement state, kinematics, and the fixed-step integrator.
//!
//! The relative motion between a constant-speed interceptor and a stationary
//! target is described in polar form by the range `r`, the line-of-sight
//! angle `theta_L`, and the velocity lead angle `sigma`:
//!
//! ```text
//! r_dot       = -V_M cos(sigma)
//! theta_L_dot = -V_M sin(sigma) / r
//! sigma_dot   =  a_M / V_M - theta_L_dot
//! ```
//!
//! The heading angle is never stored; it is always `sigma + theta_L`.

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Polar relative state plus inertial interceptor position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementState {
    /// Relative range to the target, m. Positive while in flight.
    pub r: f64,
    /// Line-of-sight angle, rad.
    pub theta_l: f64,
    /// Velocity lead angle `gamma_M - theta_L`, rad.
    pub sigma: f64,
    /// Interceptor inertial x position, m.
    pub x: f64,
    /// Interceptor inertial y position, m.
    pub y: f64,
    /// Elapsed time since launch, s.
    pub t: f64,
}

impl EngagementState {
    /// Reconstructed heading angle `gamma_M = sigma + theta_L`.
    pub fn heading(&self) -> f64 {
        self.sigma + self.theta_l
    }

    pub fn all_finite(&self) -> bool {
        self.r.is_finite()
            && self.theta_l.is_finite()
            && self.sigma.is_finite()
            && self.x.is_finite()
            && self.y.is_finite()
            && self.t.is_finite()
    }
}

/// Time derivative of [`EngagementState`] under a given lateral acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub r_dot: f64,
    pub theta_l_dot: f64,
    pub sigma_dot: f64,
    pub x_dot: f64,
    pub y_dot: f64,
}

/// Evaluates the engagement kinematics at `state` for an achieved lateral
/// acceleration `a_m` and speed `v_m`.
///
/// Identities that hold exactly by construction: `r_dot = -v_m cos(sigma)`
/// and `sigma_dot + theta_l_dot = a_m / v_m`.
pub fn dynamics_rhs(
    state: &EngagementState,
    a_m: f64,
    v_m: f64,
) -> Result<StateDerivative, SimError> {
    if !state.all_finite() || !a_m.is_finite() || !v_m.is_finite() {
        return Err(SimError::NonFinite {
            what: "kinematics input",
            t: state.t,
            detail: format!("state = {state:?}, a_m = {a_m}, v_m = {v_m}"),
        });
    }
    debug_assert!(state.r > 0.0, "range must stay positive while integrating");
    debug_assert!(v_m > 0.0);
    Ok(raw_rhs(state.r, state.theta_l, state.sigma, a_m, v_m))
}

/// Unchecked kinematics evaluation shared with the runner's joint RHS.
pub(crate) fn raw_rhs(r: f64, theta_l: f64, sigma: f64, a_m: f64, v_m: f64) -> StateDerivative {
    let theta_l_dot = -v_m * sigma.sin() / r;
    StateDerivative {
        r_dot: -v_m * sigma.cos(),
        theta_l_dot,
        sigma_dot: a_m / v_m - theta_l_dot,
        x_dot: v_m * (sigma + theta_l).cos(),
        y_dot: v_m * (sigma + theta_l).sin(),
    }
}

/// Advances a state vector one step with the classical fourth-order
/// Runge-Kutta scheme.
///
/// The vector layout is the caller's; the runner concatenates the engagement
/// state with the actuator chain and integrates the joint vector through
/// this function. Deterministic for fixed inputs. A non-finite stage
/// derivative aborts the step with diagnostics.
pub fn rk4_step<const N: usize, F>(
    t: f64,
    state: &[f64; N],
    dt: f64,
    mut rhs: F,
) -> Result<[f64; N], SimError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    debug_assert!(dt > 0.0);
    let check = |k: &[f64; N], stage: &'static str, tau: f64| -> Result<(), SimError> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SimError::NonFinite {
                what: "RK4 stage derivative",
                t: tau,
                detail: format!("{stage}: {k:?}"),
            })
        }
    };

    let k1 = rhs(t, state);
    check(&k1, "k1", t)?;
    let mut y = *state;
    for i in 0..N {
        y[i] = state[i] + 0.5 * dt * k1[i];
    }
    let k2 = rhs(t + 0.5 * dt, &y);
    check(&k2, "k2", t + 0.5 * dt)?;
    for i in 0..N {
        y[i] = state[i] + 0.5 * dt * k2[i];
    }
    let k3 = rhs(t + 0.5 * dt, &y);
    check(&k3, "k3", t + 0.5 * dt)?;
    for i in 0..N {
        y[i] = state[i] + dt * k3[i];
    }
    let k4 = rhs(t + dt, &y);
    check(&k4, "k4", t + dt)?;

    let mut out = *state;
    for i in 0..N {
        out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Minimum range over a run, refined by quadratic interpolation of `r(t)`
/// around the discrete minimum.
///
/// `samples` are `(t, r)` pairs in time order; must be non-empty. A minimum
/// at either boundary is returned as-is.
pub fn miss_distance(samples: &[(f64, f64)]) -> f64 {
    assert!(!samples.is_empty(), "miss_distance needs samples");
    let (mut idx, mut best) = (0usize, samples[0].1);
    for (i, &(_, r)) in samples.iter().enumerate() {
        if r < best {
            best = r;
            idx = i;
        }
    }
    if idx == 0 || idx + 1 >= samples.len() {
        return best;
    }
    let (t0, r0) = samples[idx - 1];
    let (t1, r1) = samples[idx];
    let (t2, r2) = samples[idx + 1];
    match parabola_vertex(t0, r0, t1, r1, t2, r2) {
        Some((tv, rv)) if tv >= t0 && tv <= t2 && rv < best => rv,
        _ => best,
    }
}

/// Vertex of the parabola through three points, if it opens upward.
pub(crate) fn parabola_vertex(
    t0: f64,
    r0: f64,
    t1: f64,
    r1: f64,
    t2: f64,
    r2: f64,
) -> Option<(f64, f64)> {
    let f01 = (r1 - r0) / (t1 - t0);
    let f12 = (r2 - r1) / (t2 - t1);
    let a = (f12 - f01) / (t2 - t0);
    if a <= 0.0 || !a.is_finite() {
        return None;
    }
    // Newton form r(t) = r0 + f01 (t - t0) + a (t - t0)(t - t1)
    let tv = 0.5 * (t0 + t1) - f01 / (2.0 * a);
    let rv = r0 + f01 * (tv - t0) + a * (tv - t0) * (tv - t1);
    Some((tv, rv))
}
