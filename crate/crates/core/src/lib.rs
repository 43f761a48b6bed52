//! Simulation engine for planar impact-time-constrained guidance.
//!
//! The crate models a constant-speed interceptor homing on a stationary
//! target under three simultaneous constraints: a desired impact time, a
//! seeker field-of-view bound on the lead angle, and a hard bound on lateral
//! acceleration enforced through a smooth input saturation model. The main
//! guidance law is a barrier-Lyapunov backstepping design on the impact-time
//! error; a sliding-mode deviated-pursuit stage extends it to impact times
//! beyond the single-stage feasibility window. Proportional navigation and
//! deviated pursuit are included as baselines, along with optional autopilot
//! lag and noisy-measurement filtering.
//!
//! Modules mirror the simulation pipeline: [`engagement`] holds the state
//! and kinematics, [`timing`] the time-to-go bookkeeping, [`actuator`] the
//! saturation and lag models, [`guidance`] the command laws, [`sensing`] the
//! noise and filter stack, and [`runner`] the scenario orchestration.
//! [`suites`] bundles the canonical benchmark scenarios.

pub mod actuator;
pub mod engagement;
pub mod guidance;
pub mod runner;
pub mod sensing;
pub mod suites;
pub mod timing;

/// Errors surfaced by simulation and configuration code.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// A state variable or derivative stopped being finite; the run is
    /// corrupt and cannot continue.
    #[error("non-finite {what} at t = {t} s ({detail})")]
    NonFinite {
        what: &'static str,
        t: f64,
        detail: String,
    },
    /// A configuration value violates its documented constraint.
    #[error("configuration error: {0}")]
    Config(String),
}

impl SimError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }
}
