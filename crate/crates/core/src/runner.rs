//! Scenario orchestration: state assembly, the guidance -> saturation ->
//! autopilot -> kinematics step loop, interception detection, metrics, and
//! trajectory logging.
//!
//! Each step follows a fixed order: (1) sample and filter sensors if due,
//! (2) compute the timing errors, (3) compute the commanded acceleration,
//! (4) advance the joint state one RK4 step with the command held constant,
//! (5) append a log record if due. Baseline laws (proportional navigation,
//! deviated pursuit) bypass the actuator chain entirely and are evaluated
//! inside the integrator stages, so their defining closed-loop identities
//! hold to integrator precision.

use serde::{Deserialize, Serialize};

use crate::actuator::{self, ActuatorChainState, ActuatorConfig};
use crate::engagement::{self, EngagementState};
use crate::guidance::{self, GuidanceContext, GuidanceGains, GuidanceInputs};
use crate::sensing::{FilterGains, FilteredState, NoiseConfig, SensorPipeline};
use crate::timing::{self, ErrorTerms};
use crate::SimError;

/// Absolute slack when latching barrier/field-of-view monitor flags, so the
/// structural equalities at `sigma = 0` and `sigma = sigma_max` do not trip
/// them through rounding.
const MONITOR_TOL: f64 = 1e-9;
/// `|rho|` threshold defining the time-to-go error convergence instant.
const RHO_CONVERGENCE_BAND: f64 = 0.02;
/// Window over which terminal convergence metrics are evaluated, s.
const TERMINAL_WINDOW: f64 = 0.5;

/// Guidance law selection for a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Blf,
    MultiStage,
    Png,
    DeviatedPursuit,
}

impl LawKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawKind::Blf => "blf",
            LawKind::MultiStage => "multi_stage",
            LawKind::Png => "png",
            LawKind::DeviatedPursuit => "deviated_pursuit",
        }
    }

    /// Baselines output the achieved acceleration directly instead of
    /// commanding the saturation model.
    fn is_direct(&self) -> bool {
        matches!(self, LawKind::Png | LawKind::DeviatedPursuit)
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    /// Initial range, m.
    pub r0: f64,
    /// Initial line-of-sight angle, rad.
    pub theta_l0: f64,
    /// Initial heading angle, rad; the initial lead angle is
    /// `gamma_m0 - theta_l0`.
    pub gamma_m0: f64,
    /// Interceptor speed, m/s.
    pub v_m: f64,
    /// Desired impact time, s.
    pub t_d: f64,
    pub law: LawKind,
    pub gains: GuidanceGains,
    pub actuator: ActuatorConfig,
    pub noise: Option<NoiseConfig>,
    pub filter: FilterGains,
    /// Integration step, s.
    pub dt: f64,
    /// Wall-clock cutoff; reaching it flags the run as failed, s.
    pub t_max: f64,
    /// Interception radius, m.
    pub r_lethal: f64,
    /// Trajectory decimation: one record every this many steps.
    pub log_every: u32,
}

impl ScenarioConfig {
    /// Benchmark defaults: 10 km head-start at 250 m/s, 60 degree lead,
    /// `t_d` = 42 s, 20 g acceleration bound, 1 ms integration.
    pub fn paper_default(label: impl Into<String>) -> Self {
        ScenarioConfig {
            label: label.into(),
            r0: 10_000.0,
            theta_l0: 0.0,
            gamma_m0: 60f64.to_radians(),
            v_m: 250.0,
            t_d: 42.0,
            law: LawKind::Blf,
            gains: GuidanceGains::paper_defaults(),
            actuator: ActuatorConfig {
                a_max: 20.0 * actuator::STANDARD_GRAVITY,
                n: 2,
                rho: 0.1,
                autopilot: actuator::Autopilot::None,
            },
            noise: None,
            filter: FilterGains::default(),
            dt: 1e-3,
            t_max: 52.0,
            r_lethal: 1.0,
            log_every: 100,
        }
    }

    pub fn sigma0(&self) -> f64 {
        self.gamma_m0 - self.theta_l0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.label.is_empty() {
            return Err(SimError::config("scenario label must not be empty"));
        }
        for (name, v, min) in [
            ("r0", self.r0, 0.0),
            ("v_m", self.v_m, 0.0),
            ("dt", self.dt, 0.0),
            ("r_lethal", self.r_lethal, 0.0),
            ("t_d", self.t_d, 0.0),
        ] {
            if !(v > min) || !v.is_finite() {
                return Err(SimError::config(format!(
                    "{name} must be finite and > {min}, got {v} (scenario '{}')",
                    self.label
                )));
            }
        }
        if self.r0 <= self.r_lethal {
            return Err(SimError::config("r0 must exceed r_lethal"));
        }
        if !(self.t_max > self.t_d) {
            return Err(SimError::config(format!(
                "t_max ({}) must exceed t_d ({}) (scenario '{}')",
                self.t_max, self.t_d, self.label
            )));
        }
        if self.log_every == 0 {
            return Err(SimError::config("log_every must be >= 1"));
        }
        if !self.theta_l0.is_finite() || !self.gamma_m0.is_finite() {
            return Err(SimError::config("initial angles must be finite"));
        }
        self.gains.validate()?;
        self.actuator.validate()?;
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if self.law == LawKind::Blf {
            let (lo, hi) = timing::feasibility_window(
                self.r0,
                self.v_m,
                self.gains.sigma_max,
                &self.gains.timing(),
            );
            if !(self.t_d > lo && self.t_d < hi) {
                return Err(SimError::config(format!(
                    "t_d = {} s is outside the single-stage feasibility window \
                     ({lo:.3}, {hi:.3}) s for scenario '{}'; use the multi_stage law",
                    self.t_d, self.label
                )));
            }
        }
        Ok(())
    }
}

/// One decimated trajectory row. Column names match the CSV header exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub r: f64,
    #[serde(rename = "theta_L")]
    pub theta_l: f64,
    pub sigma: f64,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "a_M_c")]
    pub a_m_c: f64,
    #[serde(rename = "a_M")]
    pub a_m: f64,
    #[serde(rename = "a_M_achieved")]
    pub a_m_achieved: f64,
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub t_go: f64,
    pub s_surface: f64,
    pub stage: String,
}

/// End-of-run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub label: String,
    /// Interception instant, s; absent when the run timed out.
    pub impact_time: Option<f64>,
    pub miss_distance: f64,
    /// Integral of the squared saturation-state acceleration, m^2/s^3.
    pub control_effort: f64,
    pub peak_abs_a_m: f64,
    pub peak_abs_sigma: f64,
    pub barrier_violated: bool,
    pub fov_violated: bool,
    pub actuator_violated: bool,
    pub realized_switch_time: Option<f64>,
    pub terminal_sigma: f64,
    pub terminal_a_m: f64,
    pub timed_out: bool,
    /// Latched when the run outlives the desired impact time.
    pub overran_desired_time: bool,
    /// Peak |sigma| over the final half second, rad.
    pub final_window_max_abs_sigma: f64,
    /// Peak |a_M| over the final half second, m/s^2.
    pub final_window_max_abs_a_m: f64,
    /// First instant after which |rho| stays inside the convergence band.
    pub rho_convergence_time: Option<f64>,
    /// Analytic switching instant, logged for comparison with the realized
    /// event-based switch.
    pub analytic_switch_time: Option<f64>,
    /// |t_go_d - t_go_max| at the realized switch.
    pub switch_tgo_gap: Option<f64>,
    /// Peak |sigma - sigma_d| between reaching the held lead angle and the
    /// stage switch.
    pub stage1_hold_max_sigma_err: Option<f64>,
    /// Post-transient RMS of the filtered line-of-sight angle error, rad.
    pub filtered_angle_rms: Option<f64>,
    /// Initial value of the composite barrier Lyapunov function.
    pub lyapunov_v0: Option<f64>,
    /// Envelope decay rate min(p kappa1, kappa3) and its alternate form
    /// p kappa1; both logged because the guarantee is quoted with either.
    pub envelope_kappa_p: Option<f64>,
    pub envelope_p_kappa1: Option<f64>,
    pub kappa2_degenerate: bool,
    pub command_clamped: bool,
    pub denominator_guard: bool,
}

/// A finished run: summary metrics plus the decimated trajectory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trajectory: Vec<TrajectoryRecord>,
}

/// Step-loop events, exposed so tests can assert the per-step ordering
/// contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEvent {
    SensorSample { t: f64 },
    TimingErrors { t: f64 },
    Command { t: f64 },
    Integrate { t: f64 },
    Log { t: f64 },
}

pub trait StepObserver {
    fn on_event(&mut self, event: StepEvent);
}

/// Default observer; optimizes away.
pub struct NoopObserver;

impl StepObserver for NoopObserver {
    fn on_event(&mut self, _event: StepEvent) {}
}

// Joint state vector layout.
const IR: usize = 0;
const ITH: usize = 1;
const ISIG: usize = 2;
const IX: usize = 3;
const IY: usize = 4;
const IAM: usize = 5;
const IAP1: usize = 6;
const IAP2: usize = 7;

fn chain_state(y: &[f64; 8], config: ActuatorConfig) -> ActuatorChainState {
    ActuatorChainState { a_m: y[IAM], ap1: y[IAP1], ap2: y[IAP2], config }
}

/// Joint derivative for the command-driven laws: saturation model, optional
/// autopilot lag, kinematics driven by the achieved acceleration.
fn chain_rhs(y: &[f64; 8], a_m_c: f64, v_m: f64, act: &ActuatorConfig) -> [f64; 8] {
    let chain = chain_state(y, *act);
    let a_ach = actuator::achieved_acceleration(&chain);
    let d = engagement::raw_rhs(y[IR], y[ITH], y[ISIG], a_ach, v_m);
    let da = actuator::saturation_rhs(y[IAM], a_m_c, act.a_max, act.n, act.rho);
    let (d1, d2) = actuator::autopilot_rhs(&chain, y[IAM]);
    [d.r_dot, d.theta_l_dot, d.sigma_dot, d.x_dot, d.y_dot, da, d1, d2]
}

/// Joint derivative for the direct baselines; the law is evaluated at every
/// integrator stage and the actuator slots stay inert.
fn direct_rhs(y: &[f64; 8], law: LawKind, v_m: f64, n_nav: f64) -> [f64; 8] {
    let a = match law {
        LawKind::Png => guidance::png_command(y[IR], y[ISIG], v_m, n_nav),
        LawKind::DeviatedPursuit => guidance::deviated_pursuit_command(y[IR], y[ISIG], v_m),
        _ => unreachable!("direct_rhs only serves baseline laws"),
    };
    let d = engagement::raw_rhs(y[IR], y[ITH], y[ISIG], a, v_m);
    [d.r_dot, d.theta_l_dot, d.sigma_dot, d.x_dot, d.y_dot, 0.0, 0.0, 0.0]
}

/// Solves `r(t) = r_target` inside `[t1, t2]` from up to three trailing
/// range samples; falls back to the secant when the quadratic term is
/// negligible or ill-posed.
fn interpolate_crossing(
    prev: Option<(f64, f64)>,
    p1: (f64, f64),
    p2: (f64, f64),
    r_target: f64,
) -> f64 {
    let (t1, r1) = p1;
    let (t2, r2) = p2;
    let linear = || t1 + (r1 - r_target) / (r1 - r2) * (t2 - t1);
    let Some((t0, r0)) = prev else {
        return linear();
    };
    let f01 = (r1 - r0) / (t1 - t0);
    let f12 = (r2 - r1) / (t2 - t1);
    let a = (f12 - f01) / (t2 - t0);
    if a.abs() < 1e-12 {
        return linear();
    }
    // Newton form about t0: a u^2 + b u + c = 0 with u = t - t0.
    let b = f01 - a * (t1 - t0);
    let c = r0 - r_target;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return linear();
    }
    let sq = disc.sqrt();
    for u in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
        let t = t0 + u;
        if t >= t1 - 1e-12 && t <= t2 + 1e-12 {
            return t;
        }
    }
    linear()
}

struct FullSample {
    t: f64,
    r: f64,
    sigma: f64,
    a_m: f64,
    rho: f64,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    run_scenario_observed(cfg, &mut NoopObserver)
}

/// As [`run_scenario`], reporting every step-loop event to `observer`.
pub fn run_scenario_observed(
    cfg: &ScenarioConfig,
    observer: &mut dyn StepObserver,
) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let v_m = cfg.v_m;
    let tg = cfg.gains.timing();
    let dt = cfg.dt;
    let direct = cfg.law.is_direct();

    let mut y: [f64; 8] = [cfg.r0, cfg.theta_l0, cfg.sigma0(), 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut ctx = match cfg.law {
        LawKind::MultiStage => GuidanceContext::multi_stage(),
        _ => GuidanceContext::single_stage(),
    };
    let mut pipeline = match &cfg.noise {
        Some(noise) => Some(SensorPipeline::new(*noise, cfg.filter)?),
        None => None,
    };
    let sample_every = pipeline
        .as_ref()
        .map(|p| (p.sample_period() / dt).round().max(1.0) as u64)
        .unwrap_or(1);
    let mut held: Option<FilteredState> = None;

    let analytic_switch_time = if cfg.law == LawKind::MultiStage {
        Some(guidance::switching_time_t1(
            cfg.r0,
            cfg.gains.sigma_d,
            v_m,
            cfg.t_d,
            tg.kappa(),
            cfg.gains.epsilon_t1,
        )?)
    } else {
        None
    };

    let max_steps = (cfg.t_max / dt).ceil() as u64;
    let mut full: Vec<FullSample> = Vec::with_capacity(max_steps as usize + 2);
    let mut records: Vec<TrajectoryRecord> = Vec::new();

    let mut effort = 0.0;
    let mut impact_time: Option<f64> = None;
    let mut overran = false;
    let mut barrier_violated = false;
    let mut fov_violated = false;
    let mut actuator_violated = false;
    let mut switch_tgo_gap: Option<f64> = None;
    let mut stage1_hold_err: Option<f64> = None;
    let mut lyapunov_v0: Option<f64> = None;
    let mut rms_acc = 0.0;
    let mut rms_n = 0u64;

    let mut k: u64 = 0;
    loop {
        let t = k as f64 * dt;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite {
                what: "joint state",
                t,
                detail: format!("{y:?} (scenario '{}')", cfg.label),
            });
        }
        let truth = EngagementState {
            r: y[IR],
            theta_l: y[ITH],
            sigma: y[ISIG],
            x: y[IX],
            y: y[IY],
            t,
        };
        let chain = chain_state(&y, cfg.actuator);
        let a_ach = if direct { 0.0 } else { actuator::achieved_acceleration(&chain) };

        // (1) Sensors, at the sample rate only.
        if let Some(pipeline) = &mut pipeline {
            if k % sample_every == 0 {
                let f = pipeline.sample(&truth);
                if t > 5.0 {
                    let err = f.theta_l - truth.theta_l;
                    rms_acc += err * err;
                    rms_n += 1;
                }
                held = Some(f);
                observer.on_event(StepEvent::SensorSample { t });
            }
        }

        // Guidance-visible state: the zero-order-held filtered proxy in
        // noisy mode, truth otherwise.
        let (g_state, g_rates) = match &held {
            Some(f) => (
                EngagementState {
                    r: f.r,
                    theta_l: f.theta_l,
                    sigma: f.sigma,
                    x: truth.x,
                    y: truth.y,
                    t,
                },
                (f.r_dot, f.theta_l_dot),
            ),
            None => {
                let d = engagement::raw_rhs(truth.r, truth.theta_l, truth.sigma, a_ach, v_m);
                (truth, (d.r_dot, d.theta_l_dot))
            }
        };

        // (2) Timing errors, both as guidance sees them and as truth for the
        // invariant monitors and logs.
        let errors = timing::error_terms(&g_state, cfg.t_d, cfg.gains.sigma_max, v_m, &tg);
        let truth_errors = if held.is_some() {
            timing::error_terms(&truth, cfg.t_d, cfg.gains.sigma_max, v_m, &tg)
        } else {
            errors
        };
        observer.on_event(StepEvent::TimingErrors { t });
        if truth_errors.t_go_d < 0.0 {
            overran = true;
        }

        // (3) Commanded acceleration.
        let was_terminal = ctx.in_terminal_stage();
        let inputs = GuidanceInputs {
            t,
            r: g_state.r,
            sigma: g_state.sigma,
            r_dot: g_rates.0,
            theta_l_dot: g_rates.1,
            sigma_dot: a_ach / v_m - g_rates.1,
            a_achieved: a_ach,
        };
        let (a_m_c, diag) = match cfg.law {
            LawKind::Blf => {
                let (cmd, diag) =
                    guidance::blf_command(&inputs, &errors, &cfg.gains, &cfg.actuator, y[IAM], v_m, &mut ctx);
                (cmd, Some(diag))
            }
            LawKind::MultiStage => {
                let (cmd, diag) = guidance::multi_stage_command(
                    &inputs,
                    &errors,
                    &cfg.gains,
                    &cfg.actuator,
                    y[IAM],
                    v_m,
                    &mut ctx,
                );
                (cmd, Some(diag))
            }
            LawKind::Png => (
                guidance::png_command(g_state.r, g_state.sigma, v_m, cfg.gains.n_nav),
                None,
            ),
            LawKind::DeviatedPursuit => (
                guidance::deviated_pursuit_command(g_state.r, g_state.sigma, v_m),
                None,
            ),
        };
        observer.on_event(StepEvent::Command { t });

        if direct {
            // Mirror the baseline acceleration into the state slot so the
            // logs and the effort metric read one place.
            y[IAM] = a_m_c;
        }

        // Seed the envelope monitor at the first barrier-law evaluation.
        if !direct && ctx.in_terminal_stage() && lyapunov_v0.is_none() {
            if let Some(d) = &diag {
                let v1 = timing::barrier_lyapunov(errors.rho, errors.rho1, errors.rho2, cfg.gains.p);
                lyapunov_v0 = Some(v1 + 0.5 * d.z2_bar * d.z2_bar);
            }
        }
        if !was_terminal && ctx.in_terminal_stage() {
            switch_tgo_gap = Some(errors.rho1.abs());
        }
        if cfg.law == LawKind::MultiStage && !ctx.in_terminal_stage() {
            if ctx.hold_entered_at().is_some() {
                let err = (truth.sigma - cfg.gains.sigma_d).abs();
                stage1_hold_err = Some(stage1_hold_err.map_or(err, |m: f64| m.max(err)));
            }
        }

        // Invariant monitors, latched from truth.
        if truth.sigma.abs() > cfg.gains.sigma_max + MONITOR_TOL {
            fov_violated = true;
        }
        if truth_errors.rho > truth_errors.rho1 + MONITOR_TOL
            || truth_errors.rho < truth_errors.rho2 - MONITOR_TOL
        {
            barrier_violated = true;
        }
        if !direct && y[IAM].abs() >= cfg.actuator.a_max {
            actuator_violated = true;
        }

        full.push(FullSample {
            t,
            r: truth.r,
            sigma: truth.sigma,
            a_m: y[IAM],
            rho: truth_errors.rho,
        });

        let record_due = k % cfg.log_every as u64 == 0;
        let record = if record_due {
            Some(TrajectoryRecord {
                t,
                r: truth.r,
                theta_l: truth.theta_l,
                sigma: truth.sigma,
                x: truth.x,
                y: truth.y,
                a_m_c,
                a_m: y[IAM],
                a_m_achieved: if direct { y[IAM] } else { a_ach },
                rho: truth_errors.rho,
                rho1: truth_errors.rho1,
                rho2: truth_errors.rho2,
                t_go: truth_errors.t_go,
                s_surface: diag.as_ref().map_or(0.0, |d| d.s_surface),
                stage: diag
                    .as_ref()
                    .map_or_else(|| cfg.law.as_str().to_string(), |d| d.active_stage.as_str().to_string()),
            })
        } else {
            None
        };

        // (4) Integrate with the command held over the step.
        let y_next = if direct {
            engagement::rk4_step(t, &y, dt, |_, v| direct_rhs(v, cfg.law, v_m, cfg.gains.n_nav))?
        } else {
            engagement::rk4_step(t, &y, dt, |_, v| chain_rhs(v, a_m_c, v_m, &cfg.actuator))?
        };
        observer.on_event(StepEvent::Integrate { t });

        // (5) Log.
        if let Some(record) = record {
            records.push(record);
            observer.on_event(StepEvent::Log { t });
        }

        let t_next = (k + 1) as f64 * dt;
        let a_m_next = if direct {
            match cfg.law {
                LawKind::Png => guidance::png_command(y_next[IR], y_next[ISIG], v_m, cfg.gains.n_nav),
                _ => guidance::deviated_pursuit_command(y_next[IR], y_next[ISIG], v_m),
            }
        } else {
            y_next[IAM]
        };

        if y_next[IR] <= cfg.r_lethal {
            // Final partial step: the step is retained and the interception
            // instant interpolated about the lethal-radius crossing.
            let prev = (full.len() >= 2).then(|| {
                let s = &full[full.len() - 2];
                (s.t, s.r)
            });
            let t_star = interpolate_crossing(prev, (t, y[IR]), (t_next, y_next[IR]), cfg.r_lethal);
            let h = (t_star - t).clamp(0.0, dt);
            effort += 0.5 * (y[IAM] * y[IAM] + a_m_next * a_m_next) * h;
            impact_time = Some(t_star);

            let truth_next = EngagementState {
                r: y_next[IR],
                theta_l: y_next[ITH],
                sigma: y_next[ISIG],
                x: y_next[IX],
                y: y_next[IY],
                t: t_next,
            };
            let end_errors = timing::error_terms(&truth_next, cfg.t_d, cfg.gains.sigma_max, v_m, &tg);
            full.push(FullSample {
                t: t_next,
                r: y_next[IR],
                sigma: y_next[ISIG],
                a_m: a_m_next,
                rho: end_errors.rho,
            });
            records.push(TrajectoryRecord {
                t: t_next,
                r: truth_next.r,
                theta_l: truth_next.theta_l,
                sigma: truth_next.sigma,
                x: truth_next.x,
                y: truth_next.y,
                a_m_c,
                a_m: a_m_next,
                a_m_achieved: if direct {
                    a_m_next
                } else {
                    actuator::achieved_acceleration(&chain_state(&y_next, cfg.actuator))
                },
                rho: end_errors.rho,
                rho1: end_errors.rho1,
                rho2: end_errors.rho2,
                t_go: end_errors.t_go,
                s_surface: 0.0,
                stage: diag
                    .as_ref()
                    .map_or_else(|| cfg.law.as_str().to_string(), |d| d.active_stage.as_str().to_string()),
            });
            break;
        }

        effort += 0.5 * (y[IAM] * y[IAM] + a_m_next * a_m_next) * dt;
        y = y_next;
        k += 1;
        if t_next >= cfg.t_max {
            break;
        }
    }

    let events = ctx.events();
    let last = full.last().expect("at least one sample");
    let t_end = last.t;
    let (terminal_sigma, terminal_a_m) = (last.sigma, last.a_m);
    let mut final_window_max_abs_sigma = 0.0f64;
    let mut final_window_max_abs_a_m = 0.0f64;
    for s in full.iter().rev().take_while(|s| s.t >= t_end - TERMINAL_WINDOW) {
        final_window_max_abs_sigma = final_window_max_abs_sigma.max(s.sigma.abs());
        final_window_max_abs_a_m = final_window_max_abs_a_m.max(s.a_m.abs());
    }

    let range_samples: Vec<(f64, f64)> = full.iter().map(|s| (s.t, s.r)).collect();
    let miss = engagement::miss_distance(&range_samples);

    // First instant after which |rho| stays inside the convergence band.
    let rho_convergence_time = if impact_time.is_some() {
        match full.iter().rposition(|s| s.rho.abs() > RHO_CONVERGENCE_BAND) {
            None => Some(full[0].t),
            Some(i) if i + 1 < full.len() => Some(full[i + 1].t),
            Some(_) => None,
        }
    } else {
        None
    };

    let metrics = RunMetrics {
        label: cfg.label.clone(),
        impact_time,
        miss_distance: miss,
        control_effort: effort,
        peak_abs_a_m: full.iter().map(|s| s.a_m.abs()).fold(0.0, f64::max),
        peak_abs_sigma: full.iter().map(|s| s.sigma.abs()).fold(0.0, f64::max),
        barrier_violated,
        fov_violated,
        actuator_violated,
        realized_switch_time: if cfg.law == LawKind::MultiStage {
            ctx.realized_switch_time()
        } else {
            None
        },
        terminal_sigma,
        terminal_a_m,
        timed_out: impact_time.is_none(),
        overran_desired_time: overran,
        final_window_max_abs_sigma,
        final_window_max_abs_a_m,
        rho_convergence_time,
        analytic_switch_time,
        switch_tgo_gap,
        stage1_hold_max_sigma_err: stage1_hold_err,
        filtered_angle_rms: (rms_n > 0).then(|| (rms_acc / rms_n as f64).sqrt()),
        lyapunov_v0,
        envelope_kappa_p: lyapunov_v0
            .map(|_| (cfg.gains.p as f64 * cfg.gains.kappa1_bar).min(cfg.gains.kappa3_bar)),
        envelope_p_kappa1: lyapunov_v0.map(|_| cfg.gains.p as f64 * cfg.gains.kappa1_bar),
        kappa2_degenerate: events.kappa2_degenerate,
        command_clamped: events.command_clamped,
        denominator_guard: events.denominator_guard,
    };
    Ok(RunOutput { metrics, trajectory: records })
}

/// Runs scenarios independently, preserving input order; bit-identical to
/// serial execution for any worker count.
pub fn run_batch(
    cfgs: &[ScenarioConfig],
    workers: usize,
) -> Result<Vec<Result<RunOutput, SimError>>, SimError> {
    let mut seen = std::collections::HashSet::new();
    for cfg in cfgs {
        if !seen.insert(cfg.label.as_str()) {
            return Err(SimError::config(format!(
                "duplicate scenario label '{}' in batch",
                cfg.label
            )));
        }
    }
    let workers = workers.max(1).min(cfgs.len().max(1));
    if workers == 1 {
        return Ok(cfgs.iter().map(run_scenario).collect());
    }

    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<RunOutput, SimError>>>> =
        (0..cfgs.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= cfgs.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(run_scenario(&cfgs[i]));
            });
        }
    });
    Ok(results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect())
}

/// Comparison table over finished runs: label, impact time, miss distance,
/// and control effort, as CSV and aligned text. Failed runs render their
/// status in place of an impact time.
pub struct EffortTable {
    pub csv: String,
    pub text: String,
}

pub fn effort_table(rows: &[(&str, Option<&RunMetrics>)]) -> EffortTable {
    let mut csv = String::from("label,impact_time,miss_distance,control_effort,status\n");
    let mut cells: Vec<[String; 5]> = Vec::with_capacity(rows.len());
    for (label, metrics) in rows {
        let row = match metrics {
            Some(m) => {
                let status = if m.timed_out { "timed_out" } else { "ok" };
                [
                    label.to_string(),
                    m.impact_time.map_or_else(|| status.to_string(), |t| format!("{t}")),
                    format!("{}", m.miss_distance),
                    format!("{}", m.control_effort),
                    status.to_string(),
                ]
            }
            None => [
                label.to_string(),
                "failed".into(),
                String::new(),
                String::new(),
                "failed".into(),
            ],
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row[0],
            if row[4] == "ok" { row[1].clone() } else { String::new() },
            row[2],
            row[3],
            row[4]
        ));
        cells.push(row);
    }

    let header = ["label", "impact_time", "miss_distance", "control_effort", "status"];
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len().min(24));
        }
    }
    let fmt_row = |row: &[String]| -> String {
        row.iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut text = fmt_row(&header.map(String::from));
    text.push('\n');
    text.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    text.push('\n');
    for row in &cells {
        let mut pretty = row.clone();
        for cell in pretty.iter_mut().skip(1).take(3) {
            if let Ok(v) = cell.parse::<f64>() {
                *cell = format!("{v:.4}");
            }
        }
        text.push_str(&fmt_row(&pretty));
        text.push('\n');
    }
    EffortTable { csv, text }
}

/// Miss distance computed from decimated trajectory records.
pub fn trajectory_miss_distance(records: &[TrajectoryRecord]) -> f64 {
    let samples: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.r)).collect();
    engagement::miss_distance(&samples)
}
