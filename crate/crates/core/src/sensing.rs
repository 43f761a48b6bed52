//! Measurement noise and alpha-beta filtering for noisy-mode runs.
//!
//! Angles are corrupted by zero-mean Gaussian noise, range by bounded
//! uniform relative error. Three independent alpha-beta filters track range,
//! line-of-sight angle, and heading angle; the lead angle is reconstructed
//! from the filtered angles and the filters' rate states feed the guidance
//! law directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engagement::EngagementState;
use crate::SimError;

/// Sensor corruption parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation of the angle channels, rad.
    pub angle_sigma: f64,
    /// Half-width of the relative range error, fraction of true range.
    pub range_rel_bound: f64,
    /// Sensor sampling rate, Hz.
    pub sample_rate: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            angle_sigma: 0.015,
            range_rel_bound: 0.01,
            sample_rate: 100.0,
            seed: 1,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.angle_sigma < 0.0 {
            return Err(SimError::config("angle_sigma must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.range_rel_bound) {
            return Err(SimError::config("range_rel_bound must lie in [0, 1)"));
        }
        if !(self.sample_rate > 0.0) {
            return Err(SimError::config("sample_rate must be > 0"));
        }
        Ok(())
    }
}

/// One corrupted sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub r: f64,
    pub theta_l: f64,
    pub gamma_m: f64,
}

/// Corrupts the true state: Gaussian noise on both angles, bounded uniform
/// relative error on range. Three draws per call in a fixed order, so a
/// seeded stream is reproducible regardless of the noise magnitudes.
pub fn corrupt(state: &EngagementState, cfg: &NoiseConfig, rng: &mut impl Rng) -> Measurement {
    let n_theta: f64 = rng.sample(StandardNormal);
    let n_gamma: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.gen_range(-1.0..=1.0);
    Measurement {
        r: state.r * (1.0 + cfg.range_rel_bound * u),
        theta_l: state.theta_l + cfg.angle_sigma * n_theta,
        gamma_m: state.heading() + cfg.angle_sigma * n_gamma,
    }
}

/// One alpha-beta tracking channel: a filtered value and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBetaState {
    pub x_hat: f64,
    pub v_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Sample period, s.
    pub dt_s: f64,
}

impl AlphaBetaState {
    /// Gains must sit inside the stability region `0 < alpha < 1`,
    /// `0 < beta <= 2 - alpha`.
    pub fn new(alpha: f64, beta: f64, dt_s: f64) -> Result<Self, SimError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SimError::config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta <= 2.0 - alpha) {
            return Err(SimError::config(format!(
                "beta must lie in (0, 2 - alpha], got {beta}"
            )));
        }
        if !(dt_s > 0.0) {
            return Err(SimError::config("sample period must be > 0"));
        }
        Ok(AlphaBetaState { x_hat: 0.0, v_hat: 0.0, alpha, beta, dt_s })
    }
}

/// Predict-correct recursion of the alpha-beta filter.
pub fn alpha_beta_update(f: &AlphaBetaState, z: f64) -> AlphaBetaState {
    let x_pred = f.x_hat + f.v_hat * f.dt_s;
    let residual = z - x_pred;
    AlphaBetaState {
        x_hat: x_pred + f.alpha * residual,
        v_hat: f.v_hat + f.beta / f.dt_s * residual,
        ..*f
    }
}

/// Filtered engagement proxy exposed to the guidance law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredState {
    pub r: f64,
    pub theta_l: f64,
    pub gamma_m: f64,
    /// Reconstructed lead angle `gamma_m - theta_l`; the identity holds
    /// exactly by construction.
    pub sigma: f64,
    pub r_dot: f64,
    pub theta_l_dot: f64,
}

/// Per-channel filter gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterGains {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FilterGains {
    fn default() -> Self {
        // Strong smoothing at 100 Hz, well inside the stability region.
        FilterGains { alpha: 0.7, beta: 0.1 }
    }
}

/// Sensor stack for one scenario: corruption stream plus three filters.
/// Filters initialize at the first measurement with zero rate.
#[derive(Debug, Clone)]
pub struct SensorPipeline {
    cfg: NoiseConfig,
    rng: ChaCha12Rng,
    filt_r: AlphaBetaState,
    filt_theta: AlphaBetaState,
    filt_gamma: AlphaBetaState,
    primed: bool,
}

impl SensorPipeline {
    pub fn new(cfg: NoiseConfig, gains: FilterGains) -> Result<Self, SimError> {
        cfg.validate()?;
        let dt_s = 1.0 / cfg.sample_rate;
        let filt = AlphaBetaState::new(gains.alpha, gains.beta, dt_s)?;
        Ok(SensorPipeline {
            cfg,
            rng: ChaCha12Rng::seed_from_u64(cfg.seed),
            filt_r: filt,
            filt_theta: filt,
            filt_gamma: filt,
            primed: false,
        })
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.cfg.sample_rate
    }

    /// Corrupts one frame, updates the three filters, and returns the
    /// filtered proxy. Call at the sensor rate; hold the result between
    /// samples.
    pub fn sample(&mut self, truth: &EngagementState) -> FilteredState {
        let m = corrupt(truth, &self.cfg, &mut self.rng);
        if !self.primed {
            self.filt_r.x_hat = m.r;
            self.filt_theta.x_hat = m.theta_l;
            self.filt_gamma.x_hat = m.gamma_m;
            self.primed = true;
        } else {
            self.filt_r = alpha_beta_update(&self.filt_r, m.r);
            self.filt_theta = alpha_beta_update(&self.filt_theta, m.theta_l);
            self.filt_gamma = alpha_beta_update(&self.filt_gamma, m.gamma_m);
        }
        FilteredState {
            r: self.filt_r.x_hat,
            theta_l: self.filt_theta.x_hat,
            gamma_m: self.filt_gamma.x_hat,
            sigma: self.filt_gamma.x_hat - self.filt_theta.x_hat,
            r_dot: self.filt_r.v_hat,
            theta_l_dot: self.filt_theta.v_hat,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn truth(r: f64, theta_l: f64, sigma: f64) -> EngagementState {
        EngagementState { r, theta_l, sigma, x: 0.0, y: 0.0, t: 0.0 }
    }

    #[test]
    fn zero_noise_passthrough() {
        let cfg = NoiseConfig { angle_sigma: 0.0, range_rel_bound: 0.0, ..Default::default() };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let s = truth(8_000.0, 0.12, 0.9);
        let m = corrupt(&s, &cfg, &mut rng);
        assert_eq!(m.r, 8_000.0);
        assert_eq!(m.theta_l, 0.12);
        assert_eq!(m.gamma_m, s.heading());
    }

    #[test]
    fn angle_noise_moment() {
        // Monte-Carlo oracle: empirical std over 1e5 draws within 0.0005 rad.
        let cfg = NoiseConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let s = truth(10_000.0, 0.0, 0.5);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let m = corrupt(&s, &cfg, &mut rng);
            sum_sq += m.theta_l * m.theta_l;
        }
        let std = (sum_sq / n as f64).sqrt();
        assert_abs_diff_eq!(std, 0.015, epsilon = 0.0005);
    }

    #[test]
    fn range_noise_bounded() {
        let cfg = NoiseConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let s = truth(10_000.0, 0.0, 0.5);
        for _ in 0..10_000 {
            let m = corrupt(&s, &cfg, &mut rng);
            assert!((m.r - s.r).abs() / s.r <= 0.01 + 1e-15);
        }
    }

    #[test]
    fn update_hand_recursion() {
        let f = AlphaBetaState { x_hat: 0.0, v_hat: 0.0, alpha: 0.5, beta: 0.2, dt_s: 0.01 };
        let g = alpha_beta_update(&f, 1.0);
        assert_abs_diff_eq!(g.x_hat, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.v_hat, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn update_zero_residual_drifts_only() {
        let f = AlphaBetaState { x_hat: 2.0, v_hat: 3.0, alpha: 0.5, beta: 0.2, dt_s: 0.01 };
        let g = alpha_beta_update(&f, 2.0 + 3.0 * 0.01);
        assert_abs_diff_eq!(g.x_hat, 2.03, epsilon = 1e-15);
        assert_eq!(g.v_hat, 3.0);
    }

    #[test]
    fn ramp_input_converges_to_true_rate() {
        // Constant-velocity truth with noiseless measurements: the residual
        // dies out and v_hat equals the true rate.
        let mut f = AlphaBetaState::new(0.7, 0.1, 0.01).unwrap();
        f.x_hat = 5.0; // initialized at the first sample
        let rate = -3.2;
        for k in 1..2_000 {
            let z = 5.0 + rate * (k as f64 * 0.01);
            f = alpha_beta_update(&f, z);
        }
        assert_abs_diff_eq!(f.v_hat, rate, epsilon = 1e-9);
        let predicted = f.x_hat + f.v_hat * 0.01;
        assert_abs_diff_eq!(predicted, 5.0 + rate * (2_000.0 * 0.01), epsilon = 1e-9);
    }

    #[test]
    fn stability_region_enforced() {
        assert!(AlphaBetaState::new(0.7, 0.1, 0.01).is_ok());
        assert!(AlphaBetaState::new(0.0, 0.1, 0.01).is_err());
        assert!(AlphaBetaState::new(1.0, 0.1, 0.01).is_err());
        assert!(AlphaBetaState::new(0.5, 1.6, 0.01).is_err());
        assert!(AlphaBetaState::new(0.5, 0.0, 0.01).is_err());
    }

    #[test]
    fn pipeline_noiseless_converges_and_sigma_identity() {
        let cfg = NoiseConfig {
            angle_sigma: 0.0,
            range_rel_bound: 0.0,
            sample_rate: 100.0,
            seed: 5,
        };
        let mut p = SensorPipeline::new(cfg, FilterGains::default()).unwrap();
        let mut out = None;
        for k in 0..1_000 {
            let t = k as f64 * 0.01;
            let s = truth(10_000.0 - 200.0 * t, 0.1, 0.7);
            let f = p.sample(&s);
            assert_eq!(f.sigma, f.gamma_m - f.theta_l);
            out = Some((f, s));
        }
        let (f, s) = out.unwrap();
        assert_abs_diff_eq!(f.r, s.r, epsilon = 1e-6);
        assert_abs_diff_eq!(f.r_dot, -200.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.sigma, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let cfg = NoiseConfig::default();
        let mk = || SensorPipeline::new(cfg, FilterGains::default()).unwrap();
        let (mut a, mut b) = (mk(), mk());
        for k in 0..100 {
            let s = truth(10_000.0 - k as f64, 0.01 * k as f64, 0.5);
            assert_eq!(a.sample(&s), b.sample(&s));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn filter_bounded_input_bounded_state(
            alpha in 0.05f64..0.95,
            beta_frac in 0.05f64..1.0,
            seed in 0u64..1_000,
        ) {
            let beta = beta_frac * (2.0 - alpha);
            let mut f = AlphaBetaState::new(alpha, beta, 0.01).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            for _ in 0..5_000 {
                let z: f64 = rng.gen_range(-1.0..=1.0);
                f = alpha_beta_update(&f, z);
                prop_assert!(f.x_hat.abs() < 1e3 && f.v_hat.abs() < 1e5);
            }
        }
    }
}
