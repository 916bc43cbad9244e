//! Peak-load management.
//!
//! A 96-period day with a fixed load curve. In every period the agent either
//! leaves an air-conditioning unit on or turns it off, at most three times per
//! day. Turned-off periods are excluded from the daily peak. The episode succeeds
//! (+1 at the last period) when the peak over the remaining periods stays below the
//! threshold `ζ`, otherwise it fails (−1).

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::masking::{optimal_enforcement_mask, Mask, MaskStack};
use crate::mdp::{ActionSpace, Environment, Info, Observation, StepOutcome};

pub const OFF: usize = 0;
pub const ON: usize = 1;

const REFERENCE_CURVE_TEXT: &str = include_str!("../../data/lms_reference_curve.txt");

/// SHA-256 of the shipped reference curve file.
pub const REFERENCE_CURVE_SHA256: &str =
    "199119ce32c0345915276d9e3b450b298f13b3874083aa31427a17fc6567393e";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CurveError {
    #[error("load curve must have {expected} values, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("load curve line {line}: {reason}")]
    BadValue { line: usize, reason: String },
}

/// Parses a load curve: one non-negative real per line, blank lines ignored.
pub fn parse_curve(text: &str, expected_len: usize) -> Result<Vec<f64>, CurveError> {
    let mut values = Vec::with_capacity(expected_len);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| CurveError::BadValue {
            line: i + 1,
            reason: format!("{e}"),
        })?;
        if !v.is_finite() || v < 0.0 {
            return Err(CurveError::BadValue {
                line: i + 1,
                reason: format!("load {v} must be finite and non-negative"),
            });
        }
        values.push(v);
    }
    if values.len() != expected_len {
        return Err(CurveError::WrongLength {
            expected: expected_len,
            found: values.len(),
        });
    }
    Ok(values)
}

/// The shipped 96-period reference curve.
pub fn reference_curve() -> Vec<f64> {
    parse_curve(REFERENCE_CURVE_TEXT, 96).expect("shipped curve is well formed")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmsConfig {
    pub periods: usize,
    pub off_budget: u32,
    pub zeta: f64,
    pub sigma: f64,
    pub curve: Vec<f64>,
}

impl Default for LmsConfig {
    fn default() -> Self {
        Self::with_sigma(0.0)
    }
}

impl LmsConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            periods: 96,
            off_budget: 3,
            zeta: 1.24,
            sigma,
            curve: reference_curve(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.periods == 0 || self.curve.len() != self.periods {
            return Err(format!(
                "curve has {} values but the day has {} periods",
                self.curve.len(),
                self.periods
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.curve.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err("curve values must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Periods whose load reaches the threshold.
    pub fn peak_periods(&self) -> Vec<usize> {
        (0..self.periods).filter(|&t| self.curve[t] >= self.zeta).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmsState {
    pub t: usize,
    pub previous_load: f64,
    pub forecast: f64,
    pub remaining_offs: u32,
    pub off_budget: u32,
    /// Peak over periods that were left on; starts at 0.
    pub peak: f64,
    /// Periods in which an off action took effect.
    pub off_periods: Vec<usize>,
}

impl ActionSpace for LmsState {
    fn action_count(&self) -> usize {
        2
    }
}

impl fmt::Display for LmsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} c_prev={:.3} forecast={:.3} n={} peak={:.3}",
            self.t, self.previous_load, self.forecast, self.remaining_offs, self.peak
        )
    }
}

pub fn encode(state: &LmsState) -> Observation {
    vec![
        state.previous_load,
        state.forecast,
        state.remaining_offs as f64 / state.off_budget.max(1) as f64,
    ]
}

#[derive(Debug, Clone)]
pub struct LmsEnv {
    config: LmsConfig,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    state: LmsState,
    done: bool,
}

impl LmsEnv {
    pub fn new(config: LmsConfig) -> Self {
        config.validate().expect("invalid LMS configuration");
        let noise = (config.sigma > 0.0)
            .then(|| Normal::new(0.0, config.sigma).expect("sigma validated"));
        let state = LmsState {
            t: 0,
            previous_load: config.curve[0],
            forecast: config.curve[0],
            remaining_offs: config.off_budget,
            off_budget: config.off_budget,
            peak: 0.0,
            off_periods: Vec::new(),
        };
        Self {
            config,
            noise,
            rng: ChaCha8Rng::seed_from_u64(0),
            state,
            done: true,
        }
    }

    pub fn config(&self) -> &LmsConfig {
        &self.config
    }

    fn forecast(&mut self, t: usize) -> f64 {
        let actual = self.config.curve[t];
        match &self.noise {
            Some(normal) => (actual + normal.sample(&mut self.rng)).max(0.0),
            None => actual,
        }
    }
}

impl Environment for LmsEnv {
    type State = LmsState;

    fn action_count(&self) -> usize {
        2
    }

    fn observation_dim(&self) -> usize {
        3
    }

    fn horizon_limit(&self) -> Option<usize> {
        Some(self.config.periods)
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let forecast = self.forecast(0);
        self.state = LmsState {
            t: 0,
            previous_load: self.config.curve[0],
            forecast,
            remaining_offs: self.config.off_budget,
            off_budget: self.config.off_budget,
            peak: 0.0,
            off_periods: Vec::new(),
        };
        self.done = false;
        encode(&self.state)
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        assert!(!self.done, "step called on a finished episode");
        assert!(action < 2, "action {action} out of range");
        let t = self.state.t;
        let load = self.config.curve[t];
        let mut info = Info::new();
        if action == OFF && self.state.remaining_offs > 0 {
            self.state.remaining_offs -= 1;
            self.state.off_periods.push(t);
            info.insert("off", 1.0);
        } else {
            if action == OFF {
                info.insert("budget_exhausted", 1.0);
            }
            self.state.peak = self.state.peak.max(load);
        }
        self.state.t = t + 1;
        self.state.previous_load = load;
        let last = t + 1 == self.config.periods;
        let reward = if last {
            let success = self.state.peak < self.config.zeta;
            info.insert("solved", if success { 1.0 } else { 0.0 });
            if success {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        };
        self.state.forecast = if last { 0.0 } else { self.forecast(t + 1) };
        self.done = last;
        StepOutcome {
            observation: encode(&self.state),
            reward,
            done: last,
            info,
        }
    }

    fn state(&self) -> &LmsState {
        &self.state
    }

    fn observe(&self) -> Observation {
        encode(&self.state)
    }

    fn is_done(&self) -> bool {
        self.done
    }
}

/// Forecast-threshold mask: `on` is always allowed, `off` only when the forecast
/// reaches `theta`. `theta = 0` allows everything.
pub fn threshold_mask(theta: f64) -> Mask<LmsState> {
    optimal_enforcement_mask(
        format!("threshold({theta})"),
        move |s: &LmsState| s.forecast < theta,
        |_, a| a == ON,
    )
}

pub fn mask_stack(theta: Option<f64>) -> MaskStack<LmsState> {
    match theta {
        Some(theta) => MaskStack::new(threshold_mask(theta), Mask::all_allow()),
        None => MaskStack::unmasked(),
    }
}

/// The rule "turn off iff the forecast reaches ζ".
pub fn threshold_rule(state: &LmsState, zeta: f64) -> usize {
    if state.forecast >= zeta {
        OFF
    } else {
        ON
    }
}
