//! Landing MPC: quadratic tracking cost plus the sigmoid landing barrier,
//! a projected-gradient solver, the landing activation test and the
//! mission automaton.

pub mod activation;
pub mod automaton;
pub mod barrier;
pub mod objective;
pub mod solver;

use serde::{Deserialize, Serialize};

use crate::uav_model::{JerkInput, UavState, AXIS_Z, DEFAULT_DT_PRED, DEFAULT_JERK_LIMIT};
use crate::{Error, Result};

pub use activation::{activation_check, ActivationThresholds};
pub use automaton::{Mission, MissionCommand, MissionPhase, Observations, PadEstimate, Trigger};
pub use barrier::{landing_cost, sigmoid_gate, sigmoid_gate_with_slope};
pub use objective::{objective, Evaluation, Objective};
pub use solver::{solve, LandingMpc, MpcSolution};

/// Weights, horizons and solver budget of the landing MPC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    /// Prediction horizon in steps.
    pub mp: usize,
    /// Control horizon in steps.
    pub mc: usize,
    pub dt_pred: f64,
    /// Diagonal of the state penalty, state ordering as [`UavState`].
    pub state_weights: [f64; 12],
    /// Diagonal of the input-rate penalty.
    pub rate_weights: [f64; 4],
    /// Weight of the landing cost.
    pub alpha_l: f64,
    /// Centre of the waiting region above the deck.
    pub h_d: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Weight of the quadratic hinge on velocity/acceleration bounds.
    pub soft_weight: f64,
    /// Symmetric jerk bounds.
    pub jerk_limit: [f64; 4],
    pub max_iterations: usize,
    /// Optional wall-clock budget per solve. Leave unset for reproducible runs.
    pub time_budget_ms: Option<f64>,
    /// Stop when the projected-gradient step falls below this (inf-norm).
    pub tolerance: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        // lighter vertical block so the landing cost can hold the vehicle
        // in the waiting region
        let mut state_weights = [0.0; 12];
        for a in 0..4 {
            let block = if a == AXIS_Z { [10.0, 1.0, 0.1] } else { [100.0, 10.0, 1.0] };
            state_weights[3 * a..3 * a + 3].copy_from_slice(&block);
        }
        Self {
            mp: 100,
            mc: 40,
            dt_pred: DEFAULT_DT_PRED,
            state_weights,
            rate_weights: [0.1; 4],
            alpha_l: 1200.0,
            h_d: 1.1,
            v_max: 4.0,
            a_max: 3.0,
            soft_weight: 1e4,
            jerk_limit: DEFAULT_JERK_LIMIT,
            max_iterations: 60,
            time_budget_ms: None,
            tolerance: 1e-6,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("mpc config: {msg}")));
        if self.mc < 1 || self.mp < self.mc {
            return bad("need mp >= mc >= 1");
        }
        if !(self.dt_pred > 0.0) {
            return bad("dt_pred must be positive");
        }
        if self
            .state_weights
            .iter()
            .chain(self.rate_weights.iter())
            .any(|w| !(*w >= 0.0))
        {
            return bad("penalties must be non-negative");
        }
        if !(self.alpha_l > 0.0) {
            return bad("alpha_l must be positive");
        }
        if !(self.h_d > 0.16) {
            return bad("h_d must exceed 0.16");
        }
        if !(self.v_max > 0.0 && self.a_max > 0.0 && self.soft_weight >= 0.0) {
            return bad("soft bounds must be positive");
        }
        if self.jerk_limit.iter().any(|l| !(*l > 0.0)) {
            return bad("jerk limits must be positive");
        }
        if self.max_iterations == 0 || self.time_budget_ms.is_some_and(|b| !(b > 0.0)) {
            return bad("solver budget must be positive");
        }
        Ok(())
    }
}

/// Desired state over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Setpoint(UavState),
    /// One desired state per horizon step `1..=mp`.
    Trajectory(Vec<UavState>),
}

impl Reference {
    /// Desired state at horizon step `m` (1-based).
    pub fn at(&self, m: usize) -> &UavState {
        match self {
            Reference::Setpoint(s) => s,
            Reference::Trajectory(v) => &v[(m - 1).min(v.len() - 1)],
        }
    }
}

/// Everything the objective needs besides the decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LandingContext {
    pub reference: Reference,
    /// Forecast `(b4, b5)` at horizon steps `1..=mp`.
    pub tilt_forecast: Vec<[f64; 2]>,
    /// Landing cost enabled.
    pub landing_active: bool,
    /// Deck height at the pad centre that the landing cost measures the
    /// clearance from. Defaults to the reference altitude when unset.
    pub deck_height: Option<f64>,
    /// Input applied before the horizon starts.
    pub prev_input: JerkInput,
}

impl LandingContext {
    pub fn hover(setpoint: UavState) -> Self {
        Self {
            reference: Reference::Setpoint(setpoint),
            tilt_forecast: Vec::new(),
            landing_active: false,
            deck_height: None,
            prev_input: JerkInput::zeros(),
        }
    }

    pub fn landing(setpoint: UavState, tilt_forecast: Vec<[f64; 2]>) -> Self {
        Self {
            reference: Reference::Setpoint(setpoint),
            tilt_forecast,
            landing_active: true,
            deck_height: None,
            prev_input: JerkInput::zeros(),
        }
    }

    pub fn with_deck_height(mut self, deck_height: f64) -> Self {
        self.deck_height = Some(deck_height);
        self
    }

    pub(crate) fn validate(&self, cfg: &MpcConfig) -> Result<()> {
        if (self.landing_active || !self.tilt_forecast.is_empty())
            && self.tilt_forecast.len() != cfg.mp
        {
            return Err(Error::LengthMismatch {
                expected: cfg.mp,
                got: self.tilt_forecast.len(),
            });
        }
        if let Reference::Trajectory(v) = &self.reference {
            if v.len() != cfg.mp {
                return Err(Error::LengthMismatch {
                    expected: cfg.mp,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}
