//! # deckland
//!
//! Autonomous landing of a multirotor on an oscillating deck.
//!
//! The pipeline identifies the periodic modes of the deck motion with an FFT,
//! refines amplitude and phase with a per-axis linear Kalman observer, forecasts
//! pitch and roll over the control horizon, and feeds the forecast to a
//! nonlinear MPC whose sigmoid landing cost keeps the vehicle in a waiting
//! region until a low-tilt touchdown becomes reachable.
//!
//! Modules:
//! - [`pose_stream`]: buffering and fixed-rate resampling of deck pose samples
//! - [`spectral`]: FFT mode identification, amplitude gating, accuracy score
//! - [`observer`]: Kalman mode observer and wave forecast
//! - [`uav_model`]: triple-integrator prediction model with jerk input
//! - [`mpc`]: objective, solver, activation logic and mission automaton
//! - [`sim`]: synthetic sea state, sensors, vehicle plant and touchdown geometry
//! - [`harness`]: scenarios, closed-loop episodes, Monte Carlo batches, prediction study
pub mod error;
pub mod harness;
pub mod mpc;
pub mod observer;
pub mod par;
pub mod pose_stream;
pub mod sim;
pub mod spectral;
pub mod uav_model;

pub use error::{Error, Result};

/// Index of the deck angle about the world x axis in a pose vector.
pub const TILT_X: usize = 3;
/// Index of the deck angle about the world y axis in a pose vector.
pub const TILT_Y: usize = 4;
/// The two tilt axes that drive the landing cost.
pub const TILT_AXES: [usize; 2] = [TILT_X, TILT_Y];

/// Euclidean tilt magnitude of a deck pose.
pub fn tilt_magnitude(pose: &[f64; 6]) -> f64 {
    pose[TILT_X].hypot(pose[TILT_Y])
}
