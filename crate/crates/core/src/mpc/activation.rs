//! Conditions for enabling the landing cost.

use serde::{Deserialize, Serialize};

use crate::spectral::DEFAULT_ACCURACY_THRESHOLD;
use crate::uav_model::{UavState, AXIS_X, AXIS_Y};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationThresholds {
    /// Minimum identification accuracy (inclusive).
    pub accuracy: f64,
    /// Maximum horizontal position error in meters (inclusive).
    pub position: f64,
    /// Maximum horizontal speed in m/s (inclusive).
    pub velocity: f64,
}

impl Default for ActivationThresholds {
    fn default() -> Self {
        Self {
            accuracy: DEFAULT_ACCURACY_THRESHOLD,
            position: 0.1,
            velocity: 0.1,
        }
    }
}

/// True when the identification is accurate enough and the vehicle hovers
/// still above the pad centre `(pad_x, pad_y)`.
pub fn activation_check(
    pad_xy: [f64; 2],
    uav: &UavState,
    fft_accuracy: f64,
    thresholds: &ActivationThresholds,
) -> bool {
    fft_accuracy >= thresholds.accuracy
        && (uav.pos(AXIS_X) - pad_xy[0]).abs() <= thresholds.position
        && (uav.pos(AXIS_Y) - pad_xy[1]).abs() <= thresholds.position
        && uav.vel(AXIS_X).abs() <= thresholds.velocity
        && uav.vel(AXIS_Y).abs() <= thresholds.velocity
}
