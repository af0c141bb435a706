use serde::{Deserialize, Serialize};

use super::wave::WaveSpec;
use crate::uav_model::{UavState, AXIS_X, AXIS_Y, AXIS_Z};
use crate::{tilt_magnitude, TILT_X, TILT_Y};

/// Contact between the vehicle and the deck plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub t: f64,
    /// `sqrt(b4^2 + b5^2)` of the deck at contact.
    pub tilt: f64,
    /// Vehicle vertical speed minus the deck plane's vertical speed.
    pub relative_vz: f64,
    /// Horizontal distance from the pad centre.
    pub lateral_offset: f64,
    pub on_pad: bool,
}

/// Height of the deck plane at `(x, y)`. The plane passes through the pad
/// centre `(b1, b2, b3)` and is rotated by `b4` about x, then `b5` about y.
pub fn deck_height_at(pose: &[f64; 6], x: f64, y: f64) -> f64 {
    let (s4, c4) = pose[TILT_X].sin_cos();
    let (s5, c5) = pose[TILT_Y].sin_cos();
    // normal = Ry(b5) Rx(b4) e_z
    let n = [c4 * s5, -s4, c4 * c5];
    pose[2] - (n[0] * (x - pose[0]) + n[1] * (y - pose[1])) / n[2]
}

/// Reports contact when the vehicle is at or below the deck plane.
pub fn check_touchdown(
    uav: &UavState,
    wave: &WaveSpec,
    t: f64,
    pad_halfwidth: f64,
) -> Option<ContactReport> {
    let pose = wave.pose(t);
    let (x, y, z) = (uav.pos(AXIS_X), uav.pos(AXIS_Y), uav.pos(AXIS_Z));
    let deck = deck_height_at(&pose, x, y);
    if z - deck > 0.0 {
        return None;
    }
    let h = 1e-4;
    let deck_rate = (deck_height_at(&wave.pose(t + h), x, y)
        - deck_height_at(&wave.pose(t - h), x, y))
        / (2.0 * h);
    let dx = x - pose[0];
    let dy = y - pose[1];
    Some(ContactReport {
        t,
        tilt: tilt_magnitude(&pose),
        relative_vz: uav.vel(AXIS_Z) - deck_rate,
        lateral_offset: dx.hypot(dy),
        on_pad: dx.abs() <= pad_halfwidth && dy.abs() <= pad_halfwidth,
    })
}
