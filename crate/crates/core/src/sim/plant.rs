use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::uav_model::UavState;
use crate::{Error, Result};

/// First-order velocity-tracking vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantSpec {
    /// Velocity tracking time constant in seconds.
    pub time_constant: f64,
    /// Steady wind drift added to the tracked horizontal/vertical velocity.
    pub wind: [f64; 3],
    /// Standard deviation of a per-step gust added to the wind, m/s.
    pub gust: f64,
    /// Velocity references are clipped to this magnitude per axis.
    pub max_speed: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            time_constant: 0.25,
            wind: [0.0; 3],
            gust: 0.0,
            max_speed: 6.0,
        }
    }
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_constant > 0.0) || !(self.max_speed > 0.0) || !(self.gust >= 0.0) {
            return Err(Error::InvalidArgument(format!("plant spec {self:?}")));
        }
        if self.wind.iter().any(|w| w.abs() > 1.0) {
            return Err(Error::InvalidArgument("wind bias above 1 m/s".into()));
        }
        Ok(())
    }
}

/// Advances the vehicle by `dt`. Each axis relaxes its velocity towards
/// `vref` (plus wind on x, y, z) with the spec time constant; positions are
/// integrated exactly and the acceleration slot holds the resulting
/// end-of-step derivative.
pub fn plant_step<R: Rng>(
    spec: &PlantSpec,
    uav: &UavState,
    vref: [f64; 4],
    dt: f64,
    rng: &mut R,
) -> UavState {
    let gusts = if spec.gust > 0.0 {
        let n = Normal::new(0.0, spec.gust).expect("positive gust");
        [n.sample(rng), n.sample(rng), n.sample(rng)]
    } else {
        [0.0; 3]
    };
    let tau = spec.time_constant;
    let decay = (-dt / tau).exp();
    let mut out = *uav;
    for a in 0..4 {
        let mut target = vref[a].clamp(-spec.max_speed, spec.max_speed);
        if a < 3 {
            target += spec.wind[a] + gusts[a];
        }
        let v0 = uav.vel(a);
        let v1 = target + (v0 - target) * decay;
        let p1 = uav.pos(a) + target * dt + (v0 - target) * tau * (1.0 - decay);
        out.set(a, p1, v1, (target - v1) / tau);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn holding_velocity_without_wind() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = UavState::zeros();
        s.set(0, 1.0, 0.5, 0.0);
        let next = plant_step(&PlantSpec::default(), &s, [0.5, 0.0, 0.0, 0.0], 0.01, &mut rng);
        assert!((next.vel(0) - 0.5).abs() < 1e-15);
        assert!((next.pos(0) - 1.005).abs() < 1e-15);
    }

    #[test]
    fn tiny_time_constant_tracks_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = PlantSpec {
            time_constant: 1e-9,
            ..PlantSpec::default()
        };
        let next = plant_step(&spec, &UavState::zeros(), [1.0, -2.0, 0.5, 0.1], 0.01, &mut rng);
        assert_eq!(next.velocities(), [1.0, -2.0, 0.5, 0.1]);
    }

    #[test]
    fn wind_shifts_steady_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = PlantSpec {
            wind: [0.5, 0.0, 0.0],
            ..PlantSpec::default()
        };
        let mut s = UavState::zeros();
        for _ in 0..1000 {
            s = plant_step(&spec, &s, [0.0; 4], 0.01, &mut rng);
        }
        assert!((s.vel(0) - 0.5).abs() < 1e-9);
        assert!(PlantSpec { wind: [2.0, 0.0, 0.0], ..spec }.validate().is_err());
    }
}
