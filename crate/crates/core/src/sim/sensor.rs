use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::wave::WaveSpec;
use crate::pose_stream::PoseSample;
use crate::{Error, Result};

/// Noisy, jittery pose sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Nominal output rate in Hz.
    pub rate: f64,
    /// Half-width of the uniform timing jitter as a fraction of the period.
    pub jitter: f64,
    /// Position noise standard deviation in meters.
    pub noise_pos: f64,
    /// Angle noise standard deviation in radians.
    pub noise_ang: f64,
    /// Probability that a frame is lost.
    pub dropout: f64,
}

impl SensorSpec {
    /// Camera-based tag detection.
    pub fn vision() -> Self {
        Self {
            rate: 30.0,
            jitter: 0.2,
            noise_pos: 0.02,
            noise_ang: 0.01,
            dropout: 0.02,
        }
    }

    /// Deck-mounted inertial unit.
    pub fn imu() -> Self {
        Self {
            rate: 100.0,
            jitter: 0.0,
            noise_pos: 0.005,
            noise_ang: 0.002,
            dropout: 0.0,
        }
    }

    pub fn noiseless(rate: f64) -> Self {
        Self {
            rate,
            jitter: 0.0,
            noise_pos: 0.0,
            noise_ang: 0.0,
            dropout: 0.0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0)
            || !(0.0..0.5).contains(&self.jitter)
            || !(self.noise_pos >= 0.0)
            || !(self.noise_ang >= 0.0)
            || !(0.0..=1.0).contains(&self.dropout)
        {
            return Err(Error::InvalidArgument(format!("sensor spec {self:?}")));
        }
        Ok(())
    }
}

/// One sensor frame requested at `t_req`. The random draws happen in a fixed
/// order (dropout, jitter, six noise values) regardless of the outcome.
pub fn sample_sensor<R: Rng>(
    spec: &SensorSpec,
    wave: &WaveSpec,
    t_req: f64,
    rng: &mut R,
) -> Option<PoseSample> {
    let lost = rng.gen::<f64>() < spec.dropout;
    let jitter = (2.0 * rng.gen::<f64>() - 1.0) * spec.jitter * spec.period();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut noise = [0.0; 6];
    for (j, n) in noise.iter_mut().enumerate() {
        let sd = if j < 3 { spec.noise_pos } else { spec.noise_ang };
        *n = sd * std_normal.sample(rng);
    }
    if lost {
        return None;
    }
    let t = t_req + jitter;
    let mut b = wave.pose(t);
    for (v, n) in b.iter_mut().zip(noise) {
        *v += n;
    }
    Some(PoseSample::new(t, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::wave::WaveComponent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wave() -> WaveSpec {
        WaveSpec::flat([0.5, 0.0, 1.0, 0.0, 0.0, 0.0])
            .with_axis(4, vec![WaveComponent::new(0.2, 0.3, 0.1)])
    }

    #[test]
    fn noiseless_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_sensor(&SensorSpec::noiseless(30.0), &wave(), 2.0, &mut rng).unwrap();
        assert_eq!(s.t, 2.0);
        assert_eq!(s.b, wave().pose(2.0));
    }

    #[test]
    fn full_dropout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = SensorSpec {
            dropout: 1.0,
            ..SensorSpec::vision()
        };
        assert!((0..100).all(|k| sample_sensor(&spec, &wave(), k as f64, &mut rng).is_none()));
    }

    #[test]
    fn jitter_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = SensorSpec::vision();
        for k in 0..1000 {
            let t = k as f64 / 30.0;
            if let Some(s) = sample_sensor(&spec, &wave(), t, &mut rng) {
                assert!((s.t - t).abs() <= 0.2 / 30.0 + 1e-15);
            }
        }
        assert!(SensorSpec { jitter: 0.5, ..spec }.validate().is_err());
    }
}
