use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{tilt_magnitude, Error, Result, TILT_AXES};

/// Largest allowed sum of amplitudes on each tilt axis, in radians.
pub const MAX_TILT_AMPLITUDE_SUM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    #[serde(rename = "f")]
    pub freq: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "phi", default)]
    pub phase: f64,
}

impl WaveComponent {
    pub fn new(freq: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            freq,
            amplitude,
            phase,
        }
    }
}

/// Deck motion: per axis an offset plus a sum of sinusoids in absolute time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WaveSpec {
    pub axes: [Vec<WaveComponent>; 6],
    #[serde(default)]
    pub offsets: [f64; 6],
    /// Redraw every phase uniformly from this seed, see [`WaveSpec::randomized`].
    #[serde(default)]
    pub seed: Option<u64>,
}

impl WaveSpec {
    pub fn flat(offsets: [f64; 6]) -> Self {
        Self {
            offsets,
            ..Self::default()
        }
    }

    pub fn with_axis(mut self, axis: usize, components: Vec<WaveComponent>) -> Self {
        self.axes[axis] = components;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (j, comps) in self.axes.iter().enumerate() {
            for c in comps {
                if !(c.freq > 0.0) || !(c.amplitude >= 0.0) || !c.phase.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "wave component on axis {j}: {c:?}"
                    )));
                }
            }
        }
        for j in TILT_AXES {
            let sum: f64 = self.axes[j].iter().map(|c| c.amplitude).sum();
            if sum > MAX_TILT_AMPLITUDE_SUM + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "tilt amplitudes on axis {j} sum to {sum} > {MAX_TILT_AMPLITUDE_SUM}"
                )));
            }
        }
        if self.offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite offset".into()));
        }
        Ok(())
    }

    /// Copy with every phase drawn uniformly from `(-pi, pi]`.
    pub fn randomized<R: Rng>(&self, rng: &mut R) -> Self {
        let mut out = self.clone();
        for comps in out.axes.iter_mut() {
            for c in comps.iter_mut() {
                c.phase = rng.gen_range(-PI..PI);
            }
        }
        out
    }

    /// The same sea observed `dt` seconds later: `shifted(dt).pose(t) ==
    /// pose(t + dt)` up to rounding.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut out = self.clone();
        for comps in out.axes.iter_mut() {
            for c in comps.iter_mut() {
                let turns = (c.freq * dt).fract();
                c.phase = crate::spectral::wrap_phase(c.phase + 2.0 * PI * turns);
            }
        }
        out
    }

    /// Pose at time `t`.
    pub fn pose(&self, t: f64) -> [f64; 6] {
        let mut b = self.offsets;
        for (j, comps) in self.axes.iter().enumerate() {
            for c in comps {
                b[j] += c.amplitude * (2.0 * PI * c.freq * t + c.phase).sin();
            }
        }
        b
    }

    /// Time derivative of the pose at `t`.
    pub fn pose_rate(&self, t: f64) -> [f64; 6] {
        let mut d = [0.0; 6];
        for (j, comps) in self.axes.iter().enumerate() {
            for c in comps {
                let w = 2.0 * PI * c.freq;
                d[j] += c.amplitude * w * (w * t + c.phase).cos();
            }
        }
        d
    }

    pub fn tilt(&self, t: f64) -> f64 {
        tilt_magnitude(&self.pose(t))
    }

    pub fn max_tilt_amplitude(&self) -> f64 {
        TILT_AXES
            .iter()
            .map(|&j| self.axes[j].iter().map(|c| c.amplitude).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_sea_is_offsets() {
        let w = WaveSpec::flat([1.0, 2.0, 3.0, 0.0, 0.0, 0.5]);
        assert_eq!(w.pose(12.3), [1.0, 2.0, 3.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_mode_quarter_period() {
        let w = WaveSpec::default().with_axis(4, vec![WaveComponent::new(0.2, 0.3, 0.0)]);
        assert!((w.pose(1.25)[4] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn amplitude_envelope_enforced() {
        let w = WaveSpec::default().with_axis(
            3,
            vec![WaveComponent::new(0.2, 0.3, 0.0), WaveComponent::new(0.3, 0.25, 0.0)],
        );
        assert!(w.validate().is_err());
        let w = WaveSpec::default().with_axis(3, vec![WaveComponent::new(0.0, 0.1, 0.0)]);
        assert!(w.validate().is_err());
    }

    #[test]
    fn rate_matches_finite_difference() {
        let w = WaveSpec::default()
            .with_axis(3, vec![WaveComponent::new(0.17, 0.2, 0.4), WaveComponent::new(0.4, 0.05, 1.0)]);
        let h = 1e-6;
        let fd = (w.pose(3.0 + h)[3] - w.pose(3.0 - h)[3]) / (2.0 * h);
        assert!((fd - w.pose_rate(3.0)[3]).abs() < 1e-8);
    }
}
