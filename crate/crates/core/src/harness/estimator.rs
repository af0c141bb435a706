//! Streaming deck estimator: buffers the sensed poses, identifies the tilt
//! modes periodically and keeps one mode observer per tilt axis running on
//! the sample grid.

use crate::mpc::PadEstimate;
use crate::observer::{ModeObserver, ObserverConfig};
use crate::pose_stream::{PoseBuffer, PoseSample, SampleWindow, WindowStatus};
use crate::sim::SensorSpec;
use crate::spectral::{default_match_tolerance, identify, pooled_accuracy, ModeSet};
use crate::{Result, TILT_AXES};

use super::scenario::EstimatorConfig;

/// Floor on the measurement variance so noiseless streams stay well posed.
const MIN_R: f64 = 1e-10;
/// A window whose tilt spread stays within this many noise standard
/// deviations shows a still deck: there is nothing to identify, and the
/// accuracy reports 1.
const STILL_NOISE_FACTOR: f64 = 2.0;

/// RMS deviation from the mean over both tilt axes of a window.
fn tilt_spread(window: &SampleWindow) -> f64 {
    let n = window.len() as f64;
    let ss: f64 = TILT_AXES
        .iter()
        .map(|&axis| {
            let series = window.axis(axis);
            let mean = series.iter().sum::<f64>() / n;
            series.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum();
    (ss / (2.0 * n)).sqrt()
}

#[derive(Debug, Clone)]
pub struct DeckEstimator {
    cfg: EstimatorConfig,
    rate: f64,
    observer_cfg: ObserverConfig,
    buffer: PoseBuffer,
    observers: [Option<ModeObserver>; 2],
    accuracy: Option<f64>,
    last_ident: Option<f64>,
    identifications: usize,
    failures: usize,
}

impl DeckEstimator {
    /// Estimator for a stream with the given sensor characteristics. The
    /// observer runs at the sensor's nominal rate.
    pub fn new(cfg: &EstimatorConfig, sensor: &SensorSpec) -> Self {
        let r = cfg.r.unwrap_or((sensor.noise_ang * sensor.noise_ang).max(MIN_R));
        let mut observer_cfg = ObserverConfig::new(sensor.period()).with_noise(cfg.lambda, r);
        observer_cfg.p0_scale = cfg.p0_scale;
        Self {
            cfg: cfg.clone(),
            rate: sensor.rate,
            observer_cfg,
            buffer: PoseBuffer::new(cfg.retention),
            observers: [None, None],
            accuracy: None,
            last_ident: None,
            identifications: 0,
            failures: 0,
        }
    }

    pub fn buffer(&self) -> &PoseBuffer {
        &self.buffer
    }

    /// Latest pooled identification score over both tilt axes.
    pub fn accuracy(&self) -> Option<f64> {
        self.accuracy
    }

    pub fn identifications(&self) -> usize {
        self.identifications
    }

    /// Observer resets caused by numerical failures.
    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn observer(&self, i: usize) -> Option<&ModeObserver> {
        self.observers.get(i).and_then(|o| o.as_ref())
    }

    pub fn ready(&self) -> bool {
        self.observers.iter().all(|o| o.is_some())
    }

    /// Stores a sample and advances the observers over the grid points it
    /// completes. Out-of-order samples are rejected with an error.
    pub fn push(&mut self, sample: PoseSample) -> Result<()> {
        self.buffer.push(sample)?;
        self.advance();
        Ok(())
    }

    fn advance(&mut self) {
        let Some(newest) = self.buffer.last().map(|s| s.t) else {
            return;
        };
        let dt = self.observer_cfg.dt;
        for (i, slot) in self.observers.iter_mut().enumerate() {
            let Some(obs) = slot else { continue };
            let axis = TILT_AXES[i];
            while obs.t_last + dt <= newest + 1e-9 {
                let step = match self.buffer.value_at(obs.t_last + dt) {
                    Some(b) => obs.step(b[axis]),
                    None => {
                        obs.predict_only();
                        Ok(())
                    }
                };
                if step.is_err() {
                    *slot = None;
                    self.failures += 1;
                    break;
                }
            }
        }
    }

    /// Runs an identification when one is due at time `t`. Returns whether
    /// an identification took place.
    pub fn update(&mut self, t: f64) -> Result<bool> {
        if self
            .last_ident
            .is_some_and(|last| t - last < self.cfg.reidentify_period)
        {
            return Ok(false);
        }
        let window = match self.buffer.resample(self.cfg.window_span, self.rate)? {
            WindowStatus::Ready(w) => w,
            WindowStatus::NotReady(_) => return Ok(false),
        };
        let sets = TILT_AXES
            .iter()
            .map(|&axis| identify(&window, axis, self.cfg.gate))
            .collect::<Result<Vec<ModeSet>>>()?;
        let still = tilt_spread(&window) <= STILL_NOISE_FACTOR * self.observer_cfg.r.sqrt();
        self.accuracy = Some(if still { 1.0 } else { pooled_accuracy(&window, &sets)?.score });
        let tol = default_match_tolerance(self.cfg.window_span);
        for (i, set) in sets.iter().enumerate() {
            let axis = TILT_AXES[i];
            let slot = &mut self.observers[i];
            if let Some(obs) = slot.as_mut() {
                if obs.reidentify(set, tol).is_ok() {
                    continue;
                }
            }
            // fresh observer, replayed over the window it was identified on
            let mut obs = ModeObserver::init(set, self.observer_cfg)?;
            let mut ok = true;
            for k in 1..window.len() {
                if obs.step(window.values[k][axis]).is_err() {
                    ok = false;
                    break;
                }
            }
            if ok {
                *slot = Some(obs);
            } else {
                *slot = None;
                self.failures += 1;
            }
        }
        self.advance();
        self.last_ident = Some(t);
        self.identifications += 1;
        Ok(true)
    }

    /// Filtered tilt `(b4, b5)` at the observers' last grid point.
    pub fn filtered_tilt(&self) -> Option<[f64; 2]> {
        match &self.observers {
            [Some(a), Some(b)] => Some([a.output(), b.output()]),
            _ => None,
        }
    }

    /// Forecast tilt at time `t` (at or after the last grid point).
    pub fn predict_tilt(&self, t: f64) -> Option<[f64; 2]> {
        match &self.observers {
            [Some(a), Some(b)] => Some([a.predict(t).ok()?, b.predict(t).ok()?]),
            _ => None,
        }
    }

    /// Tilt forecast at each of `times`.
    pub fn tilt_forecast(&self, times: impl IntoIterator<Item = f64>) -> Option<Vec<[f64; 2]>> {
        let [Some(a), Some(b)] = &self.observers else {
            return None;
        };
        let fa = a.forecast();
        let fb = b.forecast();
        let t_min = fa.t_obs.max(fb.t_obs) - 1e-9;
        times
            .into_iter()
            .map(|t| (t >= t_min).then(|| [fa.evaluate(t), fb.evaluate(t)]))
            .collect()
    }

    /// Pad centre and deck height averaged over the most recent samples.
    pub fn pad_estimate(&self) -> Option<PadEstimate> {
        let newest = self.buffer.last()?.t;
        let mean = self.buffer.mean_since(newest - self.cfg.pad_average)?;
        Some(PadEstimate {
            x: mean[0],
            y: mean[1],
            deck_height: mean[2],
        })
    }

    /// Clears all observer state after a fatal inconsistency.
    pub fn reset_observers(&mut self) {
        self.observers = [None, None];
        self.last_ident = None;
    }
}
