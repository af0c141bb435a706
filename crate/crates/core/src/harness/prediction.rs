//! Forecast accuracy of the estimator against the true deck tilt.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pose_stream::PoseSample;
use crate::sim::sample_sensor;
use crate::{Error, Result, TILT_X, TILT_Y};

use super::episode::episode_wave;
use super::estimator::DeckEstimator;
use super::scenario::{Scenario, Sensing};

/// Longest forecast horizon accepted, seconds.
pub const MAX_HORIZON: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub sensing: Sensing,
    /// Forecast horizons, seconds.
    pub horizons: Vec<f64>,
    pub seed: u64,
    /// Errors are collected from this time on, seconds.
    pub warmup: f64,
    pub duration: f64,
    /// Spacing of the forecast instants, seconds.
    pub tick: f64,
}

impl StudyConfig {
    pub fn new(sensing: Sensing, horizons: Vec<f64>, seed: u64) -> Self {
        Self {
            sensing,
            horizons,
            seed,
            warmup: 30.0,
            duration: 90.0,
            tick: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub horizon: f64,
    /// RMS error over both tilt axes, radians.
    pub rmse: f64,
    pub samples: usize,
}

/// Runs the estimator on the scenario's wave (the pad always in view) and
/// compares, at every tick after the warm-up, the forecast made from the
/// latest filtered state with the true tilt `h` seconds later.
pub fn prediction_study(sc: &Scenario, cfg: &StudyConfig) -> Result<Vec<PredictionPoint>> {
    sc.validate()?;
    let sensor = match cfg.sensing {
        Sensing::Vision => sc.vision,
        Sensing::Imu => sc.imu,
        Sensing::Oracle => {
            return Err(Error::InvalidArgument(
                "prediction study needs a sensed stream (vision or imu)".into(),
            ))
        }
    };
    if cfg.horizons.is_empty()
        || cfg
            .horizons
            .iter()
            .any(|h| !(0.0..=MAX_HORIZON).contains(h))
    {
        return Err(Error::InvalidArgument(format!(
            "horizons must lie in [0, {MAX_HORIZON}] s: {:?}",
            cfg.horizons
        )));
    }
    if !(cfg.tick > 0.0) || !(cfg.duration > cfg.warmup) || !(cfg.warmup >= 0.0) {
        return Err(Error::InvalidArgument(format!("study timing: {cfg:?}")));
    }

    let wave = episode_wave(sc, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut est = DeckEstimator::new(&sc.estimator, &sensor);
    let mut sq = vec![0.0; cfg.horizons.len()];
    let mut count = vec![0usize; cfg.horizons.len()];
    let mut pending: Vec<PoseSample> = Vec::new();
    let mut next_request = 0.0;

    let n_ticks = (cfg.duration / cfg.tick).floor() as usize;
    for i in 0..=n_ticks {
        let t = i as f64 * cfg.tick;
        while next_request <= t + 1e-12 {
            if let Some(s) = sample_sensor(&sensor, &wave, next_request, &mut rng) {
                pending.push(s);
            }
            next_request += sensor.period();
        }
        pending.sort_by(|a, b| a.t.total_cmp(&b.t));
        let ready = pending.partition_point(|s| s.t <= t);
        for s in pending.drain(..ready) {
            let _ = est.push(s);
        }
        est.update(t)?;

        if t < cfg.warmup {
            continue;
        }
        let Some(t_obs) = est.observer(0).map(|o| o.t_last) else {
            continue;
        };
        for (k, h) in cfg.horizons.iter().enumerate() {
            let Some(pred) = est.predict_tilt(t_obs + h) else {
                continue;
            };
            let truth = wave.pose(t_obs + h);
            sq[k] += (pred[0] - truth[TILT_X]).powi(2) + (pred[1] - truth[TILT_Y]).powi(2);
            count[k] += 2;
        }
    }

    Ok(cfg
        .horizons
        .iter()
        .enumerate()
        .map(|(k, &horizon)| PredictionPoint {
            horizon,
            rmse: if count[k] > 0 { (sq[k] / count[k] as f64).sqrt() } else { f64::NAN },
            samples: count[k],
        })
        .collect())
}

/// Sensor frames of an episode's wave over `[0, duration]`, in time order.
pub fn sensed_stream(
    sc: &Scenario,
    sensing: Sensing,
    seed: u64,
    duration: f64,
) -> Result<Vec<PoseSample>> {
    let sensor = match sensing {
        Sensing::Imu => sc.imu,
        _ => sc.vision,
    };
    sensor.validate()?;
    let wave = episode_wave(sc, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration * sensor.rate).floor() as usize;
    let mut out: Vec<PoseSample> = (0..=n)
        .filter_map(|k| sample_sensor(&sensor, &wave, k as f64 * sensor.period(), &mut rng))
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

pub fn write_prediction_csv<W: Write>(writer: W, points: &[PredictionPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
