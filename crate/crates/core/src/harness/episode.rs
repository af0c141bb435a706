//! One closed-loop landing episode.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mpc::{
    LandingContext, LandingMpc, Mission, MissionPhase, MpcSolution, Observations, PadEstimate,
    Trigger,
};
use crate::pose_stream::PoseSample;
use crate::sim::{check_touchdown, plant_step, sample_sensor, ContactReport, WaveSpec};
use crate::uav_model::{UavState, AXIS_X, AXIS_Y, AXIS_Z};
use crate::{Result, TILT_X, TILT_Y};

use super::estimator::DeckEstimator;
use super::scenario::{Controller, Scenario, Sensing};

/// A successful landing touches the pad below this tilt, radians.
pub const SUCCESS_TILT: f64 = 0.35;

// independent random streams of one episode
const STREAM_WAVE: u64 = 1;
const STREAM_SENSOR: u64 = 2;
const STREAM_PLANT: u64 = 3;
const STREAM_TRIGGER: u64 = 4;
const STREAM_START: u64 = 5;

/// The descent starts once the lowest forecast tilt lies at least this far
/// ahead, seconds. Closer windows cannot be reached from hover height.
const DESCENT_LEAD: f64 = 0.95;
/// Below this forecast tilt there is no window to wait for, radians.
const CALM_TILT: f64 = 0.05;

/// A sensor frame is dropped when the pad was out of view at this age, s.
const VISIBILITY_HOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Touchdown,
    Timeout,
    Aborted,
}

/// Summary of one episode, one CSV row in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub seed: u64,
    pub controller: Controller,
    pub outcome: Outcome,
    pub timeline: Option<String>,
    /// First time the identification score reached the activation threshold.
    pub t_fft_ready: Option<f64>,
    pub t_land_start: Option<f64>,
    pub t_touchdown: Option<f64>,
    pub touchdown_tilt: Option<f64>,
    pub lateral_offset: Option<f64>,
    pub relative_vz: Option<f64>,
    pub on_pad: bool,
    pub success: bool,
    pub solves: usize,
    pub budget_limited: usize,
}

/// One controller cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRow {
    pub t: f64,
    pub phase: MissionPhase,
    pub state: UavState,
    pub vref: [f64; 4],
    pub cost: Option<f64>,
    pub fft_accuracy: Option<f64>,
    /// Forecast tilt magnitude at the first prediction step.
    pub forecast_tilt_0: Option<f64>,
    /// True deck tilt magnitude, for reference.
    pub tilt: f64,
}

pub const TIMELINE_HEADER: [&str; 22] = [
    "t", "phase", "x", "vx", "ax", "y", "vy", "ay", "z", "vz", "az", "eta", "eta_d", "eta_dd",
    "vref_x", "vref_y", "vref_z", "vref_eta", "J", "fft_accuracy", "forecast_tilt_0", "tilt",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_timeline_csv<W: Write>(writer: W, rows: &[TimelineRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TIMELINE_HEADER)?;
    for r in rows {
        let mut rec = Vec::with_capacity(22);
        rec.push(r.t.to_string());
        rec.push(r.phase.as_str().to_string());
        rec.extend(r.state.0.iter().map(|v| v.to_string()));
        rec.extend(r.vref.iter().map(|v| v.to_string()));
        rec.push(opt(r.cost));
        rec.push(opt(r.fft_accuracy));
        rec.push(opt(r.forecast_tilt_0));
        rec.push(r.tilt.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub record: EpisodeRecord,
    pub timeline: Vec<TimelineRow>,
    pub wave: WaveSpec,
    pub contact: Option<ContactReport>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The wave an episode with `seed` runs on.
pub fn episode_wave(sc: &Scenario, seed: u64) -> WaveSpec {
    let mut rng = stream(seed, STREAM_WAVE);
    let wave = if sc.randomize_phases {
        sc.wave.randomized(&mut rng)
    } else if let Some(s) = sc.wave.seed {
        sc.wave.randomized(&mut ChaCha8Rng::seed_from_u64(s))
    } else {
        sc.wave.clone()
    };
    if sc.time_offset > 0.0 {
        wave.shifted(rng.gen_range(0.0..sc.time_offset))
    } else {
        wave
    }
}

/// Contact with the deck, or with the sea surface beside it.
fn find_contact(sc: &Scenario, uav: &UavState, wave: &WaveSpec, t: f64) -> Option<ContactReport> {
    let pose = wave.pose(t);
    let dx = uav.pos(AXIS_X) - pose[0];
    let dy = uav.pos(AXIS_Y) - pose[1];
    if dx.abs() <= sc.deck_halfwidth && dy.abs() <= sc.deck_halfwidth {
        return check_touchdown(uav, wave, t, sc.pad_halfwidth);
    }
    (uav.pos(AXIS_Z) <= 0.0).then(|| ContactReport {
        t,
        tilt: pose[TILT_X].hypot(pose[TILT_Y]),
        relative_vz: uav.vel(AXIS_Z),
        lateral_offset: dx.hypot(dy),
        on_pad: false,
    })
}

/// Camera footprint test: the pad centre lies inside the downward cone, or
/// the vehicle is above the pad itself.
fn pad_in_view(sc: &Scenario, uav: &UavState, pose: &[f64; 6]) -> bool {
    let height = uav.pos(AXIS_Z) - pose[2];
    if height <= 0.0 {
        return false;
    }
    let dx = uav.pos(AXIS_X) - pose[0];
    let dy = uav.pos(AXIS_Y) - pose[1];
    let reach = (height * sc.camera_half_fov.to_radians().tan()).max(sc.pad_halfwidth);
    dx.hypot(dy) <= reach
}

/// Whether the tilt window the forecast points to sits at the far end of the
/// horizon, so the whole horizon is left for the approach.
fn ready_to_descend(forecast: &[[f64; 2]], dt_pred: f64) -> bool {
    let tilt = |b: &[f64; 2]| b[0].hypot(b[1]);
    let peak = forecast.iter().map(tilt).fold(0.0, f64::max);
    if peak <= CALM_TILT {
        return true;
    }
    // last index of the minimum
    let (lowest, _) = forecast
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(k, m), (i, b)| if tilt(b) <= m { (i, tilt(b)) } else { (k, m) });
    (lowest + 1) as f64 * dt_pred >= DESCENT_LEAD
}

/// Per-step velocity command: the planned velocity at the end of the plant
/// step plus a lead that cancels the plant lag for the planned acceleration.
fn plan_commands(
    sol: &MpcSolution,
    steps: usize,
    plant_dt: f64,
    dt_pred: f64,
    tau: f64,
) -> Vec<[f64; 4]> {
    (0..steps)
        .map(|k| {
            let m = (((k + 1) as f64 * plant_dt / dt_pred).round() as usize)
                .clamp(1, sol.states.len());
            let s = &sol.states[m - 1];
            let mut v = [0.0; 4];
            for (a, vi) in v.iter_mut().enumerate() {
                *vi = s.vel(a) + tau * s.acc(a);
            }
            v
        })
        .collect()
}

/// Runs one episode. Episode timeouts and aborts are outcomes, not errors;
/// errors are reserved for invalid configurations.
pub fn run_episode(
    sc: &Scenario,
    controller: Controller,
    seed: u64,
    index: usize,
    keep_timeline: bool,
) -> Result<Episode> {
    sc.validate()?;
    let wave = episode_wave(sc, seed);
    let mut sensor_rng = stream(seed, STREAM_SENSOR);
    let mut plant_rng = stream(seed, STREAM_PLANT);
    let mut trigger_rng = stream(seed, STREAM_TRIGGER);
    let mut start_rng = stream(seed, STREAM_START);

    let trigger = match controller {
        Controller::MpcNe => Trigger::Activation,
        Controller::Baseline => Trigger::Delay(trigger_rng.gen_range(0.0..=sc.baseline_max_delay)),
    };
    let mut mission = Mission::new(trigger);
    mission.thresholds = sc.activation;
    mission.hover_altitude = sc.hover_altitude;
    mission.ceiling = sc.ceiling;

    let j = sc.start_jitter;
    let mut uav = UavState::at_rest(
        sc.start[0] + start_rng.gen_range(-j..=j),
        sc.start[1] + start_rng.gen_range(-j..=j),
        sc.start[2],
        0.0,
    );

    let sensor = *sc.sensor();
    let mut estimator = DeckEstimator::new(&sc.estimator, &sensor);
    let mut next_request = 0.0;
    let mut pending: Vec<PoseSample> = Vec::new();
    let mut last_seen: Option<f64> = None;

    let steps_per_cycle = sc.plant_steps_per_cycle();
    let mut mpc = LandingMpc::new(sc.mpc.clone(), sc.mpc_steps_per_cycle())?;
    let dt = sc.plant_dt();
    let n_steps = (sc.timeout * sc.plant_rate).round() as usize;
    let mp = sc.mpc.mp;
    let dt_pred = sc.mpc.dt_pred;

    let mut commands: Vec<[f64; 4]> = vec![[0.0; 4]; steps_per_cycle];
    let mut timeline = Vec::new();
    let mut contact: Option<ContactReport> = None;
    let mut outcome = Outcome::Timeout;
    let mut fft_ready: Option<f64> = None;
    let mut land_start: Option<f64> = None;
    let mut solves = 0;
    let mut budget_limited = 0;
    let mut descent_armed = false;

    for i in 0..n_steps {
        let t = i as f64 * dt;
        let pose = wave.pose(t);
        let visible = pad_in_view(sc, &uav, &pose);
        if visible {
            last_seen = Some(t);
        }

        // sensor frames requested up to now, delivered once their time passes
        if sc.sensing != Sensing::Oracle {
            while next_request <= t + 1e-12 {
                let t_req = next_request;
                next_request += sensor.period();
                let in_view = sc.sensing == Sensing::Imu
                    || pad_in_view(sc, &uav, &wave.pose(t_req));
                let frame = sample_sensor(&sensor, &wave, t_req, &mut sensor_rng);
                if let (true, Some(s)) = (in_view, frame) {
                    pending.push(s);
                }
            }
            pending.sort_by(|a, b| a.t.total_cmp(&b.t));
            let ready = pending.partition_point(|s| s.t <= t);
            for s in pending.drain(..ready) {
                // a late frame older than the newest buffered one is discarded
                let _ = estimator.push(s);
            }
            estimator.update(t)?;
        }

        if i % steps_per_cycle == 0 {
            let seen_recently = last_seen.is_some_and(|ts| t - ts <= VISIBILITY_HOLD);
            let (pad, accuracy) = match sc.sensing {
                Sensing::Oracle => (
                    visible.then_some(PadEstimate {
                        x: pose[0],
                        y: pose[1],
                        deck_height: pose[2],
                    }),
                    visible.then_some(1.0),
                ),
                _ => (
                    if seen_recently { estimator.pad_estimate() } else { None },
                    estimator.accuracy(),
                ),
            };
            let obs = Observations {
                t,
                uav,
                pad,
                fft_accuracy: accuracy,
                contact: false,
            };
            let cmd = mission.step(&obs);
            if fft_ready.is_none() {
                fft_ready = mission.accuracy_latched_at();
            }
            if cmd.phase == MissionPhase::Aborted {
                outcome = Outcome::Aborted;
                break;
            }
            if cmd.phase == MissionPhase::Land && land_start.is_none() {
                land_start = Some(t);
            }
            if cmd.phase != MissionPhase::Land {
                descent_armed = false;
            }

            let times = (1..=mp).map(|m| t + m as f64 * dt_pred);
            let forecast: Option<Vec<[f64; 2]>> = match sc.sensing {
                Sensing::Oracle => Some(
                    times
                        .map(|tm| {
                            let p = wave.pose(tm);
                            [p[TILT_X], p[TILT_Y]]
                        })
                        .collect(),
                ),
                _ => estimator.tilt_forecast(times),
            };

            let mut cost = None;
            match cmd.setpoint {
                Some(sp) => {
                    let ctx = match (&forecast, cmd.landing_active) {
                        (Some(f), true) => {
                            let deck = sp.pos(AXIS_Z);
                            descent_armed = descent_armed || ready_to_descend(f, dt_pred);
                            let mut target = sp;
                            target.0[3 * AXIS_Z] = if descent_armed {
                                deck - sc.sink_depth
                            } else {
                                deck + sc.hover_altitude
                            };
                            LandingContext::landing(target, f.clone()).with_deck_height(deck)
                        }
                        _ => LandingContext::hover(sp),
                    };
                    let sol = mpc.step(ctx, &uav)?;
                    solves += 1;
                    if sol.budget_limited {
                        budget_limited += 1;
                    }
                    cost = Some(sol.cost);
                    commands = plan_commands(
                        &sol,
                        steps_per_cycle,
                        dt,
                        dt_pred,
                        sc.plant.time_constant,
                    );
                    if controller == Controller::Baseline && cmd.phase == MissionPhase::Land {
                        for c in commands.iter_mut() {
                            c[AXIS_Z] = -sc.baseline_descent_speed;
                        }
                    }
                }
                None => commands = vec![[0.0; 4]; steps_per_cycle],
            }

            if keep_timeline {
                let f0 = forecast
                    .as_ref()
                    .map(|f| f[0][0].hypot(f[0][1]));
                timeline.push(TimelineRow {
                    t,
                    phase: cmd.phase,
                    state: uav,
                    vref: commands[0],
                    cost,
                    fft_accuracy: accuracy,
                    forecast_tilt_0: f0,
                    tilt: pose[TILT_X].hypot(pose[TILT_Y]),
                });
            }
        }

        uav = plant_step(&sc.plant, &uav, commands[i % steps_per_cycle], dt, &mut plant_rng);
        if let Some(c) = find_contact(sc, &uav, &wave, t + dt) {
            contact = Some(c);
            outcome = Outcome::Touchdown;
            let obs = Observations {
                t: t + dt,
                uav,
                pad: None,
                fft_accuracy: None,
                contact: true,
            };
            let cmd = mission.step(&obs);
            if keep_timeline {
                timeline.push(TimelineRow {
                    t: t + dt,
                    phase: cmd.phase,
                    state: uav,
                    vref: [0.0; 4],
                    cost: None,
                    fft_accuracy: None,
                    forecast_tilt_0: None,
                    tilt: c.tilt,
                });
            }
            break;
        }
    }

    let success = contact.is_some_and(|c| c.on_pad && c.tilt < SUCCESS_TILT);
    let record = EpisodeRecord {
        index,
        seed,
        controller,
        outcome,
        timeline: None,
        t_fft_ready: fft_ready,
        t_land_start: land_start,
        t_touchdown: contact.map(|c| c.t),
        touchdown_tilt: contact.map(|c| c.tilt),
        lateral_offset: contact.map(|c| c.lateral_offset),
        relative_vz: contact.map(|c| c.relative_vz),
        on_pad: contact.is_some_and(|c| c.on_pad),
        success,
        solves,
        budget_limited,
    };
    Ok(Episode {
        record,
        timeline,
        wave,
        contact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visibility_cone() {
        let sc = Scenario::default();
        let pose = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert!(pad_in_view(&sc, &UavState::at_rest(0.5, 0.5, 1.2, 0.0), &pose));
        assert!(!pad_in_view(&sc, &UavState::at_rest(3.0, 0.0, 2.0, 0.0), &pose));
        assert!(pad_in_view(&sc, &UavState::at_rest(3.0, 0.0, 6.0, 0.0), &pose));
        assert!(!pad_in_view(&sc, &UavState::at_rest(0.0, 0.0, 0.9, 0.0), &pose));
    }
}
