//! Mission automaton: search, align, collect data, land, touchdown.

use serde::{Deserialize, Serialize};

use super::activation::{activation_check, ActivationThresholds};
use crate::uav_model::{UavState, AXIS_X, AXIS_Y, AXIS_Z};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MissionPhase {
    AscendSearch,
    HoverAlign,
    Collect,
    Land,
    Touchdown,
    /// Search ceiling reached without seeing the pad.
    Aborted,
}

impl MissionPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            MissionPhase::AscendSearch => "ASCEND_SEARCH",
            MissionPhase::HoverAlign => "HOVER_ALIGN",
            MissionPhase::Collect => "COLLECT",
            MissionPhase::Land => "LAND",
            MissionPhase::Touchdown => "TOUCHDOWN",
            MissionPhase::Aborted => "ABORTED",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, MissionPhase::Touchdown | MissionPhase::Aborted)
    }
}

/// What starts the landing once the vehicle collects data over the pad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Trigger {
    /// Identification accuracy and alignment, with the landing cost enabled.
    Activation,
    /// Fixed delay after entering COLLECT; the landing cost stays off.
    Delay(f64),
}

/// Pad centre and deck height in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadEstimate {
    pub x: f64,
    pub y: f64,
    pub deck_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observations {
    pub t: f64,
    pub uav: UavState,
    /// Present when the pad is visible this cycle.
    pub pad: Option<PadEstimate>,
    pub fft_accuracy: Option<f64>,
    pub contact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionCommand {
    pub phase: MissionPhase,
    /// Position setpoint, at rest. `None` in terminal phases.
    pub setpoint: Option<UavState>,
    pub landing_active: bool,
    /// Controller outputs must be zeroed.
    pub zero_output: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub phase: MissionPhase,
    pub trigger: Trigger,
    pub thresholds: ActivationThresholds,
    /// Hover height above the deck while aligning and collecting.
    pub hover_altitude: f64,
    /// Absolute altitude at which the search gives up.
    pub ceiling: f64,
    /// Altitude tolerance for declaring the hover reached.
    pub altitude_tolerance: f64,
    phase_since: f64,
    search_xy: Option<[f64; 2]>,
    last_pad: Option<PadEstimate>,
    accuracy_latch: Option<f64>,
}

impl Mission {
    pub fn new(trigger: Trigger) -> Self {
        Self {
            phase: MissionPhase::AscendSearch,
            trigger,
            thresholds: ActivationThresholds::default(),
            hover_altitude: 1.6,
            ceiling: 12.0,
            altitude_tolerance: 0.2,
            phase_since: 0.0,
            search_xy: None,
            last_pad: None,
            accuracy_latch: None,
        }
    }

    /// Time at which the identification accuracy first reached the threshold.
    pub fn accuracy_latched_at(&self) -> Option<f64> {
        self.accuracy_latch
    }

    pub fn phase_since(&self) -> f64 {
        self.phase_since
    }

    pub fn last_pad(&self) -> Option<PadEstimate> {
        self.last_pad
    }

    fn enter(&mut self, phase: MissionPhase, t: f64) {
        if phase != self.phase {
            self.phase = phase;
            self.phase_since = t;
        }
    }

    fn hover_setpoint(&self, pad: &PadEstimate, heading: f64) -> UavState {
        UavState::at_rest(pad.x, pad.y, pad.deck_height + self.hover_altitude, heading)
    }

    /// Advances the automaton by one control cycle.
    pub fn step(&mut self, obs: &Observations) -> MissionCommand {
        if let Some(pad) = obs.pad {
            self.last_pad = Some(pad);
        }
        if let Some(acc) = obs.fft_accuracy {
            if self.accuracy_latch.is_none() && acc >= self.thresholds.accuracy {
                self.accuracy_latch = Some(obs.t);
            }
        }
        if obs.contact && !self.phase.is_terminal() {
            self.enter(MissionPhase::Touchdown, obs.t);
        }
        let heading = obs.uav.pos(3);

        match self.phase {
            MissionPhase::AscendSearch => {
                if obs.pad.is_some() {
                    self.enter(MissionPhase::HoverAlign, obs.t);
                    return self.step_align(obs, heading);
                }
                if obs.uav.pos(AXIS_Z) >= self.ceiling - self.altitude_tolerance {
                    self.enter(MissionPhase::Aborted, obs.t);
                    return self.idle();
                }
                let xy = *self
                    .search_xy
                    .get_or_insert([obs.uav.pos(AXIS_X), obs.uav.pos(AXIS_Y)]);
                MissionCommand {
                    phase: self.phase,
                    setpoint: Some(UavState::at_rest(xy[0], xy[1], self.ceiling, heading)),
                    landing_active: false,
                    zero_output: false,
                }
            }
            MissionPhase::HoverAlign => self.step_align(obs, heading),
            MissionPhase::Collect => {
                let pad = self.last_pad.expect("pad seen before COLLECT");
                let start = match self.trigger {
                    Trigger::Activation => obs.pad.is_some() && {
                        let acc = obs.fft_accuracy.unwrap_or(0.0);
                        activation_check([pad.x, pad.y], &obs.uav, acc, &self.thresholds)
                    },
                    Trigger::Delay(d) => obs.t - self.phase_since >= d,
                };
                if start {
                    self.enter(MissionPhase::Land, obs.t);
                    return self.land_command(&pad, heading);
                }
                MissionCommand {
                    phase: self.phase,
                    setpoint: Some(self.hover_setpoint(&pad, heading)),
                    landing_active: false,
                    zero_output: false,
                }
            }
            MissionPhase::Land => {
                if obs.pad.is_none() {
                    self.enter(MissionPhase::HoverAlign, obs.t);
                    return self.step_align(obs, heading);
                }
                let pad = self.last_pad.expect("pad visible");
                self.land_command(&pad, heading)
            }
            MissionPhase::Touchdown | MissionPhase::Aborted => self.idle(),
        }
    }

    fn step_align(&mut self, obs: &Observations, heading: f64) -> MissionCommand {
        let pad = self.last_pad.expect("pad seen before HOVER_ALIGN");
        let sp = self.hover_setpoint(&pad, heading);
        let u = &obs.uav;
        let thr = &self.thresholds;
        let aligned = obs.pad.is_some()
            && (u.pos(AXIS_X) - pad.x).abs() <= thr.position
            && (u.pos(AXIS_Y) - pad.y).abs() <= thr.position
            && (u.pos(AXIS_Z) - sp.pos(AXIS_Z)).abs() <= self.altitude_tolerance
            && u.vel(AXIS_X).abs() <= thr.velocity
            && u.vel(AXIS_Y).abs() <= thr.velocity;
        if aligned {
            self.enter(MissionPhase::Collect, obs.t);
        }
        MissionCommand {
            phase: self.phase,
            setpoint: Some(sp),
            landing_active: false,
            zero_output: false,
        }
    }

    fn land_command(&self, pad: &PadEstimate, heading: f64) -> MissionCommand {
        MissionCommand {
            phase: self.phase,
            setpoint: Some(UavState::at_rest(pad.x, pad.y, pad.deck_height, heading)),
            landing_active: matches!(self.trigger, Trigger::Activation),
            zero_output: false,
        }
    }

    fn idle(&self) -> MissionCommand {
        MissionCommand {
            phase: self.phase,
            setpoint: None,
            landing_active: false,
            zero_output: true,
        }
    }
}
