//! Scenario configuration and the built-in scenario library.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mpc::{ActivationThresholds, MpcConfig};
use crate::pose_stream::{DEFAULT_RETENTION, DEFAULT_WINDOW_SPAN};
use crate::sim::{PlantSpec, SensorSpec, WaveSpec};
use crate::spectral::{DEFAULT_GATE, DEFAULT_REIDENTIFY_PERIOD};
use crate::{Error, Result};

/// Source of the deck state used by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensing {
    /// Camera stream with jitter, noise and dropouts, visible only when the
    /// pad is in view.
    Vision,
    /// Deck-mounted inertial stream, always available.
    Imu,
    /// Ground-truth pose and forecasts straight from the wave generator.
    Oracle,
}

impl Sensing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sensing::Vision => "vision",
            Sensing::Imu => "imu",
            Sensing::Oracle => "oracle",
        }
    }
}

impl FromStr for Sensing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vision" => Ok(Sensing::Vision),
            "imu" => Ok(Sensing::Imu),
            "oracle" => Ok(Sensing::Oracle),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sensing '{s}' (vision, imu, oracle)"
            ))),
        }
    }
}

impl fmt::Display for Sensing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Landing cost driven by the tilt forecast.
    MpcNe,
    /// Lands after a random delay at constant sink rate, ignoring tilt.
    Baseline,
}

impl Controller {
    pub fn as_str(&self) -> &'static str {
        match self {
            Controller::MpcNe => "mpc_ne",
            Controller::Baseline => "baseline",
        }
    }
}

impl FromStr for Controller {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpc_ne" => Ok(Controller::MpcNe),
            "baseline" => Ok(Controller::Baseline),
            _ => Err(Error::InvalidArgument(format!(
                "unknown controller '{s}' (mpc_ne, baseline)"
            ))),
        }
    }
}

impl fmt::Display for Controller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identification and observer settings of the deck estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Length of the identification window, seconds.
    pub window_span: f64,
    /// How long samples stay in the buffer, seconds.
    pub retention: f64,
    /// Time between identifications, seconds.
    pub reidentify_period: f64,
    pub gate: f64,
    pub lambda: f64,
    /// Measurement variance; defaults to the sensor's angular noise variance.
    pub r: Option<f64>,
    pub p0_scale: f64,
    /// Averaging time of the pad position estimate, seconds.
    pub pad_average: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            window_span: DEFAULT_WINDOW_SPAN,
            retention: DEFAULT_RETENTION,
            reidentify_period: DEFAULT_REIDENTIFY_PERIOD,
            gate: DEFAULT_GATE,
            lambda: 1e-4,
            r: None,
            p0_scale: 100.0,
            pad_average: 1.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.window_span) || !pos(self.reidentify_period) || !pos(self.pad_average) {
            return Err(Error::InvalidArgument(format!("estimator timing: {self:?}")));
        }
        if self.retention < self.window_span {
            return Err(Error::InvalidArgument(format!(
                "retention {} shorter than window {}",
                self.retention, self.window_span
            )));
        }
        if !(self.gate > 0.0 && self.gate < 1.0) {
            return Err(Error::InvalidArgument(format!("gate {}", self.gate)));
        }
        if !pos(self.lambda) || !pos(self.p0_scale) || self.r.is_some_and(|r| !pos(r)) {
            return Err(Error::InvalidArgument(format!("observer noise: {self:?}")));
        }
        Ok(())
    }
}

/// Everything needed to run an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub wave: WaveSpec,
    /// Redraw every wave phase per episode seed.
    pub randomize_phases: bool,
    /// Each episode starts at a uniform random time in `[0, time_offset)`
    /// of the sea, seconds.
    pub time_offset: f64,
    pub sensing: Sensing,
    pub vision: SensorSpec,
    pub imu: SensorSpec,
    pub plant: PlantSpec,
    pub mpc: MpcConfig,
    pub estimator: EstimatorConfig,
    pub activation: ActivationThresholds,
    /// Initial vehicle position.
    pub start: [f64; 3],
    /// Half-width of the uniform jitter added to the start x and y.
    pub start_jitter: f64,
    /// Hover height above the deck while aligning and collecting.
    pub hover_altitude: f64,
    /// Search ceiling, absolute altitude.
    pub ceiling: f64,
    pub pad_halfwidth: f64,
    /// Half-width of the deck; contact is only possible above it.
    pub deck_halfwidth: f64,
    /// Half opening angle of the downward camera, degrees.
    pub camera_half_fov: f64,
    /// Episode time limit, seconds.
    pub timeout: f64,
    pub plant_rate: f64,
    pub control_rate: f64,
    /// The landing setpoint sits this far below the deck surface so the
    /// vehicle reaches the deck with a finite sink rate, meters.
    pub sink_depth: f64,
    /// Upper bound of the baseline's uniform landing delay, seconds.
    pub baseline_max_delay: f64,
    /// Baseline sink rate, m/s.
    pub baseline_descent_speed: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            wave: WaveSpec::flat([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            randomize_phases: false,
            time_offset: 0.0,
            sensing: Sensing::Vision,
            vision: SensorSpec::vision(),
            imu: SensorSpec::imu(),
            plant: PlantSpec::default(),
            mpc: MpcConfig::default(),
            estimator: EstimatorConfig::default(),
            activation: ActivationThresholds::default(),
            start: [-3.0, 2.0, 1.5],
            start_jitter: 0.5,
            hover_altitude: 1.6,
            ceiling: 12.0,
            pad_halfwidth: 1.0,
            deck_halfwidth: 2.5,
            camera_half_fov: 35.0,
            timeout: 180.0,
            plant_rate: 100.0,
            control_rate: 20.0,
            sink_depth: 0.3,
            baseline_max_delay: 100.0,
            baseline_descent_speed: 0.5,
        }
    }
}

const BUILTIN: [(&str, &str); 5] = [
    ("calm", include_str!("../../scenarios/calm.json")),
    ("moderate", include_str!("../../scenarios/moderate.json")),
    ("harsh", include_str!("../../scenarios/harsh.json")),
    ("realworld-like", include_str!("../../scenarios/realworld-like.json")),
    ("three-mode", include_str!("../../scenarios/three-mode.json")),
];

impl Scenario {
    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN.iter().map(|(n, _)| *n).collect()
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no built-in scenario '{name}'")))?;
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Loads a built-in scenario by name, or a JSON file by path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUILTIN.iter().any(|(n, _)| *n == name_or_path) {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::InvalidArgument(format!(
                "'{name_or_path}' is neither a file nor a built-in scenario ({})",
                Self::builtin_names().join(", ")
            )));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn plant_dt(&self) -> f64 {
        1.0 / self.plant_rate
    }

    /// Plant steps per control cycle.
    pub fn plant_steps_per_cycle(&self) -> usize {
        (self.plant_rate / self.control_rate).round() as usize
    }

    /// Prediction steps per control cycle.
    pub fn mpc_steps_per_cycle(&self) -> usize {
        (1.0 / (self.control_rate * self.mpc.dt_pred)).round() as usize
    }

    /// The stream the estimator runs on.
    pub fn sensor(&self) -> &SensorSpec {
        match self.sensing {
            Sensing::Imu => &self.imu,
            _ => &self.vision,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.wave.validate()?;
        self.vision.validate()?;
        self.imu.validate()?;
        self.plant.validate()?;
        self.mpc.validate()?;
        self.estimator.validate()?;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.plant_rate) || !pos(self.control_rate) || self.control_rate > self.plant_rate {
            return bad(format!(
                "rates: plant {} Hz, control {} Hz",
                self.plant_rate, self.control_rate
            ));
        }
        let ratio = self.plant_rate / self.control_rate;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return bad(format!("plant rate must be a multiple of the control rate, got {ratio}"));
        }
        let k = 1.0 / (self.control_rate * self.mpc.dt_pred);
        if (k - k.round()).abs() > 1e-9 || k.round() < 1.0 || k.round() as usize > self.mpc.mc {
            return bad(format!(
                "control period must be a whole number (1..={}) of prediction steps, got {k}",
                self.mpc.mc
            ));
        }
        if !pos(self.timeout) || !pos(self.hover_altitude) || !pos(self.pad_halfwidth) {
            return bad("timeout, hover altitude and pad half-width must be positive".into());
        }
        if !(self.deck_halfwidth >= self.pad_halfwidth) {
            return bad("deck half-width smaller than the pad".into());
        }
        if !(self.time_offset >= 0.0) || !self.time_offset.is_finite() {
            return bad(format!("time offset {}", self.time_offset));
        }
        if !(self.camera_half_fov > 0.0 && self.camera_half_fov < 90.0) {
            return bad(format!("camera half field of view {}", self.camera_half_fov));
        }
        if !(self.start_jitter >= 0.0) || self.start.iter().any(|v| !v.is_finite()) {
            return bad("start position".into());
        }
        if self.ceiling <= self.start[2] {
            return bad(format!("ceiling {} below start altitude", self.ceiling));
        }
        if !(self.sink_depth >= 0.0) || !self.sink_depth.is_finite() {
            return bad(format!("sink depth {}", self.sink_depth));
        }
        if !(self.baseline_max_delay >= 0.0) || !pos(self.baseline_descent_speed) {
            return bad("baseline delay and descent speed".into());
        }
        Ok(())
    }
}
