//! Linear Kalman observer over the identified modes of one axis, and the
//! wave forecast built from it.
//!
//! Every mode contributes a two-entry state `v = [A sin(Phi), 2 pi f A cos(Phi)]`
//! evolving as a harmonic oscillator; a trailing two-entry block carries the
//! offset with zero dynamics. The transition matrix is the exact matrix
//! exponential of the block-diagonal oscillator generator.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::spectral::{match_modes, wrap_phase, Mode, ModeSet};
use crate::{Error, Result};

/// Observer tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    /// Sampling period of the measurements fed to the filter.
    pub dt: f64,
    /// Process-noise gain, `Q_I = lambda * I`.
    pub lambda: f64,
    /// Measurement-noise variance.
    pub r: f64,
    /// Initial covariance as a multiple of `Q`.
    pub p0_scale: f64,
}

impl ObserverConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            lambda: 1e-4,
            r: 1e-4,
            p0_scale: 100.0,
        }
    }

    pub fn with_noise(mut self, lambda: f64, r: f64) -> Self {
        self.lambda = lambda;
        self.r = r;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.dt) || !ok(self.lambda) || !ok(self.r) || !ok(self.p0_scale) {
            return Err(Error::InvalidArgument(format!(
                "observer config needs positive dt, lambda, r, p0_scale: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Closed-form `exp([[0, 1], [-w^2, 0]] dt)`.
pub fn oscillator_transition(freq: f64, dt: f64) -> Matrix2<f64> {
    let w = 2.0 * PI * freq;
    let (s, c) = (w * dt).sin_cos();
    Matrix2::new(c, s / w, -w * s, c)
}

/// Continuous generator of one mode, `[[0, 1], [-(2 pi f)^2, 0]]`.
pub fn oscillator_generator(freq: f64) -> Matrix2<f64> {
    let w = 2.0 * PI * freq;
    Matrix2::new(0.0, 1.0, -w * w, 0.0)
}

/// Mode state from amplitude and absolute phase.
pub fn mode_state(freq: f64, amplitude: f64, phase: f64) -> [f64; 2] {
    let (s, c) = phase.sin_cos();
    [amplitude * s, 2.0 * PI * amplitude * freq * c]
}

/// Amplitude and phase recovered from a mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpPhase {
    pub amplitude: f64,
    pub phase: f64,
    /// Both state entries were numerically zero.
    pub degenerate: bool,
}

/// Inverts [`mode_state`] with a quadrant-correct angle.
pub fn amp_phase_from_state(freq: f64, v: [f64; 2]) -> AmpPhase {
    if v[0].abs() < 1e-12 && v[1].abs() < 1e-12 {
        return AmpPhase {
            amplitude: 0.0,
            phase: 0.0,
            degenerate: true,
        };
    }
    let w = 2.0 * PI * freq;
    let mut phase = (w * v[0]).atan2(v[1]);
    let (s, c) = phase.sin_cos();
    let mut amplitude = if s.abs() > 1e-6 { v[0] / s } else { v[1] / (w * c) };
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase = wrap_phase(phase + PI);
    }
    AmpPhase {
        amplitude,
        phase,
        degenerate: false,
    }
}

/// Forecast parameters extracted from the observer at `t_obs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveForecast {
    pub t_obs: f64,
    /// Phases are absolute at `t_obs`.
    pub modes: Vec<Mode>,
    pub offset: f64,
}

impl WaveForecast {
    /// Forecast value at `t`. Valid for `t >= t_obs`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let dt = t - self.t_obs;
        self.offset + self.modes.iter().map(|m| m.value(dt)).sum::<f64>()
    }

    /// Writes `f,A,Phi` mode rows followed by the offset as a zero-frequency row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["f", "A", "Phi"])?;
        for m in &self.modes {
            wtr.write_record(&[
                m.freq.to_string(),
                m.amplitude.to_string(),
                m.phase.to_string(),
            ])?;
        }
        wtr.write_record(&["0".to_string(), self.offset.to_string(), "0".to_string()])?;
        wtr.flush()?;
        Ok(())
    }
}

/// Kalman mode observer for a single axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeObserver {
    pub axis: usize,
    pub freqs: Vec<f64>,
    /// Stacked state, `2 (N + 1)` entries, offset block last.
    pub v: DVector<f64>,
    pub p: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub config: ObserverConfig,
    pub t_last: f64,
}

impl ModeObserver {
    /// Builds the observer from an identification; the state is expressed at
    /// `modes.t_fft`.
    pub fn init(modes: &ModeSet, config: ObserverConfig) -> Result<Self> {
        config.validate()?;
        if modes.modes.iter().any(|m| !(m.freq > 0.0)) {
            return Err(Error::ZeroFrequency);
        }
        let freqs: Vec<f64> = modes.modes.iter().map(|m| m.freq).collect();
        let n = 2 * (freqs.len() + 1);
        let mut v = DVector::zeros(n);
        for (i, m) in modes.modes.iter().enumerate() {
            let s = mode_state(m.freq, m.amplitude, m.phase);
            v[2 * i] = s[0];
            v[2 * i + 1] = s[1];
        }
        v[n - 2] = modes.offset;

        let (psi, q) = build_dynamics(&freqs, &config);
        let p = &q * config.p0_scale;
        Ok(Self {
            axis: modes.axis,
            freqs,
            v,
            p,
            psi,
            q,
            config,
            t_last: modes.t_fft,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.freqs.len()
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Filtered output `C v`.
    pub fn output(&self) -> f64 {
        self.v.iter().step_by(2).sum()
    }

    /// One filter cycle with the measurement taken at `t_last + dt`.
    pub fn step(&mut self, measurement: f64) -> Result<()> {
        if !measurement.is_finite() {
            return Err(Error::InvalidArgument("non-finite measurement".into()));
        }
        let n = self.dim();
        // predict state and covariance
        let v_hat = &self.psi * &self.v;
        let p_hat = &self.psi * &self.p * self.psi.transpose() + &self.q;
        // predicted output (C selects even entries)
        let b_hat: f64 = v_hat.iter().step_by(2).sum();
        let pc: DVector<f64> = DVector::from_fn(n, |r, _| (0..n).step_by(2).map(|c| p_hat[(r, c)]).sum());
        let innovation_var: f64 = pc.iter().step_by(2).sum::<f64>() + self.config.r;
        if !(innovation_var > 0.0) || !innovation_var.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "innovation covariance {innovation_var} at t={}",
                self.t_last + self.config.dt
            )));
        }
        let gain = pc / innovation_var;
        // correct
        self.v = v_hat + &gain * (measurement - b_hat);
        // (I - L C) P_hat, with C P_hat = sum of even rows
        let cp: DVector<f64> = DVector::from_fn(n, |c, _| (0..n).step_by(2).map(|r| p_hat[(r, c)]).sum());
        let mut p = p_hat - &gain * cp.transpose();
        let pt = p.transpose();
        p += pt;
        p *= 0.5;
        self.p = p;
        self.t_last += self.config.dt;
        Ok(())
    }

    /// Time update only, for sampling instants without a measurement.
    pub fn predict_only(&mut self) {
        self.v = &self.psi * &self.v;
        let mut p = &self.psi * &self.p * self.psi.transpose() + &self.q;
        let pt = p.transpose();
        p += pt;
        p *= 0.5;
        self.p = p;
        self.t_last += self.config.dt;
    }

    /// Amplitude and phase of mode `i` at `t_last`.
    pub fn amp_phase(&self, i: usize) -> Result<AmpPhase> {
        if i >= self.num_modes() {
            return Err(Error::InvalidArgument(format!(
                "mode {i} out of {}",
                self.num_modes()
            )));
        }
        Ok(amp_phase_from_state(
            self.freqs[i],
            [self.v[2 * i], self.v[2 * i + 1]],
        ))
    }

    pub fn offset(&self) -> f64 {
        self.v[self.dim() - 2]
    }

    pub fn forecast(&self) -> WaveForecast {
        let modes = (0..self.num_modes())
            .map(|i| {
                let ap = amp_phase_from_state(self.freqs[i], [self.v[2 * i], self.v[2 * i + 1]]);
                Mode::new(self.freqs[i], ap.amplitude, ap.phase)
            })
            .collect();
        WaveForecast {
            t_obs: self.t_last,
            modes,
            offset: self.offset(),
        }
    }

    /// Predicted axis value at `t >= t_last`.
    pub fn predict(&self, t: f64) -> Result<f64> {
        if t < self.t_last - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "prediction time {t} precedes last observation {}",
                self.t_last
            )));
        }
        Ok(self.forecast().evaluate(t))
    }

    /// Merges a new identification: matched modes keep their state and
    /// covariance, vanished modes are removed, new modes are initialised with
    /// the initial covariance and no cross-correlation.
    pub fn reidentify(&mut self, report: &ModeSet, tol: f64) -> Result<()> {
        if report.axis != self.axis {
            return Err(Error::InvalidArgument(format!(
                "report for axis {} given to observer of axis {}",
                report.axis, self.axis
            )));
        }
        if report.modes.iter().any(|m| !(m.freq > 0.0)) {
            return Err(Error::ZeroFrequency);
        }
        let current = ModeSet::new(
            self.axis,
            self.freqs.iter().map(|&f| Mode::new(f, 0.0, 0.0)).collect(),
            0.0,
            self.t_last,
        );
        let matched = match_modes(&current, report, tol);
        if matched.added.is_empty() && matched.dropped.is_empty() {
            return Ok(());
        }

        let mut retained_old: Vec<usize> = matched.retained.iter().map(|&(i, _)| i).collect();
        retained_old.sort_unstable();
        let n_modes = retained_old.len() + matched.added.len();
        let dim = 2 * (n_modes + 1);
        let old_dim = self.dim();

        // source index in the old state for each new position (None for added)
        let mut src: Vec<Option<usize>> = Vec::with_capacity(dim);
        for &i in &retained_old {
            src.push(Some(2 * i));
            src.push(Some(2 * i + 1));
        }
        for _ in &matched.added {
            src.push(None);
            src.push(None);
        }
        src.push(Some(old_dim - 2));
        src.push(Some(old_dim - 1));

        let mut freqs: Vec<f64> = retained_old.iter().map(|&i| self.freqs[i]).collect();
        let dt_ref = self.t_last - report.t_fft;
        let mut v = DVector::zeros(dim);
        for (r, s) in src.iter().enumerate() {
            if let Some(s) = s {
                v[r] = self.v[*s];
            }
        }
        for (slot, &k) in matched.added.iter().enumerate() {
            let m = report.modes[k];
            let phase = m.phase + 2.0 * PI * m.freq * dt_ref;
            let s = mode_state(m.freq, m.amplitude, phase);
            let base = 2 * (retained_old.len() + slot);
            v[base] = s[0];
            v[base + 1] = s[1];
            freqs.push(m.freq);
        }

        let (psi, q) = build_dynamics(&freqs, &self.config);
        let mut p = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                match (src[r], src[c]) {
                    (Some(a), Some(b)) => p[(r, c)] = self.p[(a, b)],
                    (None, None) if r / 2 == c / 2 => {
                        p[(r, c)] = q[(r, c)] * self.config.p0_scale
                    }
                    _ => {}
                }
            }
        }

        self.freqs = freqs;
        self.v = v;
        self.p = p;
        self.psi = psi;
        self.q = q;
        Ok(())
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_covariance_eigenvalue(&self) -> f64 {
        self.p
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Block-diagonal transition and the process noise
/// `Q = (Psi Q_I Psi^T + Q_I) dt / 2` with `Q_I = lambda I`.
fn build_dynamics(freqs: &[f64], config: &ObserverConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = 2 * (freqs.len() + 1);
    let mut psi = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let scale = 0.5 * config.lambda * config.dt;
    for (i, &f) in freqs.iter().enumerate() {
        let block = oscillator_transition(f, config.dt);
        let qb = (block * block.transpose() + Matrix2::identity()) * scale;
        psi.fixed_view_mut::<2, 2>(2 * i, 2 * i).copy_from(&block);
        q.fixed_view_mut::<2, 2>(2 * i, 2 * i).copy_from(&qb);
    }
    // offset block: exp(0) = I
    psi[(n - 2, n - 2)] = 1.0;
    psi[(n - 1, n - 1)] = 1.0;
    q[(n - 2, n - 2)] = 2.0 * scale;
    q[(n - 1, n - 1)] = 2.0 * scale;
    (psi, q)
}
