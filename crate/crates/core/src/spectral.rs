//! FFT decomposition of a pose window into periodic modes.
//!
//! Each axis is modelled as an offset plus a sum of sinusoids
//! `b(t) = offset + sum_i A_i sin(2 pi f_i (t - t_fft) + phi_i)`.
//! Modes are the strict local maxima of the one-sided amplitude spectrum;
//! peaks below `gate * max_peak` are discarded. No window function and no
//! sub-bin interpolation are applied.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::pose_stream::SampleWindow;
use crate::{Error, Result};

/// Default relative amplitude gate.
pub const DEFAULT_GATE: f64 = 0.02;
/// Default re-identification period in seconds.
pub const DEFAULT_REIDENTIFY_PERIOD: f64 = 5.0;
/// Reconstruction score needed before a landing may start.
pub const DEFAULT_ACCURACY_THRESHOLD: f64 = 0.8;

/// One periodic component of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    #[serde(rename = "f")]
    pub freq: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "phi")]
    pub phase: f64,
}

impl Mode {
    pub fn new(freq: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            freq,
            amplitude,
            phase,
        }
    }

    /// Value of the mode `dt` seconds after its phase reference.
    pub fn value(&self, dt: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.freq * dt + self.phase).sin()
    }
}

/// Modes identified on one axis, phases referenced to `t_fft`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub axis: usize,
    pub modes: Vec<Mode>,
    pub offset: f64,
    pub t_fft: f64,
}

impl ModeSet {
    pub fn new(axis: usize, modes: Vec<Mode>, offset: f64, t_fft: f64) -> Self {
        Self {
            axis,
            modes,
            offset,
            t_fft,
        }
    }

    /// Evaluates the mode sum at absolute time `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let dt = t - self.t_fft;
        self.offset + self.modes.iter().map(|m| m.value(dt)).sum::<f64>()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// One-sided amplitude/phase spectrum of a real series.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Sine phase at the first sample, in `(-pi, pi]`.
    pub phase: Vec<f64>,
}

impl Spectrum {
    /// Computes the spectrum of `series` sampled every `dt` seconds.
    ///
    /// Bin `k` has frequency `k / (n dt)`. Amplitudes are scaled so that a
    /// sinusoid landing exactly on a bin reports its true amplitude; bin 0
    /// holds the mean.
    pub fn compute(series: &[f64], dt: f64) -> Result<Self> {
        let n = series.len();
        if n < 2 {
            return Err(Error::WindowTooShort(n));
        }
        let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);

        let half = n / 2;
        let nf = n as f64;
        let mut freqs = Vec::with_capacity(half + 1);
        let mut amplitude = Vec::with_capacity(half + 1);
        let mut phase = Vec::with_capacity(half + 1);
        for (k, x) in buf.iter().enumerate().take(half + 1) {
            freqs.push(k as f64 / (nf * dt));
            let nyquist = n % 2 == 0 && k == half;
            if k == 0 {
                amplitude.push(x.re / nf);
                phase.push(0.0);
            } else {
                let scale = if nyquist { 1.0 } else { 2.0 };
                amplitude.push(scale * x.norm() / nf);
                // X_k ~ (n/2) A e^{i(phi - pi/2)} for A sin(w t + phi)
                phase.push(wrap_phase(x.arg() + FRAC_PI_2));
            }
        }
        Ok(Self {
            freqs,
            amplitude,
            phase,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Indices of strict local maxima of the amplitude, excluding DC.
    pub fn peaks(&self) -> Vec<usize> {
        let a = &self.amplitude;
        let last = a.len() - 1;
        (1..=last)
            .filter(|&k| {
                let left = k == 1 || a[k] > a[k - 1];
                let right = k == last || a[k] > a[k + 1];
                left && right
            })
            .collect()
    }

    /// Writes `f,amplitude,phase` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["f", "amplitude", "phase"])?;
        for k in 0..self.freqs.len() {
            wtr.write_record(&[
                self.freqs[k].to_string(),
                self.amplitude[k].to_string(),
                self.phase[k].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Identifies the modes of axis `axis` of `window`.
pub fn identify(window: &SampleWindow, axis: usize, gate: f64) -> Result<ModeSet> {
    if axis >= 6 {
        return Err(Error::InvalidArgument(format!("axis index {axis}")));
    }
    identify_series(&window.axis(axis), window.dt, window.t0, axis, gate)
}

/// Identification on a bare series. Phases are referenced to `t0`.
pub fn identify_series(
    series: &[f64],
    dt: f64,
    t0: f64,
    axis: usize,
    gate: f64,
) -> Result<ModeSet> {
    if !(gate > 0.0 && gate < 1.0) {
        return Err(Error::InvalidArgument(format!("gate {gate} not in (0,1)")));
    }
    let spec = Spectrum::compute(series, dt)?;
    let offset = spec.amplitude[0];
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    // round-off floor so a constant series yields no modes
    let floor = 1e-9 * scale;

    let mut modes: Vec<Mode> = spec
        .peaks()
        .into_iter()
        .filter(|&k| spec.amplitude[k] > floor)
        .map(|k| Mode::new(spec.freqs[k], spec.amplitude[k], spec.phase[k]))
        .collect();
    let max_amp = modes.iter().fold(0.0f64, |m, md| m.max(md.amplitude));
    let threshold = gate * max_amp;
    modes.retain(|m| m.amplitude >= threshold);
    modes.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(ModeSet::new(axis, modes, offset, t0))
}

/// Identification of all six axes.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentReport {
    pub mode_sets: Vec<ModeSet>,
    pub accuracy: Vec<f64>,
}

pub fn identify_all(window: &SampleWindow, gate: f64) -> Result<IdentReport> {
    let mut mode_sets = Vec::with_capacity(6);
    let mut accuracy = Vec::with_capacity(6);
    for j in 0..6 {
        let ms = identify(window, j, gate)?;
        accuracy.push(accuracy_score(window, &ms)?.score);
        mode_sets.push(ms);
    }
    Ok(IdentReport {
        mode_sets,
        accuracy,
    })
}

/// Reconstruction score of a mode set against its window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub score: f64,
    /// Set when the window has no variance to explain.
    pub degenerate: bool,
}

/// `1 - RMSE(reconstruction) / RMS(window - mean)`, clamped to `[0, 1]`.
pub fn accuracy_score(window: &SampleWindow, modes: &ModeSet) -> Result<Accuracy> {
    let series = window.axis(modes.axis);
    accuracy_score_series(&series, window.t0, window.dt, modes)
}

pub fn accuracy_score_series(
    series: &[f64],
    t0: f64,
    dt: f64,
    modes: &ModeSet,
) -> Result<Accuracy> {
    if series.len() < 2 {
        return Err(Error::WindowTooShort(series.len()));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let rms = var.sqrt();
    if rms <= 1e-12 * (1.0 + mean.abs()) {
        return Ok(Accuracy {
            score: 1.0,
            degenerate: true,
        });
    }
    let sse: f64 = series
        .iter()
        .enumerate()
        .map(|(k, v)| (modes.evaluate(t0 + k as f64 * dt) - v).powi(2))
        .sum();
    let rmse = (sse / n).sqrt();
    Ok(Accuracy {
        score: (1.0 - rmse / rms).clamp(0.0, 1.0),
        degenerate: false,
    })
}

/// Score over several axes at once: squared residuals and deviations are
/// summed across axes before forming `1 - RMSE / RMS`. An axis without motion
/// then weighs in with its residual only instead of dragging the score to 0.
pub fn pooled_accuracy(window: &SampleWindow, sets: &[ModeSet]) -> Result<Accuracy> {
    if window.len() < 2 {
        return Err(Error::WindowTooShort(window.len()));
    }
    let n = window.len() as f64;
    let mut sse = 0.0;
    let mut ss = 0.0;
    let mut scale = 0.0f64;
    for set in sets {
        let series = window.axis(set.axis);
        let mean = series.iter().sum::<f64>() / n;
        scale = scale.max(mean.abs());
        ss += series.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        sse += series
            .iter()
            .enumerate()
            .map(|(k, v)| (set.evaluate(window.time(k)) - v).powi(2))
            .sum::<f64>();
    }
    let rms = (ss / n).sqrt();
    if rms <= 1e-12 * (1.0 + scale) {
        return Ok(Accuracy {
            score: 1.0,
            degenerate: true,
        });
    }
    Ok(Accuracy {
        score: (1.0 - (sse / n).sqrt() / rms).clamp(0.0, 1.0),
        degenerate: false,
    })
}

/// Result of pairing a previous identification with a new one, by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeMatch {
    /// `(old_index, new_index)` pairs within tolerance.
    pub retained: Vec<(usize, usize)>,
    /// New modes with no partner.
    pub added: Vec<usize>,
    /// Old modes with no partner.
    pub dropped: Vec<usize>,
}

/// Default matching tolerance: 1.5 bins of a window of `span` seconds.
pub fn default_match_tolerance(span: f64) -> f64 {
    1.5 / span
}

/// Greedy nearest-frequency pairing of `old` and `new` frequencies.
pub fn match_frequencies(old: &[f64], new: &[f64], tol: f64) -> ModeMatch {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, fo) in old.iter().enumerate() {
        for (k, fnew) in new.iter().enumerate() {
            let d = (fo - fnew).abs();
            if d <= tol {
                candidates.push((d, i, k));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut old_used = vec![false; old.len()];
    let mut new_used = vec![false; new.len()];
    let mut retained = Vec::new();
    for (_, i, k) in candidates {
        if !old_used[i] && !new_used[k] {
            old_used[i] = true;
            new_used[k] = true;
            retained.push((i, k));
        }
    }
    retained.sort_unstable();
    ModeMatch {
        retained,
        added: (0..new.len()).filter(|&k| !new_used[k]).collect(),
        dropped: (0..old.len()).filter(|&i| !old_used[i]).collect(),
    }
}

pub fn match_modes(old: &ModeSet, new: &ModeSet, tol: f64) -> ModeMatch {
    let fo: Vec<f64> = old.modes.iter().map(|m| m.freq).collect();
    let fnew: Vec<f64> = new.modes.iter().map(|m| m.freq).collect();
    match_frequencies(&fo, &fnew, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_from(f: impl Fn(f64) -> f64, rate: f64, span: f64) -> SampleWindow {
        let n = (span * rate).floor() as usize + 1;
        let dt = 1.0 / rate;
        let series: Vec<f64> = (0..n).map(|k| f(k as f64 * dt)).collect();
        SampleWindow::from_axis(0.0, dt, 3, &series).unwrap()
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let w = window_from(|_| 0.7, 30.0, 20.0);
        let ms = identify(&w, 3, 0.02).unwrap();
        assert!(ms.modes.is_empty());
        assert!((ms.offset - 0.7).abs() < 1e-12);
    }

    #[test]
    fn gate_drops_weak_mode() {
        let w = window_from(
            |t| {
                0.3 * (2.0 * PI * 0.2 * t).sin()
                    + 0.1 * (2.0 * PI * 0.5 * t).sin()
                    + 0.004 * (2.0 * PI * 1.0 * t).sin()
            },
            30.0,
            20.0,
        );
        let ms = identify(&w, 3, 0.02).unwrap();
        assert_eq!(ms.modes.len(), 2);
        assert!(ms.modes.iter().all(|m| m.amplitude >= 0.006));
        // A 3rd mode survives a looser gate.
        let loose = identify(&w, 3, 0.005).unwrap();
        assert_eq!(loose.modes.len(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = window_from(|t| t, 10.0, 1.0);
        assert!(identify(&w, 3, 0.0).is_err());
        assert!(identify(&w, 3, 1.0).is_err());
        assert!(identify(&w, 6, 0.5).is_err());
        assert!(Spectrum::compute(&[1.0], 0.1).is_err());
    }

    #[test]
    fn empty_modes_score_zero() {
        let w = window_from(|t| (2.0 * PI * 0.25 * t).sin(), 30.0, 20.0);
        let series = w.axis(3);
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let ms = ModeSet::new(3, vec![], mean, 0.0);
        let acc = accuracy_score(&w, &ms).unwrap();
        assert_eq!(acc.score, 0.0);
        assert!(!acc.degenerate);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let w = window_from(|_| 2.0, 30.0, 2.0);
        let acc = accuracy_score(&w, &ModeSet::new(3, vec![], 0.0, 0.0)).unwrap();
        assert_eq!(acc.score, 1.0);
        assert!(acc.degenerate);
    }

    #[test]
    fn matching_examples() {
        let m = match_frequencies(&[0.20], &[0.21], 0.075);
        assert_eq!(m.retained, vec![(0, 0)]);
        assert!(m.added.is_empty() && m.dropped.is_empty());

        let m = match_frequencies(&[], &[0.5], 0.075);
        assert_eq!(m.added, vec![0]);

        let m = match_frequencies(&[0.2, 0.5], &[0.2, 0.9], 0.075);
        assert_eq!(m.retained, vec![(0, 0)]);
        assert_eq!(m.added, vec![1]);
        assert_eq!(m.dropped, vec![1]);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
