//! Buffering of asynchronous deck pose observations and resampling onto the
//! uniform grid the FFT needs.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default retention of the pose buffer in seconds.
pub const DEFAULT_RETENTION: f64 = 25.0;
/// Default span of the identification window in seconds.
pub const DEFAULT_WINDOW_SPAN: f64 = 20.0;
/// Largest gap between consecutive samples tolerated inside a window.
pub const MAX_GAP: f64 = 0.5;
/// Round-off tolerance on sample times, seconds.
pub const TIME_EPS: f64 = 1e-9;

/// Timestamped 6-DOF deck pose in the world frame.
///
/// `b[0..3]` is the linear pose in meters, `b[3..6]` the angular pose in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub b: [f64; 6],
}

impl PoseSample {
    pub fn new(t: f64, b: [f64; 6]) -> Self {
        Self { t, b }
    }

    fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite pose sample at t={}",
                self.t
            )));
        }
        if self.b[3].abs() > FRAC_PI_2 || self.b[4].abs() > FRAC_PI_2 {
            return Err(Error::InvalidArgument(format!(
                "tilt out of range at t={}: ({}, {})",
                self.t, self.b[3], self.b[4]
            )));
        }
        Ok(())
    }
}

/// Uniformly spaced pose window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<[f64; 6]>,
}

impl SampleWindow {
    pub fn new(t0: f64, dt: f64, values: Vec<[f64; 6]>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("window spacing {dt}")));
        }
        if values.len() < 2 {
            return Err(Error::WindowTooShort(values.len()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite window value".into()));
        }
        Ok(Self { t0, dt, values })
    }

    /// Builds a window that only carries one axis of interest; the other
    /// axes are zero.
    pub fn from_axis(t0: f64, dt: f64, axis: usize, series: &[f64]) -> Result<Self> {
        let values = series
            .iter()
            .map(|&v| {
                let mut b = [0.0; 6];
                b[axis] = v;
                b
            })
            .collect();
        Self::new(t0, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn axis(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|b| b[j]).collect()
    }
}

/// Why a window could not be produced yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NotReady {
    /// The buffer covers less than the requested span.
    InsufficientSpan { available: f64, required: f64 },
    /// A dropout longer than [`MAX_GAP`] lies inside the span.
    Gap { start: f64, length: f64 },
}

/// Outcome of a resampling request. `NotReady` is an expected state while
/// data accumulates, not a failure.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowStatus {
    Ready(SampleWindow),
    NotReady(NotReady),
}

impl WindowStatus {
    pub fn ready(self) -> Option<SampleWindow> {
        match self {
            WindowStatus::Ready(w) => Some(w),
            WindowStatus::NotReady(_) => None,
        }
    }
}

/// Time-ordered pose buffer with bounded retention.
#[derive(Debug, Clone)]
pub struct PoseBuffer {
    samples: VecDeque<PoseSample>,
    retention: f64,
}

impl Default for PoseBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_RETENTION)
    }
}

impl PoseBuffer {
    pub fn new(retention: f64) -> Self {
        Self {
            samples: VecDeque::new(),
            retention,
        }
    }

    pub fn retention(&self) -> f64 {
        self.retention
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&PoseSample> {
        self.samples.front()
    }

    pub fn last(&self) -> Option<&PoseSample> {
        self.samples.back()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoseSample> {
        self.samples.iter()
    }

    /// Covered time span (newest minus oldest timestamp).
    pub fn span(&self) -> f64 {
        match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Appends a sample. Timestamps must be strictly increasing; samples
    /// older than the retention span relative to the newest are evicted.
    pub fn push(&mut self, sample: PoseSample) -> Result<()> {
        sample.validate()?;
        if let Some(last) = self.samples.back() {
            if sample.t <= last.t {
                return Err(Error::NonMonotonic {
                    t: sample.t,
                    last: last.t,
                });
            }
        }
        self.samples.push_back(sample);
        let horizon = sample.t - self.retention;
        while self.samples.front().is_some_and(|s| s.t < horizon) {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Linearly interpolated pose at `t`, or `None` outside the buffered
    /// range or across a gap longer than [`MAX_GAP`]. Times within
    /// [`TIME_EPS`] of either end snap to it, so grid points that drift by
    /// round-off still hit the newest sample.
    pub fn value_at(&self, t: f64) -> Option<[f64; 6]> {
        let first = self.samples.front()?;
        let last = self.samples.back()?;
        if t < first.t - TIME_EPS || t > last.t + TIME_EPS {
            return None;
        }
        let t = t.clamp(first.t, last.t);
        // index of first sample with time >= t
        let idx = self.samples.partition_point(|s| s.t < t);
        let hi = self.samples[idx];
        if hi.t == t {
            return Some(hi.b);
        }
        let lo = self.samples[idx - 1];
        if hi.t - lo.t > MAX_GAP {
            return None;
        }
        Some(lerp(&lo, &hi, t))
    }

    /// Resamples the most recent `span` seconds onto a grid at `rate` Hz
    /// ending at the newest sample. The grid has `floor(span * rate) + 1`
    /// points.
    pub fn resample(&self, span: f64, rate: f64) -> Result<WindowStatus> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("resample rate {rate}")));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidArgument(format!("resample span {span}")));
        }
        let n = (span * rate).floor() as usize + 1;
        if n < 2 {
            return Err(Error::WindowTooShort(n));
        }
        let (first, last) = match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => {
                return Ok(WindowStatus::NotReady(NotReady::InsufficientSpan {
                    available: 0.0,
                    required: span,
                }))
            }
        };
        let dt = 1.0 / rate;
        let t_end = last.t;
        let t0 = t_end - (n - 1) as f64 * dt;
        // allow a hair of rounding slack at the oldest grid node
        if first.t > t0 + 1e-9 * dt {
            return Ok(WindowStatus::NotReady(NotReady::InsufficientSpan {
                available: t_end - first.t,
                required: (n - 1) as f64 * dt,
            }));
        }

        let start = self.samples.partition_point(|s| s.t <= t0).saturating_sub(1);
        let mut values = Vec::with_capacity(n);
        let mut i = start;
        for k in 0..n {
            let t = if k + 1 == n { t_end } else { t0 + k as f64 * dt };
            while i + 1 < self.samples.len() && self.samples[i + 1].t < t {
                i += 1;
            }
            let lo = self.samples[i];
            if lo.t >= t || i + 1 >= self.samples.len() {
                values.push(lo.b);
                continue;
            }
            let hi = self.samples[i + 1];
            if hi.t - lo.t > MAX_GAP {
                return Ok(WindowStatus::NotReady(NotReady::Gap {
                    start: lo.t,
                    length: hi.t - lo.t,
                }));
            }
            values.push(if hi.t == t { hi.b } else { lerp(&lo, &hi, t) });
        }
        Ok(WindowStatus::Ready(SampleWindow::new(t0, dt, values)?))
    }

    /// Mean pose over the samples newer than `t_from`.
    pub fn mean_since(&self, t_from: f64) -> Option<[f64; 6]> {
        let mut acc = [0.0; 6];
        let mut n = 0usize;
        for s in self.samples.iter().rev().take_while(|s| s.t >= t_from) {
            for (a, v) in acc.iter_mut().zip(s.b.iter()) {
                *a += v;
            }
            n += 1;
        }
        (n > 0).then(|| acc.map(|a| a / n as f64))
    }
}

fn lerp(lo: &PoseSample, hi: &PoseSample, t: f64) -> [f64; 6] {
    let w = (t - lo.t) / (hi.t - lo.t);
    let mut out = [0.0; 6];
    for j in 0..6 {
        out[j] = (1.0 - w) * lo.b[j] + w * hi.b[j];
    }
    out
}

const CSV_HEADER: [&str; 7] = ["t", "b1", "b2", "b3", "b4", "b5", "b6"];

/// Reads a pose log with header `t,b1,b2,b3,b4,b5,b6`.
pub fn read_pose_csv<R: Read>(reader: R) -> Result<Vec<PoseSample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let trimmed: Vec<&str> = headers.iter().map(str::trim).collect();
    if trimmed != CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "pose log header must be {}, got {}",
            CSV_HEADER.join(","),
            trimmed.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut vals = [0.0; 7];
        for (k, field) in rec.iter().enumerate().take(7) {
            vals[k] = field.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("row {}: cannot parse '{field}'", line + 2))
            })?;
        }
        if rec.len() != 7 {
            return Err(Error::InvalidArgument(format!(
                "row {}: expected 7 fields, got {}",
                line + 2,
                rec.len()
            )));
        }
        out.push(PoseSample::new(
            vals[0],
            [vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]],
        ));
    }
    Ok(out)
}

pub fn read_pose_csv_file(path: impl AsRef<Path>) -> Result<Vec<PoseSample>> {
    read_pose_csv(std::fs::File::open(path)?)
}

pub fn write_pose_csv<W: Write>(writer: W, samples: &[PoseSample]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for s in samples {
        let mut row = vec![s.t.to_string()];
        row.extend(s.b.iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, v: f64) -> PoseSample {
        PoseSample::new(t, [v, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn push_to_empty() {
        let mut buf = PoseBuffer::default();
        buf.push(sample(0.0, 1.0)).unwrap();
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn equal_timestamp_rejected() {
        let mut buf = PoseBuffer::default();
        buf.push(sample(1.0, 0.0)).unwrap();
        assert!(matches!(
            buf.push(sample(1.0, 0.0)),
            Err(Error::NonMonotonic { .. })
        ));
        assert!(buf.push(sample(0.5, 0.0)).is_err());
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn eviction_matches_direct_count() {
        let mut buf = PoseBuffer::new(20.0);
        let times: Vec<f64> = (0..900).map(|i| i as f64 / 30.0).collect();
        for &t in &times {
            buf.push(sample(t, 0.0)).unwrap();
        }
        let newest = *times.last().unwrap();
        let expected = times.iter().filter(|&&t| t >= newest - 20.0).count();
        assert_eq!(buf.len(), expected);
        assert!((598..=602).contains(&buf.len()));
        assert!(buf.span() <= 20.0 + 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_overtilt() {
        let mut buf = PoseBuffer::default();
        assert!(buf.push(PoseSample::new(0.0, [f64::NAN, 0., 0., 0., 0., 0.])).is_err());
        assert!(buf.push(PoseSample::new(0.0, [0., 0., 0., 1.7, 0., 0.])).is_err());
    }

    #[test]
    fn linear_midpoint() {
        let mut buf = PoseBuffer::default();
        buf.push(sample(0.0, 0.0)).unwrap();
        buf.push(sample(0.4, 0.4)).unwrap();
        assert_eq!(buf.value_at(0.2).unwrap()[0], 0.2);
        let w = buf.resample(0.4, 5.0).unwrap().ready().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.values[1][0], 0.2);
    }

    #[test]
    fn on_grid_samples_reproduced() {
        let mut buf = PoseBuffer::default();
        for i in 0..=60 {
            let t = i as f64 * 0.1;
            buf.push(sample(t, (t * 1.3).sin())).unwrap();
        }
        let w = buf.resample(6.0, 10.0).unwrap().ready().unwrap();
        assert_eq!(w.len(), 61);
        for (k, b) in w.values.iter().enumerate() {
            let t = k as f64 * 0.1;
            assert!((b[0] - (t * 1.3).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn not_ready_when_short() {
        let mut buf = PoseBuffer::default();
        for i in 0..10 {
            buf.push(sample(i as f64 * 0.1, 0.0)).unwrap();
        }
        let st = buf.resample(20.0, 30.0).unwrap();
        assert!(matches!(
            st,
            WindowStatus::NotReady(NotReady::InsufficientSpan { .. })
        ));
        assert!(buf.resample(1.0, 0.0).is_err());
    }

    #[test]
    fn gap_invalidates_window() {
        let mut buf = PoseBuffer::default();
        for i in 0..100 {
            let t = i as f64 * 0.1 + if i >= 50 { 0.6 } else { 0.0 };
            buf.push(sample(t, 0.0)).unwrap();
        }
        let st = buf.resample(9.0, 10.0).unwrap();
        assert!(matches!(st, WindowStatus::NotReady(NotReady::Gap { .. })));
        assert!(buf.value_at(5.2).is_none());
    }

    #[test]
    fn csv_roundtrip_and_header_check() {
        let samples = vec![sample(0.0, 0.25), sample(0.5, -1.5)];
        let mut bytes = Vec::new();
        write_pose_csv(&mut bytes, &samples).unwrap();
        assert!(String::from_utf8_lossy(&bytes).starts_with("t,b1,b2,b3,b4,b5,b6"));
        assert_eq!(read_pose_csv(bytes.as_slice()).unwrap(), samples);
        assert!(read_pose_csv("x,y\n1,2\n".as_bytes()).is_err());
    }
}
