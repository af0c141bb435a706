//! Monte Carlo batches of independent episodes and their summary statistics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{par, Result};

use super::episode::{run_episode, EpisodeRecord, Outcome};
use super::scenario::{Controller, Scenario};

/// Histogram bin width, degrees.
pub const BIN_DEG: f64 = 2.0;
const HIST_MAX_DEG: f64 = 90.0;
/// Landing delay counted as timely after the identification latch, seconds.
pub const TIMELY_WINDOW: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub count: usize,
}

/// Aggregate of a batch. Tilt statistics cover touchdowns on the pad;
/// fractions are taken over all episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub episodes: usize,
    pub touchdowns: usize,
    pub off_pad: usize,
    pub successes: usize,
    pub timeouts: usize,
    pub aborted: usize,
    pub histogram: Vec<HistogramBin>,
    pub within_10deg: f64,
    pub within_15deg: f64,
    pub within_20deg: f64,
    /// Nearest-rank 80th percentile of the touchdown tilt, radians.
    pub p80_tilt: Option<f64>,
    pub mean_tilt: Option<f64>,
    /// Share of successful landings that touched down within
    /// [`TIMELY_WINDOW`] of the identification latch.
    pub timely_fraction: Option<f64>,
    pub solves: usize,
    pub budget_limited: usize,
}

impl BatchSummary {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        let tilts: Vec<f64> = records
            .iter()
            .filter(|r| r.on_pad)
            .filter_map(|r| r.touchdown_tilt)
            .collect();
        let within = |deg: f64| {
            let lim = deg.to_radians();
            let k = tilts.iter().filter(|&&t| t < lim).count();
            if n == 0 {
                0.0
            } else {
                k as f64 / n as f64
            }
        };

        let n_bins = (HIST_MAX_DEG / BIN_DEG).round() as usize;
        let mut histogram: Vec<HistogramBin> = (0..n_bins)
            .map(|b| HistogramBin {
                lo_deg: b as f64 * BIN_DEG,
                hi_deg: (b + 1) as f64 * BIN_DEG,
                count: 0,
            })
            .collect();
        for t in &tilts {
            let b = ((t.to_degrees() / BIN_DEG).floor() as usize).min(n_bins - 1);
            histogram[b].count += 1;
        }

        let mut sorted = tilts.clone();
        sorted.sort_by(f64::total_cmp);
        let p80_tilt = (!sorted.is_empty()).then(|| {
            let rank = (0.8 * sorted.len() as f64).ceil() as usize;
            sorted[rank.max(1) - 1]
        });
        let mean_tilt =
            (!tilts.is_empty()).then(|| tilts.iter().sum::<f64>() / tilts.len() as f64);

        let successes: Vec<&EpisodeRecord> = records.iter().filter(|r| r.success).collect();
        let latched: Vec<f64> = successes
            .iter()
            .filter_map(|r| Some(r.t_touchdown? - r.t_fft_ready?))
            .collect();
        let timely_fraction = (!successes.is_empty()).then(|| {
            latched.iter().filter(|&&d| d <= TIMELY_WINDOW).count() as f64
                / successes.len() as f64
        });

        let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
        Self {
            episodes: n,
            touchdowns: count(Outcome::Touchdown),
            off_pad: records
                .iter()
                .filter(|r| r.outcome == Outcome::Touchdown && !r.on_pad)
                .count(),
            successes: successes.len(),
            timeouts: count(Outcome::Timeout),
            aborted: count(Outcome::Aborted),
            histogram,
            within_10deg: within(10.0),
            within_15deg: within(15.0),
            within_20deg: within(20.0),
            p80_tilt,
            mean_tilt,
            timely_fraction,
            solves: records.iter().map(|r| r.solves).sum(),
            budget_limited: records.iter().map(|r| r.budget_limited).sum(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub records: Vec<EpisodeRecord>,
    pub summary: BatchSummary,
}

/// Seeds `base, base + 1, ...` for `n` episodes.
pub fn batch_seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

fn collect(results: Vec<Result<EpisodeRecord>>) -> Result<Batch> {
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = BatchSummary::from_records(&records);
    Ok(Batch { records, summary })
}

/// Runs one episode per seed, in parallel when the `parallel` feature is on.
/// Records come back in seed order either way.
pub fn run_batch(sc: &Scenario, controller: Controller, seeds: &[u64]) -> Result<Batch> {
    sc.validate()?;
    let indexed: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    collect(par::map(&indexed, |&(i, s)| {
        run_episode(sc, controller, s, i, false).map(|e| e.record)
    }))
}

/// Same as [`run_batch`] on the calling thread only.
pub fn run_batch_sequential(
    sc: &Scenario,
    controller: Controller,
    seeds: &[u64],
) -> Result<Batch> {
    sc.validate()?;
    let indexed: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    collect(par::map_sequential(&indexed, |&(i, s)| {
        run_episode(sc, controller, s, i, false).map(|e| e.record)
    }))
}

pub fn write_episodes_csv<W: Write>(writer: W, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episodes_csv<R: Read>(reader: R) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize, tilt: Option<f64>, ready: Option<f64>, td: Option<f64>) -> EpisodeRecord {
        EpisodeRecord {
            index: i,
            seed: i as u64,
            controller: Controller::MpcNe,
            outcome: if tilt.is_some() { Outcome::Touchdown } else { Outcome::Timeout },
            timeline: None,
            t_fft_ready: ready,
            t_land_start: ready,
            t_touchdown: td,
            touchdown_tilt: tilt,
            lateral_offset: tilt.map(|_| 0.0),
            relative_vz: tilt.map(|_| -1.0),
            on_pad: tilt.is_some(),
            success: tilt.is_some_and(|t| t < 0.35),
            solves: 10,
            budget_limited: 1,
        }
    }

    #[test]
    fn single_record_summary() {
        let s = BatchSummary::from_records(&[record(0, Some(0.1), Some(20.0), Some(40.0))]);
        assert_eq!(s.episodes, 1);
        assert_eq!(s.within_10deg, 1.0);
        assert_eq!(s.p80_tilt, Some(0.1));
        assert_eq!(s.timely_fraction, Some(1.0));
        assert_eq!(s.histogram[2].count, 1);
    }

    #[test]
    fn fractions_nested() {
        let recs = vec![
            record(0, Some(0.05), Some(10.0), Some(30.0)),
            record(1, Some(0.2), Some(10.0), Some(70.0)),
            record(2, Some(0.3), None, Some(90.0)),
            record(3, None, None, None),
        ];
        let s = BatchSummary::from_records(&recs);
        assert_eq!(s.within_10deg, 0.25);
        assert_eq!(s.within_15deg, 0.5);
        assert_eq!(s.within_20deg, 0.75);
        assert_eq!(s.timeouts, 1);
        assert_eq!(s.timely_fraction, Some(1.0 / 3.0));
        assert_eq!(s.p80_tilt, Some(0.3));
    }

    #[test]
    fn csv_roundtrip() {
        let recs = vec![
            record(0, Some(0.05), Some(10.0), Some(30.0)),
            record(1, None, None, None),
        ];
        let mut buf = Vec::new();
        write_episodes_csv(&mut buf, &recs).unwrap();
        assert_eq!(read_episodes_csv(buf.as_slice()).unwrap(), recs);
    }
}
