//! Command-line front end: single episodes, Monte Carlo batches, the
//! prediction study and offline spectra.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use deckland::harness::{
    batch_seeds, prediction_study, run_batch, run_batch_sequential, run_episode,
    sensed_stream, write_episodes_csv, write_prediction_csv, write_timeline_csv, Controller,
    Scenario, Sensing, StudyConfig,
};
use deckland::pose_stream::{read_pose_csv_file, PoseBuffer, PoseSample};
use deckland::spectral::{accuracy_score, identify, Spectrum};
use deckland::TILT_AXES;

#[derive(Parser)]
#[command(name = "deckland", version, about = "Landing on an oscillating deck: simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name or path to a JSON scenario file.
    #[arg(long, default_value = "harsh")]
    scenario: String,
    /// Override the scenario's sensing: vision, imu or oracle.
    #[arg(long)]
    sensing: Option<Sensing>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut sc = Scenario::load(&self.scenario)
            .with_context(|| format!("loading scenario '{}'", self.scenario))?;
        if let Some(s) = self.sensing {
            sc.sensing = s;
        }
        Ok(sc)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its timeline.
    Episode {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mpc_ne")]
        controller: Controller,
    },
    /// Run a Monte Carlo batch with seeds `seed..seed+n`.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mpc_ne")]
        controller: Controller,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Run on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Forecast error against the true tilt per horizon.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Comma-separated horizons in seconds, each at most 1.
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1.0")]
        horizons: Vec<f64>,
        #[arg(long, default_value_t = 90.0)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        warmup: f64,
    },
    /// Spectrum and identified modes of the tilt axes over one window.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Pose CSV (`t,b1..b6`) to analyse instead of a simulated stream.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Simulated observation time, seconds.
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn episode(common: &Common, controller: Controller) -> Result<()> {
    let sc = common.scenario()?;
    let dir = common.out_dir()?;
    let mut ep = run_episode(&sc, controller, common.seed, 0, true)?;
    let timeline = dir.join("timeline.csv");
    write_timeline_csv(create(dir, "timeline.csv")?, &ep.timeline)?;
    ep.record.timeline = Some(timeline.display().to_string());
    serde_json::to_writer_pretty(create(dir, "episode.json")?, &ep.record)?;
    let r = &ep.record;
    match (r.t_touchdown, r.touchdown_tilt) {
        (Some(t), Some(tilt)) => println!(
            "{}: touchdown at {t:.2} s, tilt {:.2} deg, offset {:.3} m, success {}",
            sc.name,
            tilt.to_degrees(),
            r.lateral_offset.unwrap_or(f64::NAN),
            r.success
        ),
        _ => println!("{}: no touchdown ({:?})", sc.name, r.outcome),
    }
    Ok(())
}

fn batch(common: &Common, controller: Controller, n: usize, sequential: bool) -> Result<()> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let sc = common.scenario()?;
    let dir = common.out_dir()?;
    let seeds = batch_seeds(common.seed, n);
    let started = Instant::now();
    let batch = if sequential {
        run_batch_sequential(&sc, controller, &seeds)?
    } else {
        run_batch(&sc, controller, &seeds)?
    };
    write_episodes_csv(create(dir, "episodes.csv")?, &batch.records)?;
    fs::write(dir.join("summary.json"), batch.summary.to_json()?)?;
    let s = &batch.summary;
    println!(
        "{} {} n={}: within 10/15/20 deg {:.2}/{:.2}/{:.2}, successes {}, timeouts {}, {:.1} s",
        sc.name,
        controller,
        s.episodes,
        s.within_10deg,
        s.within_15deg,
        s.within_20deg,
        s.successes,
        s.timeouts,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn predict(common: &Common, horizons: Vec<f64>, duration: f64, warmup: f64) -> Result<()> {
    let sc = common.scenario()?;
    let dir = common.out_dir()?;
    let sensing = common.sensing.unwrap_or(match sc.sensing {
        Sensing::Oracle => Sensing::Vision,
        s => s,
    });
    let mut cfg = StudyConfig::new(sensing, horizons, common.seed);
    cfg.duration = duration;
    cfg.warmup = warmup;
    let points = prediction_study(&sc, &cfg)?;
    write_prediction_csv(create(dir, "prediction.csv")?, &points)?;
    for p in &points {
        println!("horizon {:.2} s: rmse {:.5} rad ({} samples)", p.horizon, p.rmse, p.samples);
    }
    Ok(())
}

fn spectrum(common: &Common, input: Option<&Path>, duration: f64) -> Result<()> {
    let sc = common.scenario()?;
    let dir = common.out_dir()?;
    let sensing = common.sensing.unwrap_or(sc.sensing);
    let rate = match sensing {
        Sensing::Imu => sc.imu.rate,
        _ => sc.vision.rate,
    };
    let samples: Vec<PoseSample> = match input {
        Some(path) => read_pose_csv_file(path)
            .with_context(|| format!("reading {}", path.display()))?,
        None => sensed_stream(&sc, sensing, common.seed, duration)?,
    };
    let mut buffer = PoseBuffer::new(f64::INFINITY);
    for s in samples {
        buffer.push(s)?;
    }
    let span = buffer.span();
    let Some(window) = buffer.resample(span, rate)?.ready() else {
        bail!("pose stream has gaps or is too short for a spectrum");
    };
    let mut modes = Vec::new();
    for axis in TILT_AXES {
        let spec = Spectrum::compute(&window.axis(axis), window.dt)?;
        spec.write_csv(create(dir, &format!("spectrum_b{}.csv", axis + 1))?)?;
        let set = identify(&window, axis, sc.estimator.gate)?;
        let acc = accuracy_score(&window, &set)?;
        println!("b{}: {} modes, accuracy {:.3}", axis + 1, set.len(), acc.score);
        for m in &set.modes {
            println!("  f {:.4} Hz  A {:.4}  phi {:+.3}", m.freq, m.amplitude, m.phase);
        }
        modes.push(set);
    }
    serde_json::to_writer_pretty(create(dir, "modes.json")?, &modes)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Episode { common, controller } => episode(&common, controller),
        Command::Batch {
            common,
            controller,
            n,
            sequential,
        } => batch(&common, controller, n, sequential),
        Command::Predict {
            common,
            horizons,
            duration,
            warmup,
        } => predict(&common, horizons, duration, warmup),
        Command::Spectrum {
            common,
            input,
            duration,
        } => spectrum(&common, input.as_deref(), duration),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
