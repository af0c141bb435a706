//! Scenarios, closed-loop episodes, Monte Carlo batches and the prediction
//! study.

mod batch;
mod episode;
mod estimator;
mod prediction;
mod scenario;

pub use batch::{
    batch_seeds, read_episodes_csv, run_batch, run_batch_sequential, write_episodes_csv, Batch,
    BatchSummary, HistogramBin, BIN_DEG, TIMELY_WINDOW,
};
pub use episode::{
    episode_wave, run_episode, write_timeline_csv, Episode, EpisodeRecord, Outcome, TimelineRow,
    SUCCESS_TILT, TIMELINE_HEADER,
};
pub use estimator::DeckEstimator;
pub use prediction::{prediction_study, sensed_stream, write_prediction_csv, PredictionPoint, StudyConfig};
pub use scenario::{Controller, EstimatorConfig, Scenario, Sensing};
