//! Experiment orchestration: metrics, seeded end-to-end runs, ablations,
//! sweeps and their on-disk artifacts.

pub mod eval;
pub mod experiment;
pub mod metrics;
pub mod persist;
pub mod sweep;

use thiserror::Error;

use crate::discovery::DiscoveryError;
use crate::imitate::ImitateError;
use crate::reinforce::ReinforceError;
use crate::world::WorldError;

pub use eval::{evaluate_greedy, gate_success, Evaluation};
pub use experiment::{
    build_library, obtain_demo, run_experiment, run_seed, summarize, Aggregate, DemoConfig,
    ExperimentConfig, FinalScores, LearnerKind, RunArtifacts, RunOutput, RunRecord, Summary,
    DEFAULT_ID_EPSILON,
};
pub use metrics::{alignment_score, mean_stderr, median, relative_performance, MetricError};
pub use sweep::{set_param, sweep, sweep_csv, SweepAxis, SweepConfig, SweepPoint};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Imitate(#[from] ImitateError),
    #[error(transparent)]
    Reinforce(#[from] ReinforceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::Discovery(_) => "discovery",
            BenchError::World(_) => "world",
            BenchError::Imitate(_) => "imitate",
            BenchError::Reinforce(_) => "reinforce",
            BenchError::Metric(_) => "metric",
            BenchError::Io(_) => "io",
            BenchError::Json(_) => "json",
            BenchError::Csv(_) => "csv",
        }
    }
}
