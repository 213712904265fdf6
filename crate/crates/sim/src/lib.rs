//! Monte Carlo driver for the D2D experiments: configuration, per-drop
//! random streams, parallel execution and CSV/JSON output.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub mod config;
pub mod emit;
pub mod experiments;
pub mod result;
pub mod stats;

pub use config::SimConfig;
pub use result::{DropRecord, MonteCarloResult, Table};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Empty(String),
    #[error(transparent)]
    Propagation(#[from] d2d_core::propagation::PropagationError),
    #[error(transparent)]
    Auction(#[from] d2d_core::comb_auction::AuctionError),
    #[error(transparent)]
    Lifetime(#[from] d2d_core::lifetime_game::LifetimeError),
    #[error(transparent)]
    Beamforming(#[from] d2d_core::beamforming::BeamformingError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SinrDist,
    ModeSelect,
    ThresholdPc,
    Beamforming,
    Auction,
    Scheduling,
    Lifetime,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::SinrDist,
        Self::ModeSelect,
        Self::ThresholdPc,
        Self::Beamforming,
        Self::Auction,
        Self::Scheduling,
        Self::Lifetime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SinrDist => "sinr_dist",
            Self::ModeSelect => "mode_select",
            Self::ThresholdPc => "threshold_pc",
            Self::Beamforming => "beamforming",
            Self::Auction => "auction",
            Self::Scheduling => "scheduling",
            Self::Lifetime => "lifetime",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SimError::Invalid(format!("unknown experiment kind '{s}'")))
    }
}

/// Independent random stream of one drop.
pub fn drop_rng(seed: u64, drop: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(drop as u64);
    rng
}

/// Runs `f` for every drop in parallel and returns the records in drop
/// order. `workers` pins the thread count; `None` uses rayon's default pool.
pub fn run_drops<F>(seed: u64, drops: usize, workers: Option<usize>, f: F) -> Result<Vec<DropRecord>, SimError>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<DropRecord, SimError> + Sync,
{
    let body = || (0..drops).into_par_iter().map(|i| f(i, &mut drop_rng(seed, i))).collect();
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(body),
        None => body(),
    }
}

/// Runs one experiment end to end.
pub fn run_experiment(
    kind: ExperimentKind,
    cfg: &SimConfig,
    seed: u64,
    drops: usize,
    workers: Option<usize>,
) -> Result<MonteCarloResult, SimError> {
    if drops == 0 {
        return Err(SimError::Invalid("drop count must be at least 1".into()));
    }
    cfg.propagation.validate()?;
    experiments::run(kind, cfg, seed, drops, workers)
}
