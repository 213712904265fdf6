//! One module per experiment. Each exposes a `drop_record` function that
//! turns a random stream into the samples of one drop, and the dispatcher
//! here fans those out over drops.

use d2d_core::propagation::{ChannelModel, DropConfig, Layout, LinkGain};
use d2d_core::units::linear_to_db;
use serde::Serialize;

use crate::{run_drops, ExperimentKind, MonteCarloResult, SimConfig, SimError};

pub mod auction;
pub mod beamforming;
pub mod lifetime;
pub mod mode_select;
pub mod scheduling;
pub mod sinr_dist;
pub mod threshold_pc;

pub(crate) fn layout(radius_m: f64, multi_cell: bool) -> Layout {
    if multi_cell {
        Layout::Hex19 { radius_m }
    } else {
        Layout::SingleCell { radius_m }
    }
}

pub(crate) fn winner_drop(layout: Layout, cellular: usize, pairs: usize, pair_distance_m: f64) -> DropConfig {
    DropConfig {
        layout,
        cellular_per_cell: cellular,
        pairs_per_cell: pairs,
        pair_distance_m,
        anchor_fraction: None,
        channel: ChannelModel::Winner,
    }
}

/// Signal to interference plus noise in dB.
pub(crate) fn sinr_db(signal: f64, interference: f64, noise: f64) -> f64 {
    linear_to_db(signal / (interference + noise))
}

/// Path loss plus shadowing, without antenna gains or fading.
pub(crate) fn shadowed_loss_db(link: &LinkGain) -> f64 {
    link.path_loss_db + link.shadow_db
}

fn echo<T: Serialize>(prop: &impl Serialize, section: &T) -> Result<serde_json::Value, SimError> {
    Ok(serde_json::json!({ "propagation": prop, "experiment": section }))
}

pub(crate) fn run(
    kind: ExperimentKind,
    cfg: &SimConfig,
    seed: u64,
    drops: usize,
    workers: Option<usize>,
) -> Result<MonteCarloResult, SimError> {
    let (config, records) = match kind {
        ExperimentKind::SinrDist => {
            let c = &cfg.sinr_dist;
            let prop = cfg.propagation_with_bandwidth(c.bandwidth_hz);
            (echo(&prop, c)?, run_drops(seed, drops, workers, |_, rng| sinr_dist::drop_record(c, &prop, rng))?)
        }
        ExperimentKind::ModeSelect => {
            let c = &cfg.mode_select;
            let prop = cfg.propagation_with_bandwidth(c.bandwidth_hz);
            (echo(&prop, c)?, run_drops(seed, drops, workers, |_, rng| mode_select::drop_record(c, &prop, rng))?)
        }
        ExperimentKind::ThresholdPc => {
            let c = &cfg.threshold_pc;
            let prop = cfg.propagation_with_bandwidth(c.bandwidth_hz);
            (echo(&prop, c)?, run_drops(seed, drops, workers, |_, rng| threshold_pc::drop_record(c, &prop, rng))?)
        }
        ExperimentKind::Beamforming => {
            let c = &cfg.beamforming;
            let prop = cfg.propagation_with_bandwidth(c.bandwidth_hz);
            (echo(&prop, c)?, run_drops(seed, drops, workers, |_, rng| beamforming::drop_record(c, &prop, rng))?)
        }
        ExperimentKind::Auction => {
            let c = &cfg.auction;
            let prop = cfg.propagation_with_bandwidth(c.bandwidth_hz);
            (echo(&prop, c)?, run_drops(seed, drops, workers, |i, rng| auction::drop_record(c, &prop, rng, i == 0))?)
        }
        ExperimentKind::Scheduling => {
            let c = &cfg.scheduling;
            (
                serde_json::json!({ "experiment": c }),
                run_drops(seed, drops, workers, |i, rng| scheduling::drop_record(c, rng, i == 0))?,
            )
        }
        ExperimentKind::Lifetime => {
            let c = &cfg.lifetime;
            (
                serde_json::json!({ "experiment": c }),
                run_drops(seed, drops, workers, |i, rng| lifetime::drop_record(c, rng, i == 0))?,
            )
        }
    };
    Ok(MonteCarloResult::collect(kind, seed, config, records))
}
