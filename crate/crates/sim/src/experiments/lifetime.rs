//! Battery lifetime of D2D pairs under the priced resource auction, random
//! single-channel placement and, for small systems, exhaustive search.
//!
//! Samples, one per drop and scheme (`auction`, `random`, `centralized`):
//! `mean_lifetime_<scheme>_h` over pairs, `min_lifetime_<scheme>_h` (the
//! first pair to run flat) and `cellular_rate_<scheme>` averaged over
//! channels. Counters: `infeasible_<scheme>`. The first
//! drop also emits the `assignment` table of the auction.

use d2d_core::lifetime_game::{
    cellular_rates, centralized_allocation, random_single_channel, run_resource_auction, BatteryModel, GameContext,
    LifetimeError, PowerMatrix, ResourceAuctionConfig, CENTRAL_MAX_CHANNELS, CENTRAL_MAX_PAIRS,
};
use d2d_core::propagation::{drop_users, ChannelModel, DropConfig, Layout, Node};
use rand::Rng;

use crate::config::LifetimeConfig;
use crate::stats::mean;
use crate::{DropRecord, SimError, Table};

pub fn battery(cfg: &LifetimeConfig) -> BatteryModel {
    BatteryModel {
        capacity_ah: cfg.capacity_ah,
        peukert: cfg.peukert,
        voltage_v: cfg.voltage_v,
        circuit_power_mw: cfg.circuit_power_mw,
    }
}

pub fn context<R: Rng + ?Sized>(cfg: &LifetimeConfig, rng: &mut R) -> Result<GameContext, SimError> {
    let dc = DropConfig {
        layout: Layout::SingleCell { radius_m: cfg.radius_m },
        cellular_per_cell: cfg.n_cellular,
        pairs_per_cell: cfg.n_pairs,
        pair_distance_m: cfg.pair_distance_m,
        anchor_fraction: None,
        channel: ChannelModel::PowerLaw { exponent: cfg.path_loss_exponent },
    };
    let drop = drop_users(rng, &dc, &Default::default())?;
    let g = |a, b| drop.gain(a, b);
    let (n_c, n_d) = (cfg.n_cellular, cfg.n_pairs);
    Ok(GameContext {
        noise: cfg.noise_mw,
        rate_target: cfg.rate_target,
        p_cellular: vec![cfg.cellular_power_mw; n_c],
        g_pair: (0..n_d).map(|i| g(Node::D2dTx(i), Node::D2dRx(i))).collect(),
        g_cross: (0..n_d)
            .map(|j| (0..n_d).map(|i| if i == j { 0.0 } else { g(Node::D2dTx(j), Node::D2dRx(i)) }).collect())
            .collect(),
        g_cell_rx: (0..n_c).map(|c| (0..n_d).map(|i| g(Node::Cellular(c), Node::D2dRx(i))).collect()).collect(),
        g_cell_bs: (0..n_c).map(|c| g(Node::Cellular(c), Node::Bs(0))).collect(),
        g_pair_bs: (0..n_d).map(|i| g(Node::D2dTx(i), Node::Bs(0))).collect(),
    })
}

pub fn pair_lifetimes(battery: &BatteryModel, powers: &PowerMatrix) -> Vec<f64> {
    powers.iter().map(|row| battery.lifetime_for_tx_h(row.iter().sum())).collect()
}

/// Whether an allocator error means "no feasible allocation on this drop"
/// rather than a bug or bad input.
fn is_infeasible(e: &LifetimeError) -> bool {
    matches!(e, LifetimeError::InfeasibleSharing { .. } | LifetimeError::NoFeasibleCell { .. } | LifetimeError::RoundCap { .. })
}

fn record_scheme(
    rec: &mut DropRecord,
    ctx: &GameContext,
    battery: &BatteryModel,
    powers: &PowerMatrix,
    names: [&'static str; 3],
) {
    let life = pair_lifetimes(battery, powers);
    rec.push(names[0], life.iter().copied().fold(f64::INFINITY, f64::min));
    rec.push(names[1], mean(&life));
    rec.push(names[2], mean(&cellular_rates(ctx, powers)));
}

pub fn drop_record<R: Rng + ?Sized>(cfg: &LifetimeConfig, rng: &mut R, with_table: bool) -> Result<DropRecord, SimError> {
    let ctx = context(cfg, rng)?;
    let battery = battery(cfg);
    let auction_cfg = ResourceAuctionConfig {
        price: cfg.price,
        exclusive_channels: cfg.exclusive_channels,
        single_channel: cfg.single_channel,
    };
    let mut rec = DropRecord::default();

    match run_resource_auction(&ctx, &auction_cfg) {
        Ok((powers, ledger)) => {
            record_scheme(&mut rec, &ctx, &battery, &powers, ["min_lifetime_auction_h", "mean_lifetime_auction_h", "cellular_rate_auction"]);
            if with_table {
                let mut t = Table::new(&["pair", "channel", "power_mw", "rate"]);
                for (i, row) in powers.iter().enumerate() {
                    for (c, &p) in row.iter().enumerate() {
                        if ledger.assigned[i][c] {
                            t.push(vec![i.to_string(), c.to_string(), format!("{p:?}"), format!("{:?}", ledger.rates[i][c])]);
                        }
                    }
                }
                rec.table("assignment", t);
            }
        }
        Err(e) if is_infeasible(&e) => rec.count("infeasible_auction"),
        Err(e) => return Err(e.into()),
    }

    match random_single_channel(rng, &ctx) {
        Ok(powers) => {
            record_scheme(&mut rec, &ctx, &battery, &powers, ["min_lifetime_random_h", "mean_lifetime_random_h", "cellular_rate_random"])
        }
        Err(e) if is_infeasible(&e) => rec.count("infeasible_random"),
        Err(e) => return Err(e.into()),
    }

    if cfg.centralized {
        if cfg.n_pairs > CENTRAL_MAX_PAIRS || cfg.n_cellular > CENTRAL_MAX_CHANNELS {
            return Err(SimError::Invalid(format!(
                "centralized allocation supports at most {CENTRAL_MAX_PAIRS} pairs and {CENTRAL_MAX_CHANNELS} channels"
            )));
        }
        match centralized_allocation(&ctx, &battery)? {
            Some(powers) => record_scheme(
                &mut rec,
                &ctx,
                &battery,
                &powers,
                ["min_lifetime_centralized_h", "mean_lifetime_centralized_h", "cellular_rate_centralized"],
            ),
            None => rec.count("infeasible_centralized"),
        }
    }
    Ok(rec)
}
