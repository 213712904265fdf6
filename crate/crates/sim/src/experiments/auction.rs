//! Downlink resource sharing decided by the reverse iterative auction,
//! against random placement and, optionally, the exact optimum.
//!
//! Samples: `sum_rate_auction`, `sum_rate_reduced`, `sum_rate_random`,
//! `sum_rate_optimal`, `eta`, `rounds`. The first drop also emits the
//! `price_trace` table.

use d2d_core::comb_auction::{
    default_increment, default_initial_prices, optimal_allocation, random_allocation, run_reverse_ica,
    system_efficiency, system_sum_rate, AuctionOutcome, AuctionParams, PriceEventKind, SharingInstance,
    ValuationTable, Variant,
};
use d2d_core::propagation::{drop_users, Node, PropagationParams, Receiver};
use d2d_core::units::dbm_to_mw;
use rand::Rng;

use super::{layout, winner_drop};
use crate::config::AuctionConfig;
use crate::{DropRecord, SimError, Table};

pub fn instance<R: Rng + ?Sized>(
    cfg: &AuctionConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<SharingInstance, SimError> {
    let drop = drop_users(
        rng,
        &winner_drop(layout(cfg.radius_m, false), cfg.n_cellular, cfg.n_pairs, cfg.pair_distance_m),
        prop,
    )?;
    let amp = |a, b| drop.link(a, b).amplitude();
    let (n_c, n_d) = (cfg.n_cellular, cfg.n_pairs);
    Ok(SharingInstance {
        p_bs: dbm_to_mw(cfg.p_bs_dbm),
        noise: prop.noise_power_mw(Receiver::Ue),
        h_bc: (0..n_c).map(|c| amp(Node::Bs(0), Node::Cellular(c))).collect(),
        h_bd: (0..n_d).map(|d| amp(Node::Bs(0), Node::D2dRx(d))).collect(),
        h_dc: (0..n_d).map(|d| (0..n_c).map(|c| amp(Node::D2dTx(d), Node::Cellular(c))).collect()).collect(),
        h_pair: (0..n_d).map(|j| (0..n_d).map(|d| amp(Node::D2dTx(j), Node::D2dRx(d))).collect()).collect(),
        p_d: vec![dbm_to_mw(cfg.p_d2d_dbm); n_d],
    })
}

pub fn auction(cfg: &AuctionConfig, table: &ValuationTable) -> Result<AuctionOutcome, SimError> {
    let delta = cfg.delta.unwrap_or_else(|| default_increment(table));
    let params = AuctionParams { fine_divisor: cfg.fine_divisor, ..AuctionParams::new(delta) };
    let p0 = default_initial_prices(table, delta);
    Ok(run_reverse_ica(table, &p0, &params)?)
}

pub fn price_trace(outcome: &AuctionOutcome) -> Table {
    let mut t = Table::new(&["round", "item", "price", "event"]);
    for e in &outcome.trace {
        let event = match e.event {
            PriceEventKind::Drop => "drop",
            PriceEventKind::Raise => "raise",
            PriceEventKind::Sold => "sold",
        };
        t.push(vec![e.round.to_string(), e.item.to_string(), format!("{:?}", e.price), event.to_string()]);
    }
    t
}

pub fn drop_record<R: Rng + ?Sized>(
    cfg: &AuctionConfig,
    prop: &PropagationParams,
    rng: &mut R,
    with_trace: bool,
) -> Result<DropRecord, SimError> {
    let inst = instance(cfg, prop, rng)?;
    let full = ValuationTable::from_instance(&inst, Variant::Full)?;
    let out = auction(cfg, &full)?;
    let reduced = auction(cfg, &ValuationTable::from_instance(&inst, Variant::Reduced)?)?;
    let random = random_allocation(rng, cfg.n_cellular, cfg.n_pairs);

    let mut rec = DropRecord::default();
    rec.push("sum_rate_auction", system_sum_rate(&inst, &out.allocation));
    rec.push("sum_rate_reduced", system_sum_rate(&inst, &reduced.allocation));
    rec.push("sum_rate_random", system_sum_rate(&inst, &random));
    rec.push("rounds", out.rounds as f64);
    if cfg.oracle {
        let opt = optimal_allocation(&full)?;
        rec.push("sum_rate_optimal", system_sum_rate(&inst, &opt.allocation));
        rec.push("eta", system_efficiency(&inst, &out.allocation, &opt.allocation));
    }
    if with_trace {
        rec.table("price_trace", price_trace(&out));
    }
    Ok(rec)
}
