//! Slot-by-slot pricing scheduler over a single cell with `d^-n` path loss
//! and Rayleigh fading redrawn every slot.
//!
//! Samples, one per drop: `d2d_rate` and `cellular_rate` (per-slot rate
//! averaged over slots and users), `min_d2d_rate` (worst pair), and
//! `utility_variance` (across pairs, of the utility collected over the
//! run). The first drop also emits the `tti` table.

use d2d_core::propagation::{drop_users, ChannelModel, DropConfig, Layout, Node, UserDrop};
use d2d_core::stackelberg::{follower_rate, leader_rate, schedule_slot, PairGame, SchedulerState, SlotRecord};
use d2d_core::units::dbm_to_mw;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::SchedulingConfig;
use crate::stats::{mean, variance};
use crate::{DropRecord, SimError, Table};

pub struct SchedulingRun {
    pub records: Vec<SlotRecord>,
    pub state: SchedulerState,
    pub d2d_rate: Vec<f64>,
    pub cellular_rate: Vec<f64>,
}

impl SchedulingRun {
    pub fn utility_variance(&self) -> f64 {
        variance(&self.state.cumulative_utility)
    }
}

fn positions<R: Rng + ?Sized>(cfg: &SchedulingConfig, rng: &mut R) -> Result<UserDrop, SimError> {
    let dc = DropConfig {
        layout: Layout::SingleCell { radius_m: cfg.radius_m },
        cellular_per_cell: cfg.n_cellular,
        pairs_per_cell: cfg.n_pairs,
        pair_distance_m: cfg.pair_distance_m,
        anchor_fraction: None,
        channel: ChannelModel::PowerLaw { exponent: cfg.path_loss_exponent },
    };
    // Propagation parameters are unused by power-law drops.
    Ok(drop_users(rng, &dc, &Default::default())?)
}

/// Runs one drop with the fairness coefficient in `cfg`. Fading draws do not
/// depend on scheduling decisions, so two runs that differ only in the
/// fairness coefficient see identical channels.
pub fn simulate<R: Rng + ?Sized>(cfg: &SchedulingConfig, rng: &mut R) -> Result<SchedulingRun, SimError> {
    if cfg.n_cellular == 0 || cfg.n_pairs == 0 {
        return Err(SimError::Invalid("scheduling needs at least one channel and one pair".into()));
    }
    let drop = positions(cfg, rng)?;
    let (n_k, n_d) = (cfg.n_cellular, cfg.n_pairs);
    let bs = Node::Bs(0);
    let large = |a, b| drop.link(a, b).large_scale_gain();
    let l_ke: Vec<f64> = (0..n_k).map(|k| large(Node::Cellular(k), bs)).collect();
    let l_ki: Vec<Vec<f64>> =
        (0..n_k).map(|k| (0..n_d).map(|i| large(Node::Cellular(k), Node::D2dRx(i))).collect()).collect();
    let l_ie: Vec<f64> = (0..n_d).map(|i| large(Node::D2dTx(i), bs)).collect();
    let l_ii: Vec<f64> = (0..n_d).map(|i| large(Node::D2dTx(i), Node::D2dRx(i))).collect();

    let noise = dbm_to_mw(-174.0 + 10.0 * cfg.bandwidth_hz.log10());
    let p_k = dbm_to_mw(cfg.cellular_power_dbm);
    let (p_min, p_max) = (dbm_to_mw(cfg.d2d_min_dbm), dbm_to_mw(cfg.d2d_max_dbm));

    let mut state = SchedulerState::new(n_d, cfg.fairness);
    let mut records = Vec::with_capacity(cfg.slots * n_k.min(n_d));
    let mut d2d_sum = vec![0.0; n_d];
    let mut cell_sum = vec![0.0; n_k];
    for _ in 0..cfg.slots {
        let mut fade = || -> f64 { Exp1.sample(rng) };
        let g_ke: Vec<f64> = l_ke.iter().map(|l| l * fade()).collect();
        let g_ki: Vec<Vec<f64>> = l_ki.iter().map(|row| row.iter().map(|l| l * fade()).collect()).collect();
        let g_ie: Vec<f64> = l_ie.iter().map(|l| l * fade()).collect();
        let g_ii: Vec<f64> = l_ii.iter().map(|l| l * fade()).collect();
        let games: Vec<Vec<PairGame>> = (0..n_d)
            .map(|i| {
                (0..n_k)
                    .map(|k| PairGame {
                        g_ke: g_ke[k],
                        g_ki: g_ki[k][i],
                        g_ie: g_ie[i],
                        g_ii: g_ii[i],
                        p_k,
                        noise,
                        beta: cfg.beta,
                        p_min,
                        p_max,
                    })
                    .collect()
            })
            .collect();
        let slot = schedule_slot(&games, &mut state);
        let mut served = vec![false; n_k];
        for r in &slot {
            let g = &games[r.pair][r.channel];
            d2d_sum[r.pair] += follower_rate(g, r.power);
            cell_sum[r.channel] += leader_rate(g, r.power);
            served[r.channel] = true;
        }
        for k in (0..n_k).filter(|&k| !served[k]) {
            cell_sum[k] += (1.0 + p_k * g_ke[k] / noise).log2();
        }
        records.extend(slot);
    }
    let t = cfg.slots.max(1) as f64;
    Ok(SchedulingRun {
        records,
        state,
        d2d_rate: d2d_sum.into_iter().map(|s| s / t).collect(),
        cellular_rate: cell_sum.into_iter().map(|s| s / t).collect(),
    })
}

pub fn tti_table(records: &[SlotRecord]) -> Table {
    let mut t = Table::new(&["slot", "pair", "channel", "price", "power", "leader_utility", "follower_utility", "cost"]);
    for r in records {
        t.push(vec![
            r.slot.to_string(),
            r.pair.to_string(),
            r.channel.to_string(),
            format!("{:?}", r.price),
            format!("{:?}", r.power),
            format!("{:?}", r.leader_utility),
            format!("{:?}", r.follower_utility),
            format!("{:?}", r.cost),
        ]);
    }
    t
}

pub fn drop_record<R: Rng + ?Sized>(cfg: &SchedulingConfig, rng: &mut R, with_table: bool) -> Result<DropRecord, SimError> {
    let run = simulate(cfg, rng)?;
    let mut rec = DropRecord::default();
    rec.push("d2d_rate", mean(&run.d2d_rate));
    rec.push("min_d2d_rate", run.d2d_rate.iter().copied().fold(f64::INFINITY, f64::min));
    rec.push("cellular_rate", mean(&run.cellular_rate));
    rec.push("utility_variance", run.utility_variance());
    if with_table {
        rec.table("tti", tti_table(&run.records));
    }
    Ok(rec)
}
