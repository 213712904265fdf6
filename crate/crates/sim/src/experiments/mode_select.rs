//! End-to-end SINR of the centre-cell pair under each mode criterion.
//!
//! Direct mode reuses the uplink resource of the cellular users, so the
//! receiver hears every cellular user. Relayed mode gets its own resource:
//! the uplink hop hears the neighbouring cells' cellular users, the
//! downlink hop hears the neighbouring base stations, and the weaker hop
//! sets the end-to-end SINR.
//!
//! Samples: `sinr_cellular_db`, `sinr_force_d2d_db`, `sinr_pl_db`; counter
//! `pl_chose_d2d`.

use d2d_core::propagation::{drop_users, select_mode, Mode, ModeCriterion, Node, PropagationParams, Receiver};
use d2d_core::units::dbm_to_mw;
use rand::Rng;

use super::{layout, shadowed_loss_db, sinr_db, winner_drop};
use crate::config::ModeSelectConfig;
use crate::{DropRecord, SimError};

pub fn drop_record<R: Rng + ?Sized>(
    cfg: &ModeSelectConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<DropRecord, SimError> {
    let drop = drop_users(rng, &winner_drop(layout(cfg.radius_m, cfg.multi_cell), 1, 1, cfg.pair_distance_m), prop)?;
    let n_bs = prop.noise_power_mw(Receiver::Bs);
    let n_ue = prop.noise_power_mw(Receiver::Ue);
    let p_ue = dbm_to_mw(cfg.ue_power_dbm);
    let p_bs = dbm_to_mw(cfg.bs_power_dbm);
    let (src, dst, bs) = (Node::D2dTx(0), Node::D2dRx(0), Node::Bs(0));
    let n = drop.n_cells();

    let at_dst: f64 = (0..n).map(|c| p_ue * drop.gain(Node::Cellular(c), dst)).sum();
    let direct = sinr_db(p_ue * drop.gain(src, dst), at_dst, n_ue);

    let at_bs: f64 = (1..n).map(|c| p_ue * drop.gain(Node::Cellular(c), bs)).sum();
    let up = sinr_db(p_ue * drop.gain(src, bs), at_bs, n_bs);
    let at_dst_dl: f64 = (1..n).map(|b| p_bs * drop.gain(Node::Bs(b), dst)).sum();
    let down = sinr_db(p_bs * drop.gain(bs, dst), at_dst_dl, n_ue);
    let relayed = up.min(down);

    let mode = |criterion| {
        select_mode(
            shadowed_loss_db(drop.link(src, bs)),
            shadowed_loss_db(drop.link(dst, bs)),
            shadowed_loss_db(drop.link(src, dst)),
            criterion,
        )
    };
    let sinr = |m| if m == Mode::D2d { direct } else { relayed };

    let mut rec = DropRecord::default();
    rec.push("sinr_cellular_db", sinr(mode(ModeCriterion::Cellular)));
    rec.push("sinr_force_d2d_db", sinr(mode(ModeCriterion::ForceD2d)));
    let pl = mode(ModeCriterion::PathLoss);
    rec.push("sinr_pl_db", sinr(pl));
    if pl == Mode::D2d {
        rec.count("pl_chose_d2d");
    }
    Ok(rec)
}
