//! SINR of one cellular user and one D2D pair per cell, with the pair
//! reusing either the uplink or the downlink resource. Samples are taken in
//! the first cell, which is the centre of the multi-cell layout.
//!
//! Sample names:
//! - `d2d_ul_db`, `bs_ul_db`: uplink sharing, every UE at fixed power.
//! - `d2d_ul_pc_db`, `bs_ul_pc_db`: uplink sharing, every UE on open-loop
//!   power control.
//! - `d2d_ul_dfix_db`: uplink, cellular users on open loop, D2D fixed.
//! - `d2d_dl_db`, `cue_dl_db`: downlink sharing, D2D at fixed power.
//! - `d2d_dl_pc_db`, `cue_dl_pc_db`: downlink sharing, D2D on open loop.

use d2d_core::power_control::ofpc_power_dbm;
use d2d_core::propagation::{drop_users, Node, PropagationParams, Receiver, UserDrop};
use d2d_core::units::dbm_to_mw;
use rand::Rng;

use super::{layout, shadowed_loss_db, sinr_db, winner_drop};
use crate::config::SinrDistConfig;
use crate::{DropRecord, SimError};

struct Powers {
    cellular: Vec<f64>,
    d2d: Vec<f64>,
}

fn uplink(drop: &UserDrop, p: &Powers, n_bs: f64, n_ue: f64) -> (f64, f64) {
    let (tx, rx, cue, bs) = (Node::D2dTx(0), Node::D2dRx(0), Node::Cellular(0), Node::Bs(0));
    let at_rx: f64 = (0..drop.cellular.len()).map(|c| p.cellular[c] * drop.gain(Node::Cellular(c), rx)).sum::<f64>()
        + (1..drop.d2d_tx.len()).map(|j| p.d2d[j] * drop.gain(Node::D2dTx(j), rx)).sum::<f64>();
    let d2d = sinr_db(p.d2d[0] * drop.gain(tx, rx), at_rx, n_ue);
    let at_bs: f64 = (0..drop.d2d_tx.len()).map(|j| p.d2d[j] * drop.gain(Node::D2dTx(j), bs)).sum::<f64>()
        + (1..drop.cellular.len()).map(|c| p.cellular[c] * drop.gain(Node::Cellular(c), bs)).sum::<f64>();
    let bs_sinr = sinr_db(p.cellular[0] * drop.gain(cue, bs), at_bs, n_bs);
    (d2d, bs_sinr)
}

fn downlink(drop: &UserDrop, p_bs: f64, d2d: &[f64], n_ue: f64) -> (f64, f64) {
    let (tx, rx, cue) = (Node::D2dTx(0), Node::D2dRx(0), Node::Cellular(0));
    let at_rx: f64 = (0..drop.n_cells()).map(|b| p_bs * drop.gain(Node::Bs(b), rx)).sum::<f64>()
        + (1..drop.d2d_tx.len()).map(|j| d2d[j] * drop.gain(Node::D2dTx(j), rx)).sum::<f64>();
    let at_cue: f64 = (1..drop.n_cells()).map(|b| p_bs * drop.gain(Node::Bs(b), cue)).sum::<f64>()
        + (0..drop.d2d_tx.len()).map(|j| d2d[j] * drop.gain(Node::D2dTx(j), cue)).sum::<f64>();
    (
        sinr_db(d2d[0] * drop.gain(tx, rx), at_rx, n_ue),
        sinr_db(p_bs * drop.gain(Node::Bs(0), cue), at_cue, n_ue),
    )
}

pub fn drop_record<R: Rng + ?Sized>(
    cfg: &SinrDistConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<DropRecord, SimError> {
    let mut dc = winner_drop(layout(cfg.radius_m, cfg.multi_cell), 1, 1, cfg.pair_distance_m);
    dc.anchor_fraction = cfg.anchor_fraction;
    let drop = drop_users(rng, &dc, prop)?;
    let n_bs = prop.noise_power_mw(Receiver::Bs);
    let n_ue = prop.noise_power_mw(Receiver::Ue);
    let n = drop.n_cells();

    let fixed = dbm_to_mw(cfg.ue_power_dbm);
    let ofpc_cellular: Vec<f64> = (0..n)
        .map(|c| dbm_to_mw(ofpc_power_dbm(&cfg.ofpc, shadowed_loss_db(drop.link(Node::Cellular(c), Node::Bs(c))))))
        .collect();
    let ofpc_d2d: Vec<f64> = (0..n)
        .map(|j| dbm_to_mw(ofpc_power_dbm(&cfg.ofpc, shadowed_loss_db(drop.link(Node::D2dTx(j), Node::D2dRx(j))))))
        .collect();

    let mut rec = DropRecord::default();
    let (d, b) = uplink(&drop, &Powers { cellular: vec![fixed; n], d2d: vec![fixed; n] }, n_bs, n_ue);
    rec.push("d2d_ul_db", d);
    rec.push("bs_ul_db", b);
    let (d, b) = uplink(&drop, &Powers { cellular: ofpc_cellular.clone(), d2d: ofpc_d2d.clone() }, n_bs, n_ue);
    rec.push("d2d_ul_pc_db", d);
    rec.push("bs_ul_pc_db", b);
    let (d, _) = uplink(&drop, &Powers { cellular: ofpc_cellular, d2d: vec![fixed; n] }, n_bs, n_ue);
    rec.push("d2d_ul_dfix_db", d);

    let p_bs = dbm_to_mw(cfg.bs_power_dbm);
    let (d, c) = downlink(&drop, p_bs, &vec![fixed; n], n_ue);
    rec.push("d2d_dl_db", d);
    rec.push("cue_dl_db", c);
    let (d, c) = downlink(&drop, p_bs, &ofpc_d2d, n_ue);
    rec.push("d2d_dl_pc_db", d);
    rec.push("cue_dl_pc_db", c);
    Ok(rec)
}
