//! Threshold-based D2D power control against a fixed-power reference, with
//! the cellular user on open-loop power control.
//!
//! Samples: `power_saving`, `ee_pc`, `ee_fixed`, `p_d_dbm`, `sinr_bs_db`,
//! `sinr_d2d_db`. Counters: `feasible`, `clamped_low`, `clamped_high`,
//! `infeasible`.

use d2d_core::power_control::{
    d2d_power_adjusted, energy_efficiency, ofpc_power_dbm, power_saving, D2dPowerOutcome, PcLinkSet,
    ThresholdPcParams,
};
use d2d_core::propagation::{drop_users, Node, PropagationParams, Receiver, UserDrop};
use d2d_core::units::{db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm};
use rand::Rng;

use super::{layout, shadowed_loss_db, winner_drop};
use crate::config::ThresholdPcConfig;
use crate::{DropRecord, SimError};

/// Path-loss factor (with shadowing) and fast-fading gain of a link.
/// Antenna gains do not enter the power-control expressions.
fn split(drop: &UserDrop, a: Node, b: Node) -> (f64, f64) {
    let link = drop.link(a, b);
    (db_to_linear(shadowed_loss_db(link)), link.fading_power)
}

pub fn link_set(drop: &UserDrop, prop: &PropagationParams) -> PcLinkSet {
    let (cue, tx, rx, bs) = (Node::Cellular(0), Node::D2dTx(0), Node::D2dRx(0), Node::Bs(0));
    let (l_cb, h_cb) = split(drop, cue, bs);
    let (l_db, h_db) = split(drop, tx, bs);
    let (l_dd, h_dd) = split(drop, tx, rx);
    let (l_cd, h_cd) = split(drop, cue, rx);
    PcLinkSet {
        l_cb,
        h_cb,
        l_db,
        h_db,
        l_dd,
        h_dd,
        l_cd,
        h_cd,
        h_db_est: h_db,
        h_dd_est: h_dd,
        noise_bs_mw: prop.noise_power_mw(Receiver::Bs),
        noise_ue_mw: prop.noise_power_mw(Receiver::Ue),
    }
}

pub fn drop_record<R: Rng + ?Sized>(
    cfg: &ThresholdPcConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<DropRecord, SimError> {
    let drop = drop_users(rng, &winner_drop(layout(cfg.radius_m, false), 1, 1, cfg.pair_distance_m), prop)?;
    let links = link_set(&drop, prop).with_estimation_error(rng, cfg.est_error);
    let params = ThresholdPcParams::from_db(cfg.kappa_db, cfg.beta_b_db, cfg.beta_d_db, cfg.p_ue_max_dbm);
    params.validate().map_err(|e| SimError::Invalid(e.to_string()))?;

    let p_c = dbm_to_mw(ofpc_power_dbm(&cfg.ofpc, shadowed_loss_db(drop.link(Node::Cellular(0), Node::Bs(0)))));
    let p_fixed = dbm_to_mw(cfg.fixed_power_dbm);

    let mut rec = DropRecord::default();
    let outcome = d2d_power_adjusted(&links, &params);
    rec.count(match outcome {
        D2dPowerOutcome::Feasible(_) => "feasible",
        D2dPowerOutcome::ClampedLow(_) => "clamped_low",
        D2dPowerOutcome::ClampedHigh(_) => "clamped_high",
        D2dPowerOutcome::Infeasible => "infeasible",
    });
    // The pair defers when no power meets both targets.
    let Some(p_d) = outcome.power() else { return Ok(rec) };

    rec.push("power_saving", power_saving(p_fixed, p_d, p_c));
    rec.push("p_d_dbm", mw_to_dbm(p_d));
    let (sinr_c, sinr_d) = (links.cellular_sinr(p_c, p_d), links.d2d_sinr(p_c, p_d));
    rec.push("sinr_bs_db", linear_to_db(sinr_c));
    rec.push("sinr_d2d_db", linear_to_db(sinr_d));
    rec.push("ee_pc", energy_efficiency(sinr_c, sinr_d, p_c, p_d));
    rec.push(
        "ee_fixed",
        energy_efficiency(links.cellular_sinr(p_c, p_fixed), links.d2d_sinr(p_c, p_fixed), p_c, p_fixed),
    );
    Ok(rec)
}
