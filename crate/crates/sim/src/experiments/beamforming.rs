//! Downlink sharing with a two-antenna base station. Four schemes are run
//! on every drop:
//!
//! - `joint`: leakage-aware beamformer and rate-optimal D2D power;
//! - `bf_only`: same beamformer, D2D at the largest feasible power;
//! - `pc_only`: fixed equal-weight beam, rate-optimal power;
//! - `none`: fixed beam, largest feasible power.
//!
//! A drop is kept only when every scheme admits at least one pair; the
//! rest are counted as `infeasible`. Samples: `sum_rate_<scheme>`,
//! `cellular_rate_joint`, `d2d_rate_joint`, `admitted_joint`.

use d2d_core::beamforming::{
    admit_sequentially, max_feasible_power, optimal_d2d_power, slnr_beamformer_multi, Admission, MultiPairChannel,
    Vec2,
};
use d2d_core::propagation::{drop_users, Node, PropagationParams, Receiver, UserDrop};
use d2d_core::units::{db_to_linear, dbm_to_mw};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{layout, winner_drop};
use crate::config::BeamformingConfig;
use crate::{DropRecord, SimError};

/// Per-antenna channel from the base station: the link's large-scale
/// amplitude times independent unit-power complex Gaussian coefficients.
fn miso<R: Rng + ?Sized>(drop: &UserDrop, to: Node, rng: &mut R) -> Vec2 {
    let amp = drop.link(Node::Bs(0), to).large_scale_gain().sqrt();
    let mut coeff = || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * (amp / std::f64::consts::SQRT_2)
    };
    [coeff(), coeff()]
}

pub fn channel<R: Rng + ?Sized>(
    cfg: &BeamformingConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<MultiPairChannel, SimError> {
    let drop = drop_users(rng, &winner_drop(layout(cfg.radius_m, false), 1, cfg.n_pairs, cfg.pair_distance_m), prop)?;
    let n = cfg.n_pairs;
    let h_c = miso(&drop, Node::Cellular(0), rng);
    let h_d = (0..n).map(|m| miso(&drop, Node::D2dRx(m), rng)).collect();
    let amp = |a, b| drop.link(a, b).amplitude();
    Ok(MultiPairChannel {
        h_c,
        h_d,
        h_pair: (0..n).map(|j| (0..n).map(|m| amp(Node::D2dTx(j), Node::D2dRx(m))).collect()).collect(),
        h_dc: (0..n).map(|j| amp(Node::D2dTx(j), Node::Cellular(0))).collect(),
        p_bs: dbm_to_mw(cfg.p_bs_dbm),
        noise: prop.noise_power_mw(Receiver::Ue),
        beta_c: db_to_linear(cfg.beta_c_db),
        beta_d: db_to_linear(cfg.beta_d_db),
        p_max: dbm_to_mw(cfg.p_max_dbm),
    })
}

pub struct SchemeRates {
    pub joint: Admission,
    pub bf_only: Admission,
    pub pc_only: Admission,
    pub none: Admission,
}

pub fn run_schemes(ch: &MultiPairChannel) -> Result<SchemeRates, SimError> {
    let w_slnr = slnr_beamformer_multi(&ch.h_c, &ch.h_d, ch.noise / ch.p_bs)?;
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let w_fixed = [s, s];
    Ok(SchemeRates {
        joint: admit_sequentially(ch, &w_slnr, optimal_d2d_power),
        bf_only: admit_sequentially(ch, &w_slnr, max_feasible_power),
        pc_only: admit_sequentially(ch, &w_fixed, optimal_d2d_power),
        none: admit_sequentially(ch, &w_fixed, max_feasible_power),
    })
}

pub fn drop_record<R: Rng + ?Sized>(
    cfg: &BeamformingConfig,
    prop: &PropagationParams,
    rng: &mut R,
) -> Result<DropRecord, SimError> {
    if cfg.n_pairs == 0 {
        return Err(SimError::Invalid("beamforming needs at least one D2D pair".into()));
    }
    let ch = channel(cfg, prop, rng)?;
    let r = run_schemes(&ch)?;
    let mut rec = DropRecord::default();
    let any = |a: &Admission| a.admitted.iter().any(|&x| x);
    if !(any(&r.joint) && any(&r.bf_only) && any(&r.pc_only) && any(&r.none)) {
        rec.count("infeasible");
        return Ok(rec);
    }
    rec.push("sum_rate_joint", r.joint.sum_rate());
    rec.push("sum_rate_bf_only", r.bf_only.sum_rate());
    rec.push("sum_rate_pc_only", r.pc_only.sum_rate());
    rec.push("sum_rate_none", r.none.sum_rate());
    rec.push("cellular_rate_joint", r.joint.cellular_rate);
    rec.push("d2d_rate_joint", r.joint.d2d_rates.iter().sum());
    rec.push("admitted_joint", r.joint.admitted.iter().filter(|&&x| x).count() as f64);
    Ok(rec)
}
