//! Open-loop fractional power control and a threshold-based D2D power scheme
//! that keeps the cellular uplink above its SINR target.
//!
//! In the threshold scheme every link is described by a linear path-loss
//! factor `l_*` (greater than one) and a fast-fading power gain `h_*`, so the
//! received power over a link is `p * h / l`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{db_to_linear, dbm_to_mw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerControlError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

// ---------------------------------------------------------------------------
// Open-loop fractional power control
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfpcParams {
    pub p_max_dbm: f64,
    /// Target received power per resource block.
    pub p0_dbm: f64,
    /// Fraction of the path loss that is compensated.
    pub alpha: f64,
    pub resource_blocks: u32,
}

impl Default for OfpcParams {
    fn default() -> Self {
        Self { p_max_dbm: 24.0, p0_dbm: -78.0, alpha: 0.8, resource_blocks: 1 }
    }
}

/// Transmit power in dBm for a link with `path_loss_db` of loss.
pub fn ofpc_power_dbm(params: &OfpcParams, path_loss_db: f64) -> f64 {
    let open_loop = params.p0_dbm + 10.0 * (params.resource_blocks as f64).log10() + params.alpha * path_loss_db;
    params.p_max_dbm.min(open_loop)
}

// ---------------------------------------------------------------------------
// Threshold scheme
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPcParams {
    /// Linear interference margin, `> 1` for a usable scheme.
    pub kappa: f64,
    /// Linear SINR target of the cellular uplink.
    pub beta_bs: f64,
    /// Linear SINR target of the D2D link.
    pub beta_d2d: f64,
    pub p_ue_max_mw: f64,
}

impl ThresholdPcParams {
    pub fn from_db(kappa_db: f64, beta_bs_db: f64, beta_d2d_db: f64, p_ue_max_dbm: f64) -> Self {
        Self {
            kappa: db_to_linear(kappa_db),
            beta_bs: db_to_linear(beta_bs_db),
            beta_d2d: db_to_linear(beta_d2d_db),
            p_ue_max_mw: dbm_to_mw(p_ue_max_dbm),
        }
    }

    pub fn validate(&self) -> Result<(), PowerControlError> {
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(PowerControlError::InvalidParameter {
                name: "kappa",
                reason: format!("margin must exceed 1, got {}", self.kappa),
            });
        }
        for (name, v) in [("beta_bs", self.beta_bs), ("beta_d2d", self.beta_d2d), ("p_ue_max_mw", self.p_ue_max_mw)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PowerControlError::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        Ok(())
    }
}

impl Default for ThresholdPcParams {
    fn default() -> Self {
        Self::from_db(3.0, 10.0, 5.0, 23.0)
    }
}

/// Path-loss factors and fading gains of the four links around one cellular
/// user `c`, one D2D transmitter `d` and its receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcLinkSet {
    /// Cellular user to base station.
    pub l_cb: f64,
    pub h_cb: f64,
    /// D2D transmitter to base station.
    pub l_db: f64,
    pub h_db: f64,
    /// D2D transmitter to D2D receiver.
    pub l_dd: f64,
    pub h_dd: f64,
    /// Cellular user to D2D receiver.
    pub l_cd: f64,
    pub h_cd: f64,
    /// Estimates of `h_db` and `h_dd` as seen by the base station.
    pub h_db_est: f64,
    pub h_dd_est: f64,
    pub noise_bs_mw: f64,
    pub noise_ue_mw: f64,
}

impl PcLinkSet {
    /// Fills the estimated gains with `h * (1 + e)` for `e` uniform in
    /// `[-max_error, max_error]`.
    pub fn with_estimation_error<R: Rng + ?Sized>(mut self, rng: &mut R, max_error: f64) -> Self {
        let mut err = || if max_error > 0.0 { rng.random_range(-max_error..=max_error) } else { 0.0 };
        self.h_db_est = self.h_db * (1.0 + err());
        self.h_dd_est = self.h_dd * (1.0 + err());
        self
    }

    pub fn cellular_sinr(&self, p_c: f64, p_d: f64) -> f64 {
        p_c * self.h_cb / self.l_cb / (p_d * self.h_db / self.l_db + self.noise_bs_mw)
    }

    pub fn d2d_sinr(&self, p_c: f64, p_d: f64) -> f64 {
        p_d * self.h_dd / self.l_dd / (p_c * self.h_cd / self.l_cd + self.noise_ue_mw)
    }
}

/// Lowest cellular power that leaves the margin `kappa` above the SINR target.
pub fn cellular_min_power(links: &PcLinkSet, params: &ThresholdPcParams) -> f64 {
    params.kappa * params.beta_bs * links.l_cb / links.h_cb * links.noise_bs_mw
}

/// Largest D2D power whose interference at the base station stays within
/// the margin.
pub fn d2d_max_power(links: &PcLinkSet, params: &ThresholdPcParams) -> f64 {
    (params.kappa - 1.0) * links.l_db / links.h_db * links.noise_bs_mw
}

/// Lowest D2D power meeting the D2D SINR target while the cellular user
/// transmits `p_c`.
pub fn d2d_min_power(links: &PcLinkSet, params: &ThresholdPcParams, p_c: f64) -> f64 {
    links.l_dd / links.h_dd * (p_c / links.l_cd * links.h_cd + links.noise_ue_mw) * params.beta_d2d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "power_mw", rename_all = "snake_case")]
pub enum D2dPowerOutcome {
    Feasible(f64),
    ClampedLow(f64),
    ClampedHigh(f64),
    /// The D2D link cannot meet its target within the device power limit.
    Infeasible,
}

impl D2dPowerOutcome {
    pub fn power(&self) -> Option<f64> {
        match *self {
            Self::Feasible(p) | Self::ClampedLow(p) | Self::ClampedHigh(p) => Some(p),
            Self::Infeasible => None,
        }
    }
}

/// D2D power from the estimated gains, clamped into
/// `[d2d_min_power, p_ue_max]` with the cellular user at its minimum power.
pub fn d2d_power_adjusted(links: &PcLinkSet, params: &ThresholdPcParams) -> D2dPowerOutcome {
    let nominal = (params.kappa - 1.0) * links.l_db * links.noise_bs_mw / links.h_db_est / links.h_dd_est;
    let lo = d2d_min_power(links, params, cellular_min_power(links, params));
    let hi = params.p_ue_max_mw;
    if !(lo <= hi) {
        D2dPowerOutcome::Infeasible
    } else if nominal < lo {
        D2dPowerOutcome::ClampedLow(lo)
    } else if nominal > hi {
        D2dPowerOutcome::ClampedHigh(hi)
    } else {
        D2dPowerOutcome::Feasible(nominal)
    }
}

/// Share of the fixed-power budget saved by transmitting `p_d` instead of
/// `p_d_fixed`, relative to the total power with fixed D2D power.
pub fn power_saving(p_d_fixed: f64, p_d: f64, p_c: f64) -> f64 {
    (p_d_fixed - p_d) / (p_c + p_d_fixed)
}

/// Sum of both Shannon efficiencies per unit of total transmit power.
pub fn energy_efficiency(sinr_c: f64, sinr_d: f64, p_c: f64, p_d: f64) -> f64 {
    ((1.0 + sinr_c).log2() + (1.0 + sinr_d).log2()) / (p_c + p_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_links() -> PcLinkSet {
        PcLinkSet {
            l_cb: 1e11,
            h_cb: 1.0,
            l_db: 1e11,
            h_db: 1.0,
            l_dd: 1e8,
            h_dd: 1.0,
            l_cd: 1e12,
            h_cd: 1.0,
            h_db_est: 1.0,
            h_dd_est: 1.0,
            noise_bs_mw: 1e-13,
            noise_ue_mw: 1e-13,
        }
    }

    #[test]
    fn ofpc_follows_open_loop_until_cap() {
        let p = OfpcParams::default();
        assert_relative_eq!(ofpc_power_dbm(&p, 100.0), 2.0, epsilon = 1e-12);
        assert_eq!(ofpc_power_dbm(&p, 140.0), 24.0);
        let four = OfpcParams { resource_blocks: 4, ..p };
        assert_relative_eq!(ofpc_power_dbm(&four, 80.0), -78.0 + 10.0 * 4f64.log10() + 64.0, epsilon = 1e-12);
    }

    #[test]
    fn cellular_threshold_reference_value() {
        let params = ThresholdPcParams { kappa: 2.0, beta_bs: 10.0, ..ThresholdPcParams::default() };
        assert_relative_eq!(cellular_min_power(&unit_links(), &params), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn zero_margin_leaves_no_interference_budget() {
        let params = ThresholdPcParams { kappa: 1.0, ..ThresholdPcParams::default() };
        assert_eq!(d2d_max_power(&unit_links(), &params), 0.0);
        assert!(params.validate().is_err());
        assert!(ThresholdPcParams::default().validate().is_ok());
    }

    #[test]
    fn adjusted_power_reports_each_clamp() {
        let params = ThresholdPcParams::default();
        // Nominal power here is (kappa - 1) * 1e11 * 1e-13 ~ 1e-2 mW.
        let links = unit_links();
        let nominal = (params.kappa - 1.0) * 1e-2;
        let lo = d2d_min_power(&links, &params, cellular_min_power(&links, &params));
        assert!(lo < nominal);
        assert_eq!(d2d_power_adjusted(&links, &params), D2dPowerOutcome::Feasible(nominal));

        let weak = PcLinkSet { l_dd: 1e13, ..links.clone() };
        match d2d_power_adjusted(&weak, &params) {
            D2dPowerOutcome::ClampedLow(p) => {
                assert_relative_eq!(p, d2d_min_power(&weak, &params, cellular_min_power(&weak, &params)))
            }
            other => panic!("expected a low clamp, got {other:?}"),
        }

        let distant = PcLinkSet { l_db: 1e17, ..links.clone() };
        assert_eq!(d2d_power_adjusted(&distant, &params), D2dPowerOutcome::ClampedHigh(params.p_ue_max_mw));

        let hopeless = PcLinkSet { l_dd: 1e16, ..links };
        assert_eq!(d2d_power_adjusted(&hopeless, &params), D2dPowerOutcome::Infeasible);
    }

    #[test]
    fn metric_reference_values() {
        assert_relative_eq!(power_saving(200.0, 50.0, 100.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(energy_efficiency(1.0, 3.0, 1.0, 2.0), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn ofpc_never_exceeds_cap_and_is_monotone(a in 0.0f64..200.0, b in 0.0f64..200.0) {
            let p = OfpcParams::default();
            prop_assert!(ofpc_power_dbm(&p, a) <= p.p_max_dbm);
            if a <= b {
                prop_assert!(ofpc_power_dbm(&p, a) <= ofpc_power_dbm(&p, b));
            }
        }

        #[test]
        fn min_d2d_power_meets_target_exactly(
            l_dd in 1e4f64..1e12, l_cd in 1e6f64..1e14, h_dd in 0.01f64..5.0, h_cd in 0.01f64..5.0,
            p_c in 1e-3f64..200.0,
        ) {
            let params = ThresholdPcParams::default();
            let links = PcLinkSet { l_dd, l_cd, h_dd, h_cd, ..unit_links() };
            let p = d2d_min_power(&links, &params, p_c);
            prop_assert!((links.d2d_sinr(p_c, p) / params.beta_d2d - 1.0).abs() < 1e-9);
        }

        #[test]
        fn budgeted_interference_keeps_cellular_target(
            l_cb in 1e6f64..1e14, l_db in 1e6f64..1e14, h_cb in 0.01f64..5.0, h_db in 0.01f64..5.0,
        ) {
            let params = ThresholdPcParams::default();
            let links = PcLinkSet { l_cb, l_db, h_cb, h_db, ..unit_links() };
            let p_c = cellular_min_power(&links, &params);
            let p_d = d2d_max_power(&links, &params);
            prop_assert!(links.cellular_sinr(p_c, p_d) >= params.beta_bs * (1.0 - 1e-9));
        }

        #[test]
        fn adjusted_power_stays_in_band(
            l_db in 1e6f64..1e16, l_dd in 1e4f64..1e14, h_db in 0.01f64..5.0, h_dd in 0.01f64..5.0,
            e1 in -0.1f64..0.1, e2 in -0.1f64..0.1,
        ) {
            let params = ThresholdPcParams::default();
            let links = PcLinkSet {
                l_db, l_dd, h_db, h_dd,
                h_db_est: h_db * (1.0 + e1),
                h_dd_est: h_dd * (1.0 + e2),
                ..unit_links()
            };
            let lo = d2d_min_power(&links, &params, cellular_min_power(&links, &params));
            match d2d_power_adjusted(&links, &params).power() {
                Some(p) => prop_assert!(p >= lo * (1.0 - 1e-12) && p <= params.p_ue_max_mw),
                None => prop_assert!(lo > params.p_ue_max_mw),
            }
        }
    }
}
