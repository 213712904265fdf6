//! Experiment configuration loaded from TOML.
//!
//! Every key has a default, so an empty file (or no file) runs the baseline
//! scenario of each experiment. Unknown keys are rejected.

use std::path::Path;

use d2d_core::power_control::OfpcParams;
use d2d_core::propagation::PropagationParams;
use serde::{Deserialize, Serialize};

use crate::SimError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub propagation: PropagationParams,
    pub sinr_dist: SinrDistConfig,
    pub mode_select: ModeSelectConfig,
    pub threshold_pc: ThresholdPcConfig,
    pub beamforming: BeamformingConfig,
    pub auction: AuctionConfig,
    pub scheduling: SchedulingConfig,
    pub lifetime: LifetimeConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.propagation.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io { path: path.to_owned(), source: e })?;
        Self::from_toml_str(&text)
    }

    /// Propagation parameters with the noise bandwidth replaced.
    pub fn propagation_with_bandwidth(&self, bandwidth_hz: f64) -> PropagationParams {
        PropagationParams { bandwidth_hz, ..self.propagation.clone() }
    }
}

/// Uplink and downlink SINR with and without open-loop power control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinrDistConfig {
    pub radius_m: f64,
    /// Nineteen hexagonal cells instead of one isolated cell.
    pub multi_cell: bool,
    pub pair_distance_m: f64,
    /// Places each pair's transmitter at this fraction of the radius.
    pub anchor_fraction: Option<f64>,
    pub bs_power_dbm: f64,
    pub ue_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub ofpc: OfpcParams,
}

impl Default for SinrDistConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            multi_cell: true,
            pair_distance_m: 25.0,
            anchor_fraction: None,
            bs_power_dbm: 46.0,
            ue_power_dbm: 24.0,
            bandwidth_hz: 5e6,
            ofpc: OfpcParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSelectConfig {
    pub radius_m: f64,
    pub multi_cell: bool,
    pub pair_distance_m: f64,
    pub bs_power_dbm: f64,
    pub ue_power_dbm: f64,
    pub bandwidth_hz: f64,
}

impl Default for ModeSelectConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            multi_cell: true,
            pair_distance_m: 15.0,
            bs_power_dbm: 46.0,
            ue_power_dbm: 24.0,
            bandwidth_hz: 5e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdPcConfig {
    pub radius_m: f64,
    pub pair_distance_m: f64,
    pub kappa_db: f64,
    pub beta_b_db: f64,
    pub beta_d_db: f64,
    pub p_ue_max_dbm: f64,
    /// Power of the fixed-power reference scheme.
    pub fixed_power_dbm: f64,
    /// Relative half-width of the uniform channel-estimation error.
    pub est_error: f64,
    pub bandwidth_hz: f64,
    pub ofpc: OfpcParams,
}

impl Default for ThresholdPcConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            pair_distance_m: 150.0,
            kappa_db: 3.0,
            beta_b_db: 10.0,
            beta_d_db: 5.0,
            p_ue_max_dbm: 23.0,
            fixed_power_dbm: 23.0,
            est_error: 0.1,
            bandwidth_hz: 15e3,
            ofpc: OfpcParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformingConfig {
    pub radius_m: f64,
    pub pair_distance_m: f64,
    pub n_pairs: usize,
    pub beta_c_db: f64,
    pub beta_d_db: f64,
    pub p_bs_dbm: f64,
    pub p_max_dbm: f64,
    /// 64 subcarriers of 15 kHz.
    pub bandwidth_hz: f64,
}

impl Default for BeamformingConfig {
    fn default() -> Self {
        Self {
            radius_m: 600.0,
            pair_distance_m: 50.0,
            n_pairs: 1,
            beta_c_db: 5.0,
            beta_d_db: 5.0,
            p_bs_dbm: 46.0,
            p_max_dbm: 23.0,
            bandwidth_hz: 64.0 * 15e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuctionConfig {
    pub radius_m: f64,
    pub pair_distance_m: f64,
    /// Cellular users, one resource unit each.
    pub n_cellular: usize,
    pub n_pairs: usize,
    pub p_bs_dbm: f64,
    pub p_d2d_dbm: f64,
    pub bandwidth_hz: f64,
    /// Descending price step; a share of the largest single-pair valuation
    /// when unset.
    pub delta: Option<f64>,
    pub fine_divisor: u32,
    /// Solve the exact allocation too and report efficiency.
    pub oracle: bool,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            pair_distance_m: 5.0,
            n_cellular: 2,
            n_pairs: 2,
            p_bs_dbm: 46.0,
            p_d2d_dbm: 23.0,
            bandwidth_hz: 15e3,
            delta: None,
            fine_divisor: 10,
            oracle: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulingConfig {
    pub radius_m: f64,
    pub pair_distance_m: f64,
    /// Cellular users, one channel each.
    pub n_cellular: usize,
    pub n_pairs: usize,
    pub cellular_power_dbm: f64,
    pub d2d_min_dbm: f64,
    pub d2d_max_dbm: f64,
    pub bandwidth_hz: f64,
    pub path_loss_exponent: f64,
    pub slots: usize,
    pub fairness: f64,
    pub beta: f64,
}

impl Default for SchedulingConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            pair_distance_m: 50.0,
            n_cellular: 5,
            n_pairs: 10,
            cellular_power_dbm: 23.0,
            d2d_min_dbm: 0.0,
            d2d_max_dbm: 23.0,
            bandwidth_hz: 180e3,
            path_loss_exponent: 2.0,
            slots: 1000,
            fairness: 1.0,
            beta: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifetimeConfig {
    pub radius_m: f64,
    pub pair_distance_m: f64,
    pub n_cellular: usize,
    pub n_pairs: usize,
    pub cellular_power_mw: f64,
    pub noise_mw: f64,
    pub path_loss_exponent: f64,
    /// Rate each pair must reach, bit/s/Hz.
    pub rate_target: f64,
    /// Congestion price of the resource auction, mW.
    pub price: f64,
    pub exclusive_channels: bool,
    pub single_channel: bool,
    /// Also run the exhaustive allocator (small systems only).
    pub centralized: bool,
    pub capacity_ah: f64,
    pub peukert: f64,
    pub voltage_v: f64,
    pub circuit_power_mw: f64,
}

impl Default for LifetimeConfig {
    fn default() -> Self {
        Self {
            radius_m: 350.0,
            pair_distance_m: 30.0,
            n_cellular: 8,
            n_pairs: 3,
            cellular_power_mw: 250.0,
            noise_mw: 1e-4,
            path_loss_exponent: 2.0,
            rate_target: 2.0,
            price: 1.0,
            exclusive_channels: false,
            single_channel: false,
            centralized: false,
            capacity_ah: 0.8,
            peukert: 1.3,
            voltage_v: 4.0,
            circuit_power_mw: 100.0,
        }
    }
}
