//! Building blocks for simulating device-to-device links underlaying a
//! cellular network: channel drops, power control, two-antenna downlink
//! beamforming, a combinatorial spectrum auction, a pricing game for
//! interference control and a battery-lifetime resource game.

pub mod beamforming;
pub mod comb_auction;
pub mod lifetime_game;
pub mod power_control;
pub mod propagation;
pub mod stackelberg;
pub mod units;

pub use propagation::{Node, Point, UserDrop};
