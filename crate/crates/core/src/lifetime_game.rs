//! Battery-lifetime-aware channel and power allocation for D2D pairs that
//! may spread their rate over several cellular channels.
//!
//! Each pair must reach a target rate summed over the channels it uses and
//! wants to spend as little power as possible, since lifetime falls with the
//! drawn power. Channels are handed out one cell (pair, channel) at a time by
//! an auction whose cost is the power the pair would need plus a congestion
//! price on crowded channels and on pairs that already hold channels.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance when checking that a power split meets its rate.
pub const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LifetimeError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("a positive rate needs at least one channel")]
    NoChannels,
    #[error("drawn power {power_mw} mW is below the circuit power {circuit_mw} mW")]
    BelowCircuitPower { power_mw: f64, circuit_mw: f64 },
    #[error("sharers on channel {channel} cannot all meet their rates")]
    InfeasibleSharing { channel: usize },
    #[error("pair {pair} has no channel it can join")]
    NoFeasibleCell { pair: usize },
    #[error("auction did not finish within {rounds} rounds")]
    RoundCap { rounds: usize },
}

type Result<T> = std::result::Result<T, LifetimeError>;

// ---------------------------------------------------------------------------
// Battery
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryModel {
    pub capacity_ah: f64,
    /// Exponent of the discharge-rate penalty, 1 for an ideal battery.
    pub peukert: f64,
    pub voltage_v: f64,
    pub circuit_power_mw: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self { capacity_ah: 0.8, peukert: 1.3, voltage_v: 4.0, circuit_power_mw: 100.0 }
    }
}

impl BatteryModel {
    /// Hours until the battery is drained at a constant total draw, circuit
    /// power included.
    pub fn lifetime_h(&self, total_power_mw: f64) -> Result<f64> {
        if !(total_power_mw >= self.circuit_power_mw) {
            return Err(LifetimeError::BelowCircuitPower {
                power_mw: total_power_mw,
                circuit_mw: self.circuit_power_mw,
            });
        }
        let current_a = total_power_mw / 1000.0 / self.voltage_v;
        Ok(self.capacity_ah / current_a.powf(self.peukert))
    }

    /// Lifetime of a device whose radio transmits `tx_power_mw` on top of
    /// the circuit power.
    pub fn lifetime_for_tx_h(&self, tx_power_mw: f64) -> f64 {
        self.lifetime_h(tx_power_mw.max(0.0) + self.circuit_power_mw)
            .expect("circuit power is always included")
    }
}

// ---------------------------------------------------------------------------
// Game context
// ---------------------------------------------------------------------------

/// Linear power gains of `D` pairs and `C` cellular uplink channels. Each
/// channel is occupied by one cellular user transmitting a fixed power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameContext {
    pub noise: f64,
    /// Rate every pair must reach, in bit/s/Hz summed over its channels.
    pub rate_target: f64,
    /// Power of the cellular user on each channel.
    pub p_cellular: Vec<f64>,
    /// Desired gain of each pair.
    pub g_pair: Vec<f64>,
    /// `g_cross[j][i]`: transmitter of pair `j` to receiver of pair `i`.
    pub g_cross: Vec<Vec<f64>>,
    /// `g_cell_rx[c][i]`: cellular user `c` to receiver of pair `i`.
    pub g_cell_rx: Vec<Vec<f64>>,
    /// Cellular user `c` to the base station.
    pub g_cell_bs: Vec<f64>,
    /// Transmitter of pair `i` to the base station.
    pub g_pair_bs: Vec<f64>,
}

/// `powers[i][c]` is the power of pair `i` on channel `c`.
pub type PowerMatrix = Vec<Vec<f64>>;

impl GameContext {
    pub fn n_pairs(&self) -> usize {
        self.g_pair.len()
    }

    pub fn n_channels(&self) -> usize {
        self.p_cellular.len()
    }

    pub fn zero_powers(&self) -> PowerMatrix {
        vec![vec![0.0; self.n_channels()]; self.n_pairs()]
    }

    pub fn validate(&self) -> Result<()> {
        let (d, c) = (self.n_pairs(), self.n_channels());
        let shape_ok = self.g_cross.len() == d
            && self.g_cross.iter().all(|r| r.len() == d)
            && self.g_cell_rx.len() == c
            && self.g_cell_rx.iter().all(|r| r.len() == d)
            && self.g_cell_bs.len() == c
            && self.g_pair_bs.len() == d;
        if !shape_ok {
            return Err(LifetimeError::InvalidParameter { name: "gains", reason: "inconsistent dimensions".into() });
        }
        if !(self.noise > 0.0) || self.g_pair.iter().any(|&g| !(g > 0.0)) {
            return Err(LifetimeError::InvalidParameter {
                name: "noise",
                reason: "noise and desired gains must be positive".into(),
            });
        }
        if !(self.rate_target >= 0.0 && self.rate_target.is_finite()) {
            return Err(LifetimeError::InvalidParameter {
                name: "rate_target",
                reason: format!("must be non-negative, got {}", self.rate_target),
            });
        }
        Ok(())
    }
}

/// Noise-plus-interference on each channel as seen by pair `i`, normalised by
/// its own gain, so that a power `p` on channel `c` yields `log2(1 + p / q[c])`.
pub fn effective_interference(ctx: &GameContext, powers: &PowerMatrix, i: usize) -> Vec<f64> {
    (0..ctx.n_channels())
        .map(|c| {
            let others: f64 = (0..ctx.n_pairs())
                .filter(|&j| j != i)
                .map(|j| powers[j][c] * ctx.g_cross[j][i])
                .sum();
            (ctx.p_cellular[c] * ctx.g_cell_rx[c][i] + others + ctx.noise) / ctx.g_pair[i]
        })
        .collect()
}

/// Rate achieved by a power split against normalised interference `q`.
pub fn split_rate(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(&q, &p)| (1.0 + p / q).log2()).sum()
}

/// Least total power reaching `rate` over channels with normalised
/// interference `q` (water-filling).
///
/// For each prefix of the channels sorted by `q`, the water level that meets
/// the rate exactly on that prefix is computed; prefixes whose level leaves
/// some channel below its floor overshoot the rate and are discarded, and
/// the cheapest remaining split is returned in the original channel order.
pub fn best_response(q: &[f64], rate: f64) -> Result<Vec<f64>> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(LifetimeError::InvalidParameter { name: "rate", reason: format!("{rate}") });
    }
    if rate == 0.0 {
        return Ok(vec![0.0; q.len()]);
    }
    if q.is_empty() {
        return Err(LifetimeError::NoChannels);
    }
    if q.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(LifetimeError::InvalidParameter { name: "q", reason: "must be positive and finite".into() });
    }
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut log_sum = 0.0;
    for k in 1..=q.len() {
        log_sum += q[order[k - 1]].ln();
        let level = ((rate * std::f64::consts::LN_2 + log_sum) / k as f64).exp();
        let mut p = vec![0.0; q.len()];
        for &c in &order[..k] {
            p[c] = (level - q[c]).max(0.0);
        }
        if (split_rate(q, &p) - rate).abs() > RATE_TOLERANCE * rate.max(1.0) {
            continue;
        }
        let total: f64 = p.iter().sum();
        if best.as_ref().is_none_or(|(t, _)| total < *t) {
            best = Some((total, p));
        }
    }
    // The one-channel prefix always meets the rate exactly.
    Ok(best.expect("single-channel split is always valid").1)
}

/// Power-plus-congestion cost of taking cell `(i, c)`.
pub fn cell_cost(power: f64, price: f64, occupancy: usize, owned: usize) -> f64 {
    power + price * (occupancy + owned) as f64
}

/// Cellular uplink rate on each channel given the D2D powers.
pub fn cellular_rates(ctx: &GameContext, powers: &PowerMatrix) -> Vec<f64> {
    (0..ctx.n_channels())
        .map(|c| {
            let interference: f64 = (0..ctx.n_pairs()).map(|i| powers[i][c] * ctx.g_pair_bs[i]).sum();
            (1.0 + ctx.p_cellular[c] * ctx.g_cell_bs[c] / (interference + ctx.noise)).log2()
        })
        .collect()
}

/// Rate each pair achieves with every pair at `powers`.
pub fn pair_rates(ctx: &GameContext, powers: &PowerMatrix) -> Vec<f64> {
    (0..ctx.n_pairs())
        .map(|i| split_rate(&effective_interference(ctx, powers, i), &powers[i]))
        .collect()
}

/// Powers of the pairs sharing `channel` so that each reaches its target
/// rate there, holding the other channels fixed. `sharers` lists
/// `(pair, rate)`; only a strictly positive solution is accepted.
pub fn adjust_shared_powers(ctx: &GameContext, channel: usize, sharers: &[(usize, f64)]) -> Result<Vec<f64>> {
    let n = sharers.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for (r, &(i, rate)) in sharers.iter().enumerate() {
        if !(rate > 0.0) {
            return Err(LifetimeError::InvalidParameter { name: "rate", reason: format!("sharer {i} has rate {rate}") });
        }
        for (col, &(j, _)) in sharers.iter().enumerate() {
            m[r][col] = if i == j { ctx.g_pair[i] / (2f64.powf(rate) - 1.0) } else { -ctx.g_cross[j][i] };
        }
        m[r][n] = ctx.p_cellular[channel] * ctx.g_cell_rx[channel][i] + ctx.noise;
    }
    let p = solve_linear(m).ok_or(LifetimeError::InfeasibleSharing { channel })?;
    if p.iter().all(|&x| x > 0.0 && x.is_finite()) {
        Ok(p)
    } else {
        Err(LifetimeError::InfeasibleSharing { channel })
    }
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_linear(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..=n {
                m[r][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Nash equilibrium of the power game
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashOutcome {
    pub powers: PowerMatrix,
    /// Sweeps that changed some power by more than the tolerance.
    pub sweeps: usize,
    pub converged: bool,
    pub max_change: f64,
}

/// Iterated best response from all-zero powers, updating pairs in index
/// order within each sweep. `allowed[i][c]` restricts the channels a pair
/// may use; `None` allows all of them.
pub fn find_nash_restricted(
    ctx: &GameContext,
    allowed: Option<&[Vec<bool>]>,
    max_sweeps: usize,
    tolerance: f64,
) -> Result<NashOutcome> {
    ctx.validate()?;
    let mut powers = ctx.zero_powers();
    let mut max_change = 0.0;
    for sweep in 0..max_sweeps {
        max_change = 0.0f64;
        for i in 0..ctx.n_pairs() {
            let q = effective_interference(ctx, &powers, i);
            let next = match allowed {
                None => best_response(&q, ctx.rate_target)?,
                Some(mask) => {
                    let idx: Vec<usize> = (0..q.len()).filter(|&c| mask[i][c]).collect();
                    let sub: Vec<f64> = idx.iter().map(|&c| q[c]).collect();
                    let br = best_response(&sub, ctx.rate_target)?;
                    let mut full = vec![0.0; q.len()];
                    for (k, &c) in idx.iter().enumerate() {
                        full[c] = br[k];
                    }
                    full
                }
            };
            for c in 0..q.len() {
                max_change = max_change.max((next[c] - powers[i][c]).abs());
            }
            powers[i] = next;
        }
        if max_change < tolerance {
            return Ok(NashOutcome { powers, sweeps: sweep, converged: true, max_change });
        }
    }
    Ok(NashOutcome { powers, sweeps: max_sweeps, converged: false, max_change })
}

pub fn find_nash(ctx: &GameContext, max_sweeps: usize) -> Result<NashOutcome> {
    find_nash_restricted(ctx, None, max_sweeps, 1e-8)
}

// ---------------------------------------------------------------------------
// Resource auction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceAuctionConfig {
    /// Congestion price per pair already on a channel and per channel
    /// already held, in mW.
    pub price: f64,
    /// Never put two pairs on one channel.
    pub exclusive_channels: bool,
    /// Give each pair exactly one channel.
    pub single_channel: bool,
}

impl Default for ResourceAuctionConfig {
    fn default() -> Self {
        Self { price: 1.0, exclusive_channels: false, single_channel: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAward {
    pub round: usize,
    pub pair: usize,
    pub channel: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionLedger {
    /// `assigned[i][c]` is set once pair `i` holds channel `c`.
    pub assigned: Vec<Vec<bool>>,
    /// Target rate of each pair on each channel.
    pub rates: Vec<Vec<f64>>,
    pub occupancy: Vec<usize>,
    pub owned: Vec<usize>,
    pub awards: Vec<CellAward>,
    /// Awards undone because the sharers of a channel could not all be served.
    pub rejected: usize,
    pub rounds: usize,
}

struct Plan {
    cost: f64,
    pair: usize,
    channel: usize,
    /// New target rates of the winning pair on every channel it would hold.
    rates: Vec<(usize, f64)>,
}

/// Hands out cells until every pair holds at least one channel, then returns
/// the powers and a record of the awards.
pub fn run_resource_auction(ctx: &GameContext, cfg: &ResourceAuctionConfig) -> Result<(PowerMatrix, AuctionLedger)> {
    ctx.validate()?;
    let (n_d, n_c) = (ctx.n_pairs(), ctx.n_channels());
    if n_c == 0 && n_d > 0 {
        return Err(LifetimeError::NoChannels);
    }
    let rate = ctx.rate_target;
    let mut powers = ctx.zero_powers();
    let mut ledger = AuctionLedger {
        assigned: vec![vec![false; n_c]; n_d],
        rates: vec![vec![0.0; n_c]; n_d],
        occupancy: vec![0; n_c],
        owned: vec![0; n_d],
        awards: Vec::new(),
        rejected: 0,
        rounds: 0,
    };
    let mut excluded = vec![vec![false; n_c]; n_d];
    let cap = n_d * n_c * 4;

    while ledger.owned.contains(&0) {
        ledger.rounds += 1;
        if ledger.rounds > cap {
            return Err(LifetimeError::RoundCap { rounds: cap });
        }
        let mut best: Option<Plan> = None;
        // In exclusive mode a pair may only add channels while enough free
        // channels remain for the pairs still waiting.
        let free = ledger.occupancy.iter().filter(|&&m| m == 0).count();
        let waiting = ledger.owned.iter().filter(|&&n| n == 0).count();
        for i in 0..n_d {
            let holds = ledger.owned[i];
            if holds > 0 && (cfg.single_channel || (cfg.exclusive_channels && free <= waiting)) {
                continue;
            }
            let q = effective_interference(ctx, &powers, i);
            for c in 0..n_c {
                if ledger.assigned[i][c] || excluded[i][c] || (cfg.exclusive_channels && ledger.occupancy[c] > 0) {
                    continue;
                }
                let (power, rates) = if holds == 0 {
                    (q[c] * (2f64.powf(rate) - 1.0), vec![(c, rate)])
                } else {
                    let chans: Vec<usize> = (0..n_c).filter(|&k| ledger.assigned[i][k] || k == c).collect();
                    let sub: Vec<f64> = chans.iter().map(|&k| q[k]).collect();
                    let split = best_response(&sub, rate)?;
                    let rates = chans.iter().zip(&split).zip(&sub).map(|((&k, &p), &qk)| (k, (1.0 + p / qk).log2())).collect();
                    (split.iter().sum(), rates)
                };
                let cost = cell_cost(power, cfg.price, ledger.occupancy[c], holds);
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(Plan { cost, pair: i, channel: c, rates });
                }
            }
        }
        let Some(plan) = best else {
            let pair = ledger.owned.iter().position(|&n| n == 0).unwrap_or(0);
            return Err(LifetimeError::NoFeasibleCell { pair });
        };

        // Re-solve every channel the winner touches, keeping the other
        // sharers at their current rates.
        let mut updates = Vec::with_capacity(plan.rates.len());
        let mut feasible = true;
        for &(c, r_win) in &plan.rates {
            let mut sharers: Vec<(usize, f64)> = (0..n_d)
                .filter(|&j| j != plan.pair && ledger.assigned[j][c] && ledger.rates[j][c] > 0.0)
                .map(|j| (j, ledger.rates[j][c]))
                .collect();
            if r_win > 0.0 {
                sharers.push((plan.pair, r_win));
            }
            if sharers.is_empty() {
                updates.push((c, sharers, Vec::new()));
                continue;
            }
            match adjust_shared_powers(ctx, c, &sharers) {
                Ok(p) => updates.push((c, sharers, p)),
                Err(_) => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            excluded[plan.pair][plan.channel] = true;
            ledger.rejected += 1;
            continue;
        }

        let i = plan.pair;
        ledger.assigned[i][plan.channel] = true;
        ledger.occupancy[plan.channel] += 1;
        ledger.owned[i] += 1;
        for &(c, r) in &plan.rates {
            ledger.rates[i][c] = r;
        }
        for (c, sharers, p) in updates {
            powers[i][c] = 0.0;
            for (&(j, _), &pj) in sharers.iter().zip(&p) {
                powers[j][c] = pj;
            }
        }
        ledger.awards.push(CellAward { round: ledger.rounds, pair: i, channel: plan.channel, cost: plan.cost });
    }
    Ok((powers, ledger))
}

// ---------------------------------------------------------------------------
// Reference allocations
// ---------------------------------------------------------------------------

/// Puts every pair on one uniformly chosen channel and solves each channel's
/// sharers for the full target rate.
pub fn random_single_channel<R: Rng + ?Sized>(rng: &mut R, ctx: &GameContext) -> Result<PowerMatrix> {
    ctx.validate()?;
    let (n_d, n_c) = (ctx.n_pairs(), ctx.n_channels());
    if n_c == 0 && n_d > 0 {
        return Err(LifetimeError::NoChannels);
    }
    let choice: Vec<usize> = (0..n_d).map(|_| rng.random_range(0..n_c)).collect();
    let mut powers = ctx.zero_powers();
    if ctx.rate_target == 0.0 {
        return Ok(powers);
    }
    for c in 0..n_c {
        let sharers: Vec<(usize, f64)> = (0..n_d).filter(|&i| choice[i] == c).map(|i| (i, ctx.rate_target)).collect();
        if sharers.is_empty() {
            continue;
        }
        let p = adjust_shared_powers(ctx, c, &sharers)?;
        for (&(i, _), &pi) in sharers.iter().zip(&p) {
            powers[i][c] = pi;
        }
    }
    Ok(powers)
}

pub const CENTRAL_MAX_PAIRS: usize = 3;
pub const CENTRAL_MAX_CHANNELS: usize = 4;

/// Channel sets maximising the summed lifetime, by trying every non-empty
/// channel set for every pair and settling powers with restricted iterated
/// best response. Returns `None` when no assignment converges.
pub fn centralized_allocation(ctx: &GameContext, battery: &BatteryModel) -> Result<Option<PowerMatrix>> {
    let (n_d, n_c) = (ctx.n_pairs(), ctx.n_channels());
    if n_d > CENTRAL_MAX_PAIRS || n_c > CENTRAL_MAX_CHANNELS {
        return Err(LifetimeError::InvalidParameter {
            name: "size",
            reason: format!("exhaustive search limited to {CENTRAL_MAX_PAIRS} pairs and {CENTRAL_MAX_CHANNELS} channels"),
        });
    }
    if n_c == 0 {
        return Err(LifetimeError::NoChannels);
    }
    let subsets = (1usize << n_c) - 1;
    let total = subsets.pow(n_d as u32);
    let mut best: Option<(f64, PowerMatrix)> = None;
    for code in 0..total {
        let mut rest = code;
        let mask: Vec<Vec<bool>> = (0..n_d)
            .map(|_| {
                let s = rest % subsets + 1;
                rest /= subsets;
                (0..n_c).map(|c| s & (1 << c) != 0).collect()
            })
            .collect();
        let out = find_nash_restricted(ctx, Some(&mask), 500, 1e-8)?;
        if !out.converged {
            continue;
        }
        let score: f64 = out.powers.iter().map(|row| battery.lifetime_for_tx_h(row.iter().sum())).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, out.powers));
        }
    }
    Ok(best.map(|b| b.1))
}
