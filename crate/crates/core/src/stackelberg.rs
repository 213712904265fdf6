//! Interference pricing between a cellular user and a D2D pair, and a
//! per-slot scheduler built on it.
//!
//! The cellular user (leader) charges the D2D transmitter (follower) a price
//! per unit of interference it causes at the base station. The follower
//! answers with the power that maximises its rate minus the interference
//! charge, and the leader picks the price that maximises its own rate plus a
//! scaled share of the revenue.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StackelbergError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Linear power gains and powers of one leader/follower game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGame {
    /// Cellular user to base station.
    pub g_ke: f64,
    /// Cellular user to D2D receiver.
    pub g_ki: f64,
    /// D2D transmitter to base station.
    pub g_ie: f64,
    /// D2D transmitter to D2D receiver.
    pub g_ii: f64,
    pub p_k: f64,
    pub noise: f64,
    /// Weight of interference revenue in the leader's utility.
    pub beta: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl PairGame {
    pub fn validate(&self) -> Result<(), StackelbergError> {
        for (name, v) in [
            ("g_ke", self.g_ke),
            ("g_ie", self.g_ie),
            ("g_ii", self.g_ii),
            ("noise", self.noise),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StackelbergError::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        if !(self.g_ki >= 0.0 && self.p_k >= 0.0) {
            return Err(StackelbergError::InvalidParameter { name: "g_ki", reason: "must be non-negative".into() });
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max) {
            return Err(StackelbergError::InvalidParameter {
                name: "p_min",
                reason: format!("need 0 < p_min <= p_max, got [{}, {}]", self.p_min, self.p_max),
            });
        }
        Ok(())
    }

    /// Interference plus noise at the D2D receiver.
    fn follower_floor(&self) -> f64 {
        self.p_k * self.g_ki + self.noise
    }
}

pub fn follower_utility(game: &PairGame, price: f64, p: f64) -> f64 {
    (1.0 + p * game.g_ii / game.follower_floor()).log2() - price * p * game.g_ie
}

pub fn leader_utility(game: &PairGame, price: f64, p: f64) -> f64 {
    (1.0 + game.p_k * game.g_ke / (p * game.g_ie + game.noise)).log2() + price * game.beta * p * game.g_ie
}

pub fn leader_rate(game: &PairGame, p: f64) -> f64 {
    (1.0 + game.p_k * game.g_ke / (p * game.g_ie + game.noise)).log2()
}

pub fn follower_rate(game: &PairGame, p: f64) -> f64 {
    (1.0 + p * game.g_ii / game.follower_floor()).log2()
}

/// Follower power maximising its utility at `price`. The utility is concave
/// in power, so the best of the two bounds and the stationary point wins;
/// ties go to the smaller power.
pub fn follower_best_response(game: &PairGame, price: f64) -> f64 {
    let mut candidates = vec![game.p_min, game.p_max];
    if price > 0.0 {
        let stationary = 1.0 / (price * game.g_ie * LN_2) - game.follower_floor() / game.g_ii;
        if stationary > game.p_min && stationary < game.p_max {
            candidates.push(stationary);
        }
    }
    argmax_smallest(candidates, |p| follower_utility(game, price, p))
}

/// Prices at which the follower's unconstrained best response equals
/// `p_max` and `p_min`.
pub fn price_bounds(game: &PairGame) -> (f64, f64) {
    let at = |p: f64| game.g_ii / ((game.g_ii * p + game.follower_floor()) * game.g_ie * LN_2);
    (at(game.p_max), at(game.p_min))
}

/// Coefficients of the leader utility after substituting the follower's
/// interior best response: `u(a) = log2(1 + A a / (C a + B)) + (C - N) beta a + B beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AuxCoefficients {
    pub fn new(game: &PairGame) -> Self {
        Self {
            a: game.p_k * game.g_ke,
            b: 1.0 / LN_2,
            c: -game.g_ie * game.follower_floor() / game.g_ii + game.noise,
        }
    }

    /// Every price where the substituted leader utility can be stationary.
    pub fn stationary_prices(&self, noise: f64, beta: f64) -> Vec<f64> {
        let Self { a, b, c } = *self;
        let mut out = Vec::with_capacity(4);
        // Closed forms for the two degenerate coefficient patterns.
        out.push(b / (noise * beta) - b / a);
        out.push(b / a - b / ((a + noise) * beta));
        let quad = c * (a + c);
        if quad != 0.0 {
            let disc = a * b * b * (a + 4.0 * c * (a + c) / ((noise - c) * beta));
            if disc >= 0.0 {
                let sq = disc.sqrt();
                out.push((-b * (a + 2.0 * c) + sq) / (2.0 * quad));
                out.push((-b * (a + 2.0 * c) - sq) / (2.0 * quad));
            }
        }
        out.retain(|x| x.is_finite());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub price: f64,
    pub power: f64,
    pub leader_utility: f64,
    pub follower_utility: f64,
}

/// Leader price maximising its utility given the follower's best response,
/// searched over the price bounds and every stationary point inside them.
pub fn leader_optimal_price(game: &PairGame) -> Equilibrium {
    let (lo, hi) = price_bounds(game);
    let aux = AuxCoefficients::new(game);
    let mut candidates = vec![lo, hi];
    candidates.extend(aux.stationary_prices(game.noise, game.beta).into_iter().filter(|&x| x > lo && x < hi));
    let leader_at = |price: f64| leader_utility(game, price, follower_best_response(game, price));
    let price = argmax_smallest(candidates, leader_at);
    let power = follower_best_response(game, price);
    Equilibrium {
        price,
        power,
        leader_utility: leader_utility(game, price, power),
        follower_utility: follower_utility(game, price, power),
    }
}

fn argmax_smallest(mut xs: Vec<f64>, f: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mut best = xs[0];
    let mut best_v = f(best);
    for &x in &xs[1..] {
        let v = f(x);
        if v > best_v {
            best = x;
            best_v = v;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Scheduler
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    /// Accumulated cost of each D2D pair.
    pub costs: Vec<f64>,
    /// Sum of follower utility each pair has collected.
    pub cumulative_utility: Vec<f64>,
    pub fairness: f64,
    pub slot: usize,
}

impl SchedulerState {
    pub fn new(n_pairs: usize, fairness: f64) -> Self {
        Self { costs: vec![0.0; n_pairs], cumulative_utility: vec![0.0; n_pairs], fairness, slot: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub pair: usize,
    pub channel: usize,
    pub price: f64,
    pub power: f64,
    pub leader_utility: f64,
    pub follower_utility: f64,
    /// Cost of the pair after this slot's update.
    pub cost: f64,
}

/// Solves every pair/channel game for one slot, then greedily matches
/// pairs to channels by utility minus accumulated cost, highest first with
/// ties broken by pair then channel index.
///
/// `games[i][k]` is the game between pair `i` and the cellular user on
/// channel `k`.
pub fn schedule_slot(games: &[Vec<PairGame>], state: &mut SchedulerState) -> Vec<SlotRecord> {
    let n_pairs = games.len();
    let n_channels = games.first().map_or(0, Vec::len);
    assert_eq!(state.costs.len(), n_pairs, "scheduler state sized for a different number of pairs");

    let mut entries = Vec::with_capacity(n_pairs * n_channels);
    for (i, row) in games.iter().enumerate() {
        assert_eq!(row.len(), n_channels, "every pair needs a game on every channel");
        for (k, game) in row.iter().enumerate() {
            let eq = leader_optimal_price(game);
            entries.push((eq.follower_utility - state.costs[i], i, k, eq));
        }
    }
    entries.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut pair_used = vec![false; n_pairs];
    let mut channel_used = vec![false; n_channels];
    let mut records = Vec::new();
    for (_, i, k, eq) in entries {
        if pair_used[i] || channel_used[k] {
            continue;
        }
        pair_used[i] = true;
        channel_used[k] = true;
        state.costs[i] += state.fairness * eq.follower_utility;
        state.cumulative_utility[i] += eq.follower_utility;
        records.push(SlotRecord {
            slot: state.slot,
            pair: i,
            channel: k,
            price: eq.price,
            power: eq.power,
            leader_utility: eq.leader_utility,
            follower_utility: eq.follower_utility,
            cost: state.costs[i],
        });
    }
    state.slot += 1;
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn game() -> PairGame {
        PairGame {
            g_ke: 1e-6,
            g_ki: 1e-8,
            g_ie: 1e-7,
            g_ii: 1e-4,
            p_k: 200.0,
            noise: 1e-9,
            beta: 1.0,
            p_min: 1.0,
            p_max: 200.0,
        }
    }

    #[test]
    fn best_response_hits_bounds_at_the_bound_prices() {
        let g = game();
        let (lo, hi) = price_bounds(&g);
        assert!(lo < hi);
        assert_relative_eq!(follower_best_response(&g, lo), g.p_max, max_relative = 1e-9);
        assert_relative_eq!(follower_best_response(&g, hi), g.p_min, max_relative = 1e-9);
        assert_eq!(follower_best_response(&g, hi * 10.0), g.p_min);
        assert_eq!(follower_best_response(&g, lo / 10.0), g.p_max);
    }

    #[test]
    fn substituted_leader_utility_matches_direct_evaluation() {
        let g = game();
        let aux = AuxCoefficients::new(&g);
        let (lo, hi) = price_bounds(&g);
        for t in [0.1, 0.5, 0.9] {
            let price = lo + t * (hi - lo);
            let p = follower_best_response(&g, price);
            let direct = leader_utility(&g, price, p);
            let substituted = (1.0 + aux.a * price / (aux.c * price + aux.b)).log2()
                + (aux.c - g.noise) * g.beta * price
                + aux.b * g.beta;
            assert_relative_eq!(direct, substituted, max_relative = 1e-9);
        }
    }

    #[test]
    fn scheduler_respects_matching_and_updates_costs() {
        let g = game();
        let weak = PairGame { g_ii: 1e-6, ..g };
        let weaker = PairGame { g_ii: 1e-7, ..g };
        let games = vec![vec![g, g], vec![weaker, weaker], vec![g, weak]];
        let mut state = SchedulerState::new(3, 0.5);
        let recs = schedule_slot(&games, &mut state);
        assert_eq!(recs.len(), 2);
        assert_ne!(recs[0].pair, recs[1].pair);
        assert_ne!(recs[0].channel, recs[1].channel);
        // Strong pairs go first; pair 0 wins the tie with pair 2 on channel 0.
        assert_eq!((recs[0].pair, recs[0].channel), (0, 0));
        assert_eq!((recs[1].pair, recs[1].channel), (2, 1));
        assert_eq!(state.costs[1], 0.0);
        assert_relative_eq!(state.costs[0], 0.5 * recs[0].follower_utility);
    }

    #[test]
    fn zero_fairness_keeps_costs_at_zero() {
        let g = game();
        let mut state = SchedulerState::new(2, 0.0);
        for _ in 0..5 {
            schedule_slot(&[vec![g], vec![g]], &mut state);
        }
        assert!(state.costs.iter().all(|&c| c == 0.0));
        assert_eq!(state.slot, 5);
    }

    fn arb_game() -> impl Strategy<Value = PairGame> {
        (-9.0f64..-4.0, -11.0f64..-6.0, -10.0f64..-5.0, -7.0f64..-2.0, 0.05f64..5.0).prop_map(
            |(ke, ki, ie, ii, beta)| PairGame {
                g_ke: 10f64.powf(ke),
                g_ki: 10f64.powf(ki),
                g_ie: 10f64.powf(ie),
                g_ii: 10f64.powf(ii),
                p_k: 200.0,
                noise: 1e-9,
                beta,
                p_min: 1.0,
                p_max: 200.0,
            },
        )
    }

    proptest! {
        #[test]
        fn follower_response_beats_a_grid(g in arb_game(), t in 0.0f64..1.0) {
            let (lo, hi) = price_bounds(&g);
            let price = lo + t * (hi - lo);
            let p = follower_best_response(&g, price);
            let u = follower_utility(&g, price, p);
            for k in 0..=200 {
                let q = g.p_min + (g.p_max - g.p_min) * k as f64 / 200.0;
                prop_assert!(u >= follower_utility(&g, price, q) - 1e-12 * u.abs().max(1.0));
            }
        }

        #[test]
        fn leader_price_beats_a_grid(g in arb_game()) {
            let eq = leader_optimal_price(&g);
            let (lo, hi) = price_bounds(&g);
            prop_assert!(eq.price >= lo && eq.price <= hi);
            prop_assert!(eq.power >= g.p_min && eq.power <= g.p_max);
            for k in 0..=200 {
                let price = lo + (hi - lo) * k as f64 / 200.0;
                let u = leader_utility(&g, price, follower_best_response(&g, price));
                prop_assert!(u <= eq.leader_utility + 1e-9 * eq.leader_utility.abs().max(1.0));
            }
        }

        #[test]
        fn follower_utility_is_concave_in_power(g in arb_game(), t in 0.0f64..1.0, a in 1.0f64..200.0, b in 1.0f64..200.0) {
            let (lo, hi) = price_bounds(&g);
            let price = lo + t * (hi - lo);
            let mid = follower_utility(&g, price, 0.5 * (a + b));
            let chord = 0.5 * (follower_utility(&g, price, a) + follower_utility(&g, price, b));
            prop_assert!(mid >= chord - 1e-12);
        }
    }
}
