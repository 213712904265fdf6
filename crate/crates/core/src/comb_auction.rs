//! Spectrum sharing as a reverse iterative combinatorial auction.
//!
//! D2D pairs are the goods and cellular users are the bidders. A bidder
//! values a package of pairs by the sum-rate gain on its channel when the
//! whole package transmits there. Prices start high and fall; bidders place
//! XOR bids on packages they can afford, contended goods are nudged back up
//! in finer steps, and winners are frozen with their prices fixed.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of goods a valuation table is built for.
pub const MAX_ITEMS: usize = 16;
/// Limits of the exact reference allocator.
pub const ORACLE_MAX_ITEMS: usize = 12;
pub const ORACLE_MAX_BIDDERS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("too many goods: {items} (limit {limit})")]
    TooManyItems { items: usize, limit: usize },
    #[error("instance too large for exhaustive search: {bidders} bidders, {items} goods")]
    TooLargeForOracle { bidders: usize, items: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("initial prices are low enough for bidder {bidder} to bid before any price drop")]
    InitialPricesTooLow { bidder: usize },
    #[error("auction did not settle within {rounds} rounds")]
    Diverged { rounds: usize, trace: Vec<PriceEvent> },
}

// ---------------------------------------------------------------------------
// Packages and valuations
// ---------------------------------------------------------------------------

/// A set of goods stored as a bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Package(pub u32);

impl Package {
    pub const EMPTY: Package = Package(0);

    pub fn singleton(item: usize) -> Self {
        Package(1 << item)
    }

    pub fn from_items(items: &[usize]) -> Self {
        Package(items.iter().fold(0, |m, &d| m | (1 << d)))
    }

    pub fn contains(self, item: usize) -> bool {
        self.0 & (1 << item) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersects(self, other: Package) -> bool {
        self.0 & other.0 != 0
    }

    pub fn items(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |d| mask & (1 << d) != 0)
    }
}

/// Channel gains of one sharing problem. All gains are amplitudes and enter
/// the rate expressions squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharingInstance {
    pub p_bs: f64,
    pub noise: f64,
    /// Base station to each cellular user.
    pub h_bc: Vec<f64>,
    /// Base station to each D2D receiver.
    pub h_bd: Vec<f64>,
    /// `h_dc[d][c]`: D2D transmitter `d` to cellular user `c`.
    pub h_dc: Vec<Vec<f64>>,
    /// `h_pair[j][d]`: D2D transmitter `j` to D2D receiver `d`.
    pub h_pair: Vec<Vec<f64>>,
    /// Transmit power of each D2D pair.
    pub p_d: Vec<f64>,
}

impl SharingInstance {
    pub fn n_bidders(&self) -> usize {
        self.h_bc.len()
    }

    pub fn n_items(&self) -> usize {
        self.h_bd.len()
    }
}

/// Rate of cellular user `c` without any D2D pair on its channel.
pub fn baseline_rate(inst: &SharingInstance, c: usize) -> f64 {
    (1.0 + inst.p_bs * inst.h_bc[c].powi(2) / inst.noise).log2()
}

/// Sum rate on channel `c` when the pairs in `pkg` share it.
pub fn package_rate(inst: &SharingInstance, c: usize, pkg: Package) -> f64 {
    let at_cellular: f64 = pkg.items().map(|d| inst.p_d[d] * inst.h_dc[d][c].powi(2)).sum();
    let cellular = (1.0 + inst.p_bs * inst.h_bc[c].powi(2) / (at_cellular + inst.noise)).log2();
    let d2d: f64 = pkg
        .items()
        .map(|d| {
            let others: f64 = pkg
                .items()
                .filter(|&j| j != d)
                .map(|j| inst.p_d[j] * inst.h_pair[j][d].powi(2))
                .sum();
            let interference = inst.p_bs * inst.h_bd[d].powi(2) + others + inst.noise;
            (1.0 + inst.p_d[d] * inst.h_pair[d][d].powi(2) / interference).log2()
        })
        .sum();
    cellular + d2d
}

/// Rate gain of bidder `c` for `pkg`, floored at zero.
pub fn valuation(inst: &SharingInstance, c: usize, pkg: Package) -> f64 {
    (package_rate(inst, c, pkg) - baseline_rate(inst, c)).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Any package of goods may be bid on.
    Full,
    /// Bids are limited to single goods.
    Reduced,
}

/// Valuations of every bidder for every biddable package.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationTable {
    n_bidders: usize,
    n_items: usize,
    /// Row-major `[bidder][mask]`, zero for packages outside `packages`.
    values: Vec<f64>,
    packages: Vec<Package>,
}

impl ValuationTable {
    pub fn from_fn(
        n_bidders: usize,
        n_items: usize,
        variant: Variant,
        mut value: impl FnMut(usize, Package) -> f64,
    ) -> Result<Self, AuctionError> {
        if n_items > MAX_ITEMS {
            return Err(AuctionError::TooManyItems { items: n_items, limit: MAX_ITEMS });
        }
        let packages: Vec<Package> = match variant {
            Variant::Full => (1..1u32 << n_items).map(Package).collect(),
            Variant::Reduced => (0..n_items).map(Package::singleton).collect(),
        };
        let width = 1usize << n_items;
        let mut values = vec![0.0; n_bidders * width];
        for c in 0..n_bidders {
            for &k in &packages {
                let v = value(c, k);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(AuctionError::InvalidParameter {
                        name: "valuation",
                        reason: format!("bidder {c} package {:#b}: {v}", k.0),
                    });
                }
                values[c * width + k.0 as usize] = v;
            }
        }
        Ok(Self { n_bidders, n_items, values, packages })
    }

    pub fn from_instance(inst: &SharingInstance, variant: Variant) -> Result<Self, AuctionError> {
        Self::from_fn(inst.n_bidders(), inst.n_items(), variant, |c, k| valuation(inst, c, k))
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Biddable packages in increasing mask order.
    pub fn packages(&self) -> &[Package] {
        &self.packages
    }

    pub fn value(&self, bidder: usize, pkg: Package) -> f64 {
        self.values[(bidder << self.n_items) + pkg.0 as usize]
    }

    pub fn allows(&self, pkg: Package) -> bool {
        pkg.is_empty() || self.packages.binary_search(&pkg).is_ok()
    }

    /// Total value of an allocation of packages to bidders.
    pub fn allocation_value(&self, allocation: &[Package]) -> f64 {
        allocation.iter().enumerate().map(|(c, &k)| self.value(c, k)).sum()
    }

    fn max_singleton(&self) -> f64 {
        let mut best = 0.0f64;
        for c in 0..self.n_bidders {
            for d in 0..self.n_items {
                best = best.max(self.value(c, Package::singleton(d)));
            }
        }
        best
    }

    fn max_any(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Reverse iterative auction
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceEventKind {
    Drop,
    Raise,
    Sold,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceEvent {
    pub round: usize,
    pub item: usize,
    pub price: f64,
    pub event: PriceEventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionParams {
    /// Coarse price decrement.
    pub delta: f64,
    /// Contended goods rise by `delta / fine_divisor`.
    pub fine_divisor: u32,
    /// After `raise_cap_factor * fine_divisor` raises without a sale, the
    /// next contention is settled in favour of the lowest bidder index.
    pub raise_cap_factor: u32,
}

impl AuctionParams {
    pub fn new(delta: f64) -> Self {
        Self { delta, fine_divisor: 10, raise_cap_factor: 10 }
    }

    pub fn fine_step(&self) -> f64 {
        self.delta / self.fine_divisor as f64
    }

    pub fn raise_cap(&self) -> usize {
        (self.raise_cap_factor * self.fine_divisor) as usize
    }
}

/// One hundredth of the largest single-good valuation, or of the largest
/// valuation when no single good is worth anything.
pub fn default_increment(table: &ValuationTable) -> f64 {
    let base = match table.max_singleton() {
        v if v > 0.0 => v,
        _ => table.max_any(),
    };
    if base > 0.0 {
        base / 100.0
    } else {
        1e-3
    }
}

/// Opening prices a step above the most any bidder values any package
/// holding the good, so nobody can bid before prices fall.
pub fn default_initial_prices(table: &ValuationTable, delta: f64) -> Vec<f64> {
    (0..table.n_items)
        .map(|d| {
            let mut top = 0.0f64;
            for c in 0..table.n_bidders {
                for &k in table.packages.iter().filter(|k| k.contains(d)) {
                    top = top.max(table.value(c, k));
                }
            }
            top + delta
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    /// Package won by each bidder, empty when it won nothing.
    pub allocation: Vec<Package>,
    /// Price of each good when it sold, or its last price when unsold.
    pub prices: Vec<f64>,
    pub revenue: f64,
    /// Valuation minus price paid, per bidder.
    pub utilities: Vec<f64>,
    pub trace: Vec<PriceEvent>,
    /// Rounds in which at least one price fell.
    pub descending_rounds: usize,
    /// Fine-step raises applied to contended goods.
    pub raise_rounds: usize,
    pub rounds: usize,
}

impl AuctionOutcome {
    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }
}

/// Upper bound on the number of rounds the auction can take.
pub fn round_bound(table: &ValuationTable, p0: &[f64], params: &AuctionParams) -> usize {
    let d = table.n_items;
    let sales = table.n_bidders.min(d);
    let top = p0.iter().copied().fold(0.0, f64::max);
    let descend = d * ((top / params.delta).ceil() as usize + 1);
    let raises = params.raise_cap() * (sales + 1);
    // Every raise can enable at most two extra drops on a good.
    descend + 2 * d * raises + raises + sales + 1
}

pub fn run_reverse_ica(
    table: &ValuationTable,
    p0: &[f64],
    params: &AuctionParams,
) -> Result<AuctionOutcome, AuctionError> {
    let (n_c, n_d) = (table.n_bidders, table.n_items);
    if p0.len() != n_d {
        return Err(AuctionError::InvalidParameter {
            name: "p0",
            reason: format!("expected {n_d} prices, got {}", p0.len()),
        });
    }
    if !(params.delta > 0.0 && params.delta.is_finite()) || params.fine_divisor == 0 {
        return Err(AuctionError::InvalidParameter {
            name: "delta",
            reason: "increment and divisor must be positive".into(),
        });
    }
    let fine = params.fine_step();
    let cap = round_bound(table, p0, params);

    let mut prices = p0.to_vec();
    let mut sold = Package::EMPTY;
    let mut active = vec![true; n_c];
    let mut allocation = vec![Package::EMPTY; n_c];
    let mut utilities = vec![0.0; n_c];
    let mut revenue = 0.0;
    let mut trace = Vec::new();
    let (mut rounds, mut descending_rounds, mut raise_rounds) = (0usize, 0usize, 0usize);
    let mut raises_since_sale = 0usize;

    let price_of = |prices: &[f64], k: Package| k.items().map(|d| prices[d]).sum::<f64>();

    // Per active bidder: every package it would bid on and its preferred one.
    let collect_bids = |prices: &[f64], sold: Package, active: &[bool]| {
        let mut demanded = Package::EMPTY;
        let mut choice: Vec<Option<Package>> = vec![None; n_c];
        for c in (0..n_c).filter(|&c| active[c]) {
            let mut best: Option<(f64, Package)> = None;
            for &k in table.packages.iter().filter(|k| !k.intersects(sold)) {
                let v = table.value(c, k);
                if v <= 0.0 {
                    continue;
                }
                let u = v - price_of(prices, k);
                if u < 0.0 {
                    continue;
                }
                demanded.0 |= k.0;
                if best.is_none_or(|(bu, _)| u > bu) {
                    best = Some((u, k));
                }
            }
            choice[c] = best.map(|b| b.1);
        }
        (choice, demanded)
    };

    let (opening, _) = collect_bids(&prices, sold, &active);
    if let Some(c) = opening.iter().position(Option::is_some) {
        return Err(AuctionError::InitialPricesTooLow { bidder: c });
    }

    loop {
        if sold.len() == n_d || active.iter().all(|a| !a) {
            break;
        }
        rounds += 1;
        if rounds > cap {
            return Err(AuctionError::Diverged { rounds: cap, trace });
        }

        let (mut choice, _) = collect_bids(&prices, sold, &active);

        let mut claimed = Package::EMPTY;
        let mut contested = Package::EMPTY;
        for k in choice.iter().flatten() {
            contested.0 |= claimed.0 & k.0;
            claimed.0 |= k.0;
        }

        if !contested.is_empty() {
            if raises_since_sale < params.raise_cap() {
                for d in contested.items() {
                    prices[d] += fine;
                    trace.push(PriceEvent { round: rounds, item: d, price: prices[d], event: PriceEventKind::Raise });
                }
                raises_since_sale += 1;
                raise_rounds += 1;
                continue;
            }
            // Settle by bidder index: earlier bidders keep their bids.
            let mut granted = Package::EMPTY;
            for k in choice.iter_mut() {
                if let Some(pkg) = *k {
                    if pkg.intersects(granted) {
                        *k = None;
                    } else {
                        granted.0 |= pkg.0;
                    }
                }
            }
        }

        let mut any_sale = false;
        for c in 0..n_c {
            let Some(k) = choice[c] else { continue };
            let paid = price_of(&prices, k);
            allocation[c] = k;
            utilities[c] = table.value(c, k) - paid;
            revenue += paid;
            active[c] = false;
            sold.0 |= k.0;
            for d in k.items() {
                trace.push(PriceEvent { round: rounds, item: d, price: prices[d], event: PriceEventKind::Sold });
            }
            any_sale = true;
        }
        if any_sale {
            raises_since_sale = 0;
        }

        // Goods nobody left in the auction bids on get cheaper.
        let (_, demanded) = collect_bids(&prices, sold, &active);
        let mut any_drop = false;
        for d in 0..n_d {
            if sold.contains(d) || demanded.contains(d) || prices[d] <= 0.0 {
                continue;
            }
            prices[d] = (prices[d] - params.delta).max(0.0);
            trace.push(PriceEvent { round: rounds, item: d, price: prices[d], event: PriceEventKind::Drop });
            any_drop = true;
        }
        if any_drop {
            descending_rounds += 1;
        }
        if !any_sale && !any_drop {
            // Nothing is demanded and every unsold good is already free.
            break;
        }
    }

    Ok(AuctionOutcome {
        allocation,
        prices,
        revenue,
        utilities,
        trace,
        descending_rounds,
        raise_rounds,
        rounds,
    })
}

// ---------------------------------------------------------------------------
// Reference allocators
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalAllocation {
    pub allocation: Vec<Package>,
    pub value: f64,
}

/// Welfare-maximising allocation by dynamic programming over bidders and
/// the set of goods still free. Packages with zero value are never
/// assigned. Ties favour giving goods to lower-index bidders.
pub fn optimal_allocation(table: &ValuationTable) -> Result<OptimalAllocation, AuctionError> {
    let (n_c, n_d) = (table.n_bidders, table.n_items);
    if n_d > ORACLE_MAX_ITEMS || n_c > ORACLE_MAX_BIDDERS {
        return Err(AuctionError::TooLargeForOracle { bidders: n_c, items: n_d });
    }
    let width = 1usize << n_d;
    // best[c][free]: most value bidders c.. can draw from the goods in `free`.
    let mut best = vec![0.0f64; (n_c + 1) * width];
    let mut pick = vec![Package::EMPTY; n_c * width];
    for c in (0..n_c).rev() {
        for free in 0..width {
            let mut top = best[(c + 1) * width + free];
            let mut chosen = Package::EMPTY;
            // Walk the sub-masks of `free` in increasing order.
            let mut sub = 0usize;
            loop {
                sub = (sub.wrapping_sub(free)) & free;
                if sub == 0 {
                    break;
                }
                let k = Package(sub as u32);
                let v = table.value(c, k);
                if v > 0.0 && table.allows(k) {
                    let total = v + best[(c + 1) * width + (free & !sub)];
                    if total > top || (total == top && chosen.is_empty()) {
                        top = total;
                        chosen = k;
                    }
                }
            }
            best[c * width + free] = top;
            pick[c * width + free] = chosen;
        }
    }
    let mut allocation = vec![Package::EMPTY; n_c];
    let mut free = width - 1;
    for c in 0..n_c {
        let k = pick[c * width + free];
        allocation[c] = k;
        free &= !(k.0 as usize);
    }
    Ok(OptimalAllocation { value: best[width - 1], allocation })
}

/// Sum of all cellular and D2D rates for an allocation of pairs to channels.
pub fn system_sum_rate(inst: &SharingInstance, allocation: &[Package]) -> f64 {
    allocation.iter().enumerate().map(|(c, &k)| package_rate(inst, c, k)).sum()
}

/// Ratio of an allocation's sum rate to the best achievable sum rate.
pub fn system_efficiency(inst: &SharingInstance, allocation: &[Package], optimal: &[Package]) -> f64 {
    system_sum_rate(inst, allocation) / system_sum_rate(inst, optimal)
}

/// Places every pair on a uniformly chosen channel.
pub fn random_allocation<R: Rng + ?Sized>(rng: &mut R, n_bidders: usize, n_items: usize) -> Vec<Package> {
    let mut allocation = vec![Package::EMPTY; n_bidders];
    if n_bidders == 0 {
        return allocation;
    }
    for d in 0..n_items {
        let c = rng.random_range(0..n_bidders);
        allocation[c].0 |= 1 << d;
    }
    allocation
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Literal enumeration of every assignment of goods to bidders or to
    /// nobody, kept separate from the dynamic program above.
    fn brute_force(table: &ValuationTable) -> f64 {
        let (n_c, n_d) = (table.n_bidders(), table.n_items());
        let mut best = 0.0f64;
        let mut owner = vec![0usize; n_d];
        loop {
            let mut pkgs = vec![Package::EMPTY; n_c];
            for (d, &o) in owner.iter().enumerate() {
                if o > 0 {
                    pkgs[o - 1].0 |= 1 << d;
                }
            }
            if pkgs.iter().all(|&k| table.allows(k)) {
                best = best.max(table.allocation_value(&pkgs));
            }
            let mut i = 0;
            loop {
                if i == n_d {
                    return best;
                }
                owner[i] += 1;
                if owner[i] <= n_c {
                    break;
                }
                owner[i] = 0;
                i += 1;
            }
        }
    }

    fn random_instance(rng: &mut ChaCha8Rng, n_c: usize, n_d: usize) -> SharingInstance {
        let mut g = |lo: f64, hi: f64| rng.random_range(lo..hi);
        SharingInstance {
            p_bs: 1.0,
            noise: 1e-3,
            h_bc: (0..n_c).map(|_| g(0.05, 1.0)).collect(),
            h_bd: (0..n_d).map(|_| g(0.001, 0.1)).collect(),
            h_dc: (0..n_d).map(|_| (0..n_c).map(|_| g(0.001, 0.2)).collect()).collect(),
            h_pair: (0..n_d)
                .map(|j| (0..n_d).map(|d| if j == d { g(0.3, 2.0) } else { g(0.001, 0.2) }).collect())
                .collect(),
            p_d: vec![0.2; n_d],
        }
    }

    #[test]
    fn package_masks() {
        let k = Package::from_items(&[0, 2, 5]);
        assert_eq!(k.len(), 3);
        assert!(k.contains(2) && !k.contains(1));
        assert_eq!(k.items().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert!(k.intersects(Package::singleton(5)));
    }

    #[test]
    fn empty_package_leaves_baseline_rate() {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(1), 2, 3);
        assert_eq!(package_rate(&inst, 1, Package::EMPTY), baseline_rate(&inst, 1));
        assert_eq!(valuation(&inst, 1, Package::EMPTY), 0.0);
    }

    #[test]
    fn package_rate_reference_value() {
        let inst = SharingInstance {
            p_bs: 2.0,
            noise: 1.0,
            h_bc: vec![1.0],
            h_bd: vec![0.5],
            h_dc: vec![vec![1.0]],
            h_pair: vec![vec![2.0]],
            p_d: vec![1.0],
        };
        // cellular 2 / (1 + 1) = 1, d2d 4 / (0.5 + 1)
        let expected = 2f64.log2() + (1.0 + 4.0 / 1.5f64).log2();
        assert_relative_eq!(package_rate(&inst, 0, Package::singleton(0)), expected, epsilon = 1e-12);
    }

    #[test]
    fn single_bidder_single_good_sells_within_one_step_of_value() {
        let table = ValuationTable::from_fn(1, 1, Variant::Full, |_, _| 3.0).unwrap();
        let delta = default_increment(&table);
        let out = run_reverse_ica(&table, &default_initial_prices(&table, delta), &AuctionParams::new(delta)).unwrap();
        assert_eq!(out.allocation, vec![Package::singleton(0)]);
        assert!(out.prices[0] <= 3.0 && out.prices[0] > 3.0 - delta - 1e-12);
    }

    #[test]
    fn worthless_goods_go_unsold() {
        let table = ValuationTable::from_fn(2, 3, Variant::Full, |_, _| 0.0).unwrap();
        let delta = default_increment(&table);
        let out = run_reverse_ica(&table, &default_initial_prices(&table, delta), &AuctionParams::new(delta)).unwrap();
        assert!(out.allocation.iter().all(|k| k.is_empty()));
        assert_eq!(out.revenue, 0.0);
        let opt = optimal_allocation(&table).unwrap();
        assert_eq!(opt.value, 0.0);
        assert!(opt.allocation.iter().all(|k| k.is_empty()));
    }

    #[test]
    fn bid_at_exact_price_has_zero_utility() {
        let table = ValuationTable::from_fn(1, 1, Variant::Full, |_, _| 1.0).unwrap();
        let params = AuctionParams::new(0.5);
        let out = run_reverse_ica(&table, &[2.0], &params).unwrap();
        assert_eq!(out.prices[0], 1.0);
        assert_eq!(out.utilities[0], 0.0);
    }

    #[test]
    fn low_opening_prices_are_rejected() {
        let table = ValuationTable::from_fn(1, 1, Variant::Full, |_, _| 1.0).unwrap();
        assert_eq!(
            run_reverse_ica(&table, &[0.5], &AuctionParams::new(0.1)),
            Err(AuctionError::InitialPricesTooLow { bidder: 0 })
        );
    }

    #[test]
    fn close_rivals_push_the_price_back_up() {
        // Both bidders start bidding in the same round; raises continue until
        // the weaker one drops out.
        let table = ValuationTable::from_fn(2, 1, Variant::Full, |c, _| if c == 0 { 1.0 } else { 0.995 }).unwrap();
        let params = AuctionParams::new(0.01);
        let out = run_reverse_ica(&table, &[1.0 + 0.011], &params).unwrap();
        assert_eq!(out.allocation[0], Package::singleton(0));
        assert!(out.raise_rounds > 0);
        let prices: Vec<f64> = out.trace.iter().map(|e| e.price).collect();
        assert!(prices.windows(2).any(|w| w[1] > w[0]));
        assert!(out.prices[0] > 0.995 && out.prices[0] <= 1.0);
    }

    #[test]
    fn identical_rivals_are_settled_by_index() {
        let table = ValuationTable::from_fn(2, 1, Variant::Full, |_, _| 1.0).unwrap();
        let out = run_reverse_ica(&table, &[1.05], &AuctionParams::new(0.1)).unwrap();
        assert_eq!(out.allocation, vec![Package::singleton(0), Package::EMPTY]);
    }

    #[test]
    fn oracle_guard() {
        let table = ValuationTable::from_fn(9, 2, Variant::Full, |_, _| 1.0).unwrap();
        assert!(matches!(optimal_allocation(&table), Err(AuctionError::TooLargeForOracle { .. })));
    }

    #[test]
    fn random_allocation_covers_every_pair_once() {
        let alloc = random_allocation(&mut ChaCha8Rng::seed_from_u64(5), 3, 7);
        let total: u32 = alloc.iter().map(|k| k.0).fold(0, |a, b| {
            assert_eq!(a & b, 0);
            a | b
        });
        assert_eq!(total, 0b111_1111);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn oracle_matches_brute_force(seed in any::<u64>(), n_c in 1usize..4, n_d in 1usize..5, reduced in any::<bool>()) {
            let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n_c, n_d);
            let variant = if reduced { Variant::Reduced } else { Variant::Full };
            let table = ValuationTable::from_instance(&inst, variant).unwrap();
            let opt = optimal_allocation(&table).unwrap();
            prop_assert!((opt.value - brute_force(&table)).abs() < 1e-12);
            prop_assert!((table.allocation_value(&opt.allocation) - opt.value).abs() < 1e-12);
        }

        #[test]
        fn reduced_bids_never_beat_full_bids(seed in any::<u64>(), n_c in 1usize..4, n_d in 1usize..5) {
            let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n_c, n_d);
            let full = optimal_allocation(&ValuationTable::from_instance(&inst, Variant::Full).unwrap()).unwrap();
            let reduced = optimal_allocation(&ValuationTable::from_instance(&inst, Variant::Reduced).unwrap()).unwrap();
            prop_assert!(full.value >= reduced.value - 1e-12);
        }

        #[test]
        fn auction_outcome_is_consistent(seed in any::<u64>(), n_c in 1usize..5, n_d in 1usize..6, reduced in any::<bool>()) {
            let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n_c, n_d);
            let variant = if reduced { Variant::Reduced } else { Variant::Full };
            let table = ValuationTable::from_instance(&inst, variant).unwrap();
            let delta = default_increment(&table);
            let p0 = default_initial_prices(&table, delta);
            let params = AuctionParams::new(delta);
            let out = run_reverse_ica(&table, &p0, &params).unwrap();

            let mut seen = Package::EMPTY;
            for (c, &k) in out.allocation.iter().enumerate() {
                prop_assert!(!k.intersects(seen));
                seen.0 |= k.0;
                prop_assert!(table.allows(k));
                prop_assert!(out.utilities[c] >= -1e-12);
                if reduced {
                    prop_assert!(k.len() <= 1);
                }
            }
            prop_assert!(out.prices.iter().all(|&p| p >= 0.0));
            let welfare = table.allocation_value(&out.allocation);
            prop_assert!((out.revenue + out.total_utility() - welfare).abs() < 1e-9);
            prop_assert!(out.rounds <= round_bound(&table, &p0, &params));
            let oracle = optimal_allocation(&table).unwrap();
            prop_assert!(welfare <= oracle.value + 1e-12);
        }

        #[test]
        fn cross_gains_lower_single_pair_utility(seed in any::<u64>(), bump in 1e-4f64..1e-2) {
            let mut inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 1, 1);
            let utility = |inst: &SharingInstance| {
                package_rate(inst, 0, Package::singleton(0)) - baseline_rate(inst, 0) - 0.1
            };
            let base = utility(&inst);
            inst.h_dc[0][0] += bump;
            prop_assert!(utility(&inst) < base);
            inst.h_dc[0][0] -= bump;
            inst.h_bd[0] += bump;
            prop_assert!(utility(&inst) < base);
        }
    }
}
