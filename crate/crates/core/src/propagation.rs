//! Path loss, shadowing and fast fading for cellular and D2D links, and random
//! user drops over a single cell or a 19-cell hexagonal layout.
//!
//! All distances are in metres, powers in mW and gains are linear power gains
//! unless a name says otherwise.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::db_to_linear;

const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Shortest distance the short-range rows are evaluated at.
const MIN_SHORT_RANGE_M: f64 = 1.0;
const CELLULAR_LOS_WINDOW: (f64, f64) = (10.0, 5000.0);
const CELLULAR_NLOS_WINDOW: (f64, f64) = (50.0, 5000.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("distance must be positive and finite, got {0}")]
    InvalidDistance(f64),
    #[error("transmitter and receiver positions coincide")]
    CoincidentPositions,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("pair distance limit {limit} m exceeds the cell diameter {diameter} m")]
    PairDistanceTooLarge { limit: f64, diameter: f64 },
}

type Result<T> = std::result::Result<T, PropagationError>;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    pub carrier_frequency_hz: f64,
    pub bs_height_m: f64,
    pub ms_height_m: f64,
    /// Subtracted from both antenna heights to get effective heights.
    pub environment_height_m: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_bs_db: f64,
    pub noise_figure_ue_db: f64,
    pub bandwidth_hz: f64,
    pub antenna_gain_bs_dbi: f64,
    pub antenna_gain_ue_dbi: f64,
    /// Wall count for the non-line-of-sight short-range row.
    pub n_walls: u32,
    /// Indoor leg of an outdoor-to-indoor interference link.
    pub indoor_distance_m: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 2.0e9,
            bs_height_m: 25.0,
            ms_height_m: 1.5,
            environment_height_m: 1.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_bs_db: 5.0,
            noise_figure_ue_db: 9.0,
            bandwidth_hz: 15.0e3,
            antenna_gain_bs_dbi: 14.0,
            antenna_gain_ue_dbi: 0.0,
            n_walls: 1,
            indoor_distance_m: 5.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.environment_height_m >= 0.0) {
            return Err(invalid("environment_height_m", "must be non-negative".into()));
        }
        if !(self.bs_height_m > self.environment_height_m) {
            return Err(invalid("bs_height_m", "must exceed the environment height".into()));
        }
        if !(self.ms_height_m > self.environment_height_m) {
            return Err(invalid("ms_height_m", "must exceed the environment height".into()));
        }
        if self.n_walls == 0 {
            return Err(invalid("n_walls", "at least one wall".into()));
        }
        if !(self.indoor_distance_m >= 0.0) {
            return Err(invalid("indoor_distance_m", "must be non-negative".into()));
        }
        Ok(())
    }

    /// Breakpoint distance of the cellular line-of-sight row.
    pub fn breakpoint_m(&self) -> f64 {
        let h_bs = self.bs_height_m - self.environment_height_m;
        let h_ms = self.ms_height_m - self.environment_height_m;
        4.0 * h_bs * h_ms * self.carrier_frequency_hz / SPEED_OF_LIGHT
    }

    /// Thermal noise plus receiver noise figure over the configured bandwidth, in mW.
    pub fn noise_power_mw(&self, at: Receiver) -> f64 {
        let nf = match at {
            Receiver::Bs => self.noise_figure_bs_db,
            Receiver::Ue => self.noise_figure_ue_db,
        };
        db_to_linear(self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10() + nf)
    }
}

fn invalid(name: &'static str, reason: String) -> PropagationError {
    PropagationError::InvalidParameter { name, reason }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receiver {
    Bs,
    Ue,
}

// ---------------------------------------------------------------------------
// Path loss
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LinkScenario {
    D2dLos,
    D2dNlos { n_walls: u32 },
    CellularLos,
    CellularNlos,
    /// `d_in` is the indoor part of the total distance, `theta` the incidence
    /// angle on the wall in radians.
    OutdoorToIndoor { d_in: f64, theta: f64 },
    /// Plain `d^-exponent` loss without shadowing.
    PowerLaw { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    pub shadow_sigma_db: f64,
    /// Set when the distance fell outside the row's validity window and was
    /// moved to the nearest edge.
    pub clamped: bool,
}

pub fn path_loss(scenario: LinkScenario, d: f64, params: &PropagationParams) -> Result<PathLoss> {
    if !(d.is_finite() && d > 0.0) {
        return Err(PropagationError::InvalidDistance(d));
    }
    let short = |d: f64| (d.max(MIN_SHORT_RANGE_M), d < MIN_SHORT_RANGE_M);
    let pl = match scenario {
        LinkScenario::D2dLos => {
            let (d, clamped) = short(d);
            PathLoss { db: 18.7 * d.log10() + 46.8, shadow_sigma_db: 3.0, clamped }
        }
        LinkScenario::D2dNlos { n_walls } => {
            if n_walls == 0 {
                return Err(invalid("n_walls", "at least one wall".into()));
            }
            let (d, clamped) = short(d);
            let walls = 5.0 * (n_walls as f64 - 1.0);
            PathLoss { db: 36.8 * d.log10() + 43.8 + walls, shadow_sigma_db: 4.0, clamped }
        }
        LinkScenario::CellularLos => cellular_los(d, params),
        LinkScenario::CellularNlos => {
            let (lo, hi) = CELLULAR_NLOS_WINDOW;
            let dc = d.clamp(lo, hi);
            let h = params.bs_height_m.log10();
            PathLoss {
                db: (44.9 - 6.55 * h) * dc.log10() + 34.46 + 5.83 * h,
                shadow_sigma_db: 8.0,
                clamped: dc != d,
            }
        }
        LinkScenario::OutdoorToIndoor { d_in, theta } => {
            if !(d_in >= 0.0 && d_in <= d) {
                return Err(invalid("d_in", format!("indoor leg {d_in} must lie in [0, {d}]")));
            }
            // The outdoor street-canyon part is represented by the cellular
            // line-of-sight row over the full distance.
            let outdoor = cellular_los(d, params);
            let wall = 14.0 + 15.0 * (1.0 - theta.cos()).powi(2);
            PathLoss {
                db: outdoor.db + wall + 0.5 * d_in,
                shadow_sigma_db: 7.0,
                clamped: outdoor.clamped,
            }
        }
        LinkScenario::PowerLaw { exponent } => {
            if !(exponent.is_finite() && exponent > 0.0) {
                return Err(invalid("exponent", format!("must be positive, got {exponent}")));
            }
            let (d, clamped) = short(d);
            PathLoss { db: 10.0 * exponent * d.log10(), shadow_sigma_db: 0.0, clamped }
        }
    };
    Ok(pl)
}

/// Convenience wrapper returning only the dB value.
pub fn path_loss_db(scenario: LinkScenario, d: f64, params: &PropagationParams) -> Result<f64> {
    path_loss(scenario, d, params).map(|p| p.db)
}

fn cellular_los(d: f64, params: &PropagationParams) -> PathLoss {
    let (lo, hi) = CELLULAR_LOS_WINDOW;
    let dc = d.clamp(lo, hi);
    let bp = params.breakpoint_m();
    let (db, sigma) = if dc < bp {
        (26.0 * dc.log10() + 39.0, 4.0)
    } else {
        let h_bs = params.bs_height_m - params.environment_height_m;
        let h_ms = params.ms_height_m - params.environment_height_m;
        (40.0 * dc.log10() + 13.47 - 14.0 * h_bs.log10() - 14.0 * h_ms.log10(), 6.0)
    };
    PathLoss { db, shadow_sigma_db: sigma, clamped: dc != d }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LosFamily {
    D2d,
    Cellular,
}

pub fn los_probability(family: LosFamily, d: f64) -> f64 {
    match family {
        LosFamily::D2d => {
            if d <= 2.5 {
                1.0
            } else {
                let x = 1.24 - 0.61 * d.log10();
                (1.0 - 0.9 * (1.0 - x.powi(3)).cbrt()).clamp(0.0, 1.0)
            }
        }
        LosFamily::Cellular => {
            let e = (-d / 63.0).exp();
            ((18.0 / d).min(1.0) * (1.0 - e) + e).clamp(0.0, 1.0)
        }
    }
}

// ---------------------------------------------------------------------------
// Link draws
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LinkFamily {
    /// Desired link inside a D2D pair.
    D2d,
    /// Any link with a base station at one end.
    Cellular,
    /// Device-to-device interference. Links no longer than `indoor_radius_m`
    /// use the short-range rows, longer ones the outdoor-to-indoor row.
    Interference { indoor_radius_m: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGain {
    pub scenario: LinkScenario,
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub shadow_db: f64,
    /// Squared magnitude of a unit-variance circular Gaussian coefficient.
    pub fading_power: f64,
    pub antenna_gain_db: f64,
    /// Composite linear power gain including fading and antenna gains.
    pub gain: f64,
}

impl LinkGain {
    pub fn new(
        scenario: LinkScenario,
        distance_m: f64,
        path_loss_db: f64,
        shadow_db: f64,
        fading_power: f64,
        antenna_gain_db: f64,
    ) -> Self {
        let gain = db_to_linear(antenna_gain_db - path_loss_db - shadow_db) * fading_power;
        Self { scenario, distance_m, path_loss_db, shadow_db, fading_power, antenna_gain_db, gain }
    }

    /// Composite gain in dB.
    pub fn gain_db(&self) -> f64 {
        self.antenna_gain_db - self.path_loss_db - self.shadow_db + 10.0 * self.fading_power.log10()
    }

    /// Gain without the fast-fading term.
    pub fn large_scale_gain(&self) -> f64 {
        db_to_linear(self.antenna_gain_db - self.path_loss_db - self.shadow_db)
    }

    /// Path loss plus shadowing minus antenna gains, in dB.
    pub fn coupling_loss_db(&self) -> f64 {
        self.path_loss_db + self.shadow_db - self.antenna_gain_db
    }

    /// Amplitude gain, the square root of the composite power gain.
    pub fn amplitude(&self) -> f64 {
        self.gain.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// Distance-dependent rows with line-of-sight selection and log-normal shadowing.
    Winner,
    /// `d^-exponent` path loss with Rayleigh fading and no antenna gains.
    PowerLaw { exponent: f64 },
}

fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let f: f64 = Exp1.sample(rng);
    f.max(f64::MIN_POSITIVE)
}

/// Draws the composite gain of one link at distance `d`.
pub fn draw_link<R: Rng + ?Sized>(
    rng: &mut R,
    family: LinkFamily,
    d: f64,
    params: &PropagationParams,
) -> Result<LinkGain> {
    if !(d.is_finite() && d > 0.0) {
        return Err(if d == 0.0 {
            PropagationError::CoincidentPositions
        } else {
            PropagationError::InvalidDistance(d)
        });
    }
    let d2d_rows = |rng: &mut R| {
        if rng.random::<f64>() < los_probability(LosFamily::D2d, d) {
            LinkScenario::D2dLos
        } else {
            LinkScenario::D2dNlos { n_walls: params.n_walls }
        }
    };
    let (scenario, antenna) = match family {
        LinkFamily::D2d => (d2d_rows(rng), 2.0 * params.antenna_gain_ue_dbi),
        LinkFamily::Cellular => {
            let s = if rng.random::<f64>() < los_probability(LosFamily::Cellular, d) {
                LinkScenario::CellularLos
            } else {
                LinkScenario::CellularNlos
            };
            (s, params.antenna_gain_bs_dbi + params.antenna_gain_ue_dbi)
        }
        LinkFamily::Interference { indoor_radius_m } => {
            let s = if d <= indoor_radius_m {
                d2d_rows(rng)
            } else {
                LinkScenario::OutdoorToIndoor { d_in: params.indoor_distance_m.min(d), theta: 0.0 }
            };
            (s, 2.0 * params.antenna_gain_ue_dbi)
        }
    };
    let pl = path_loss(scenario, d, params)?;
    let z: f64 = StandardNormal.sample(rng);
    let fading = draw_fading(rng);
    Ok(LinkGain::new(scenario, d, pl.db, z * pl.shadow_sigma_db, fading, antenna))
}

/// Draws a `d^-exponent` link with Rayleigh fading.
pub fn draw_power_law_link<R: Rng + ?Sized>(rng: &mut R, d: f64, exponent: f64) -> Result<LinkGain> {
    if d == 0.0 {
        return Err(PropagationError::CoincidentPositions);
    }
    let scenario = LinkScenario::PowerLaw { exponent };
    let pl = path_loss(scenario, d, &PropagationParams::default())?;
    Ok(LinkGain::new(scenario, d, pl.db, 0.0, draw_fading(rng), 0.0))
}

/// Received power in mW.
#[inline]
pub fn received_power(p_tx_mw: f64, link: &LinkGain) -> f64 {
    p_tx_mw * link.gain
}

// ---------------------------------------------------------------------------
// Geometry and drops
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn offset(&self, r: f64, angle: f64) -> Point {
        Point::new(self.x + r * angle.cos(), self.y + r * angle.sin())
    }
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, centre: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let angle = std::f64::consts::TAU * rng.random::<f64>();
    centre.offset(r, angle)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    SingleCell { radius_m: f64 },
    /// Centre cell plus two rings, inter-site distance `sqrt(3) * radius_m`.
    Hex19 { radius_m: f64 },
}

impl Layout {
    pub fn radius_m(&self) -> f64 {
        match *self {
            Layout::SingleCell { radius_m } | Layout::Hex19 { radius_m } => radius_m,
        }
    }

    pub fn base_stations(&self) -> Vec<Point> {
        match *self {
            Layout::SingleCell { .. } => vec![Point::ORIGIN],
            Layout::Hex19 { radius_m } => {
                let isd = 3f64.sqrt() * radius_m;
                let mut sites: Vec<(i32, f64, Point)> = Vec::with_capacity(19);
                for q in -2i32..=2 {
                    for r in -2i32..=2 {
                        let ring = q.abs().max(r.abs()).max((q + r).abs());
                        if ring > 2 {
                            continue;
                        }
                        let p = Point::new(
                            isd * (q as f64 + r as f64 / 2.0),
                            isd * (r as f64 * 3f64.sqrt() / 2.0),
                        );
                        let angle = p.y.atan2(p.x).rem_euclid(std::f64::consts::TAU);
                        sites.push((ring, if ring == 0 { 0.0 } else { angle }, p));
                    }
                }
                sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                sites.into_iter().map(|s| s.2).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropConfig {
    pub layout: Layout,
    pub cellular_per_cell: usize,
    pub pairs_per_cell: usize,
    /// Largest distance between the two members of a D2D pair.
    pub pair_distance_m: f64,
    /// When set, the first member of every pair sits at this fraction of the
    /// cell radius from its base station instead of anywhere in the cell.
    pub anchor_fraction: Option<f64>,
    pub channel: ChannelModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Bs(usize),
    Cellular(usize),
    D2dTx(usize),
    D2dRx(usize),
}

/// One random realisation of user positions and every link gain between them.
#[derive(Clone, Debug)]
pub struct UserDrop {
    pub config: DropConfig,
    pub bs: Vec<Point>,
    pub cellular: Vec<Point>,
    pub d2d_tx: Vec<Point>,
    pub d2d_rx: Vec<Point>,
    gains: Vec<Option<LinkGain>>,
}

impl UserDrop {
    pub fn n_cells(&self) -> usize {
        self.bs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.bs.len() + self.cellular.len() + self.d2d_tx.len() + self.d2d_rx.len()
    }

    fn index(&self, node: Node) -> usize {
        let (nb, nc, nt) = (self.bs.len(), self.cellular.len(), self.d2d_tx.len());
        match node {
            Node::Bs(i) => i,
            Node::Cellular(i) => nb + i,
            Node::D2dTx(i) => nb + nc + i,
            Node::D2dRx(i) => nb + nc + nt + i,
        }
    }

    pub fn position(&self, node: Node) -> Point {
        match node {
            Node::Bs(i) => self.bs[i],
            Node::Cellular(i) => self.cellular[i],
            Node::D2dTx(i) => self.d2d_tx[i],
            Node::D2dRx(i) => self.d2d_rx[i],
        }
    }

    pub fn distance(&self, a: Node, b: Node) -> f64 {
        self.position(a).distance(&self.position(b))
    }

    /// Index of the cell a node belongs to.
    pub fn cell_of(&self, node: Node) -> usize {
        match node {
            Node::Bs(i) => i,
            Node::Cellular(i) => i / self.config.cellular_per_cell,
            Node::D2dTx(i) | Node::D2dRx(i) => i / self.config.pairs_per_cell,
        }
    }

    pub fn try_link(&self, a: Node, b: Node) -> Option<&LinkGain> {
        let n = self.n_nodes();
        self.gains[self.index(a) * n + self.index(b)].as_ref()
    }

    /// Link between two nodes. Links are reciprocal.
    ///
    /// # Panics
    /// If the pair is one that drops never populate (base station to base
    /// station, transmitter to transmitter, receiver to receiver, or a node
    /// to itself).
    pub fn link(&self, a: Node, b: Node) -> &LinkGain {
        self.try_link(a, b)
            .unwrap_or_else(|| panic!("no link drawn between {a:?} and {b:?}"))
    }

    /// Composite linear gain between two nodes.
    pub fn gain(&self, a: Node, b: Node) -> f64 {
        self.link(a, b).gain
    }

    fn nodes(&self) -> Vec<Node> {
        let mut v = Vec::with_capacity(self.n_nodes());
        v.extend((0..self.bs.len()).map(Node::Bs));
        v.extend((0..self.cellular.len()).map(Node::Cellular));
        v.extend((0..self.d2d_tx.len()).map(Node::D2dTx));
        v.extend((0..self.d2d_rx.len()).map(Node::D2dRx));
        v
    }
}

fn link_family(a: Node, b: Node, indoor_radius_m: f64) -> Option<LinkFamily> {
    use Node::*;
    match (a, b) {
        (Bs(_), Bs(_)) | (D2dTx(_), D2dTx(_)) | (D2dRx(_), D2dRx(_)) => None,
        (Bs(_), _) | (_, Bs(_)) => Some(LinkFamily::Cellular),
        (D2dTx(i), D2dRx(j)) | (D2dRx(j), D2dTx(i)) if i == j => Some(LinkFamily::D2d),
        _ => Some(LinkFamily::Interference { indoor_radius_m }),
    }
}

/// Places users and draws every link gain for one drop.
///
/// Cellular users and first pair members are uniform in their cell disc.
/// Second members are uniform within `pair_distance_m` of their partner and
/// are redrawn until they fall inside the same cell.
pub fn drop_users<R: Rng + ?Sized>(
    rng: &mut R,
    config: &DropConfig,
    params: &PropagationParams,
) -> Result<UserDrop> {
    let radius = config.layout.radius_m();
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius_m", format!("must be positive, got {radius}")));
    }
    let limit = config.pair_distance_m;
    if !(limit.is_finite() && limit > 0.0) {
        return Err(invalid("pair_distance_m", format!("must be positive, got {limit}")));
    }
    if limit > 2.0 * radius {
        return Err(PropagationError::PairDistanceTooLarge { limit, diameter: 2.0 * radius });
    }
    if let Some(f) = config.anchor_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(invalid("anchor_fraction", format!("must lie in [0, 1], got {f}")));
        }
    }
    if let ChannelModel::PowerLaw { exponent } = config.channel {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(invalid("exponent", format!("must be positive, got {exponent}")));
        }
    } else {
        params.validate()?;
    }

    let bs = config.layout.base_stations();
    let mut cellular = Vec::with_capacity(bs.len() * config.cellular_per_cell);
    let mut d2d_tx = Vec::with_capacity(bs.len() * config.pairs_per_cell);
    let mut d2d_rx = Vec::with_capacity(bs.len() * config.pairs_per_cell);
    for &site in &bs {
        for _ in 0..config.cellular_per_cell {
            cellular.push(uniform_in_disc(rng, site, radius));
        }
        for _ in 0..config.pairs_per_cell {
            let first = match config.anchor_fraction {
                Some(f) => site.offset(f * radius, std::f64::consts::TAU * rng.random::<f64>()),
                None => uniform_in_disc(rng, site, radius),
            };
            let second = loop {
                let p = uniform_in_disc(rng, first, limit);
                if p.distance(&site) <= radius {
                    break p;
                }
            };
            d2d_tx.push(first);
            d2d_rx.push(second);
        }
    }

    let mut drop = UserDrop { config: config.clone(), bs, cellular, d2d_tx, d2d_rx, gains: Vec::new() };
    let nodes = drop.nodes();
    let n = nodes.len();
    let mut gains = vec![None; n * n];
    for (ia, &a) in nodes.iter().enumerate() {
        for (ib, &b) in nodes.iter().enumerate().skip(ia + 1) {
            let Some(family) = link_family(a, b, limit) else { continue };
            let d = drop.distance(a, b);
            let link = match config.channel {
                ChannelModel::Winner => draw_link(rng, family, d, params)?,
                ChannelModel::PowerLaw { exponent } => draw_power_law_link(rng, d, exponent)?,
            };
            gains[ia * n + ib] = Some(link);
            gains[ib * n + ia] = Some(link);
        }
    }
    drop.gains = gains;
    Ok(drop)
}

// ---------------------------------------------------------------------------
// Mode selection
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCriterion {
    /// Always relay through the base station.
    Cellular,
    /// Always use the direct link.
    ForceD2d,
    /// Use the direct link when it is weaker in loss than either cellular hop.
    PathLoss,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cellular,
    D2d,
}

pub fn select_mode(pl_src_bs_db: f64, pl_dst_bs_db: f64, pl_direct_db: f64, criterion: ModeCriterion) -> Mode {
    match criterion {
        ModeCriterion::Cellular => Mode::Cellular,
        ModeCriterion::ForceD2d => Mode::D2d,
        ModeCriterion::PathLoss => {
            if pl_src_bs_db > pl_direct_db || pl_dst_bs_db > pl_direct_db {
                Mode::D2d
            } else {
                Mode::Cellular
            }
        }
    }
}
