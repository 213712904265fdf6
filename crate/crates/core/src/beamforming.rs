//! Joint D2D power control and two-antenna downlink beamforming.
//!
//! A two-antenna base station serves one cellular user while D2D pairs reuse
//! the same downlink resource. The beamformer maximises the ratio of signal
//! at the cellular user to leakage at the D2D receivers plus noise, and the
//! D2D power is then chosen to maximise the sum rate under both SINR targets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = [Complex64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("cellular channel vector is zero")]
    ZeroChannel,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// One cellular user and one D2D pair sharing a downlink resource.
///
/// `h_dd` and `h_dc` are amplitude gains of the D2D link and of the D2D
/// transmitter to cellular user link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisoChannel {
    pub h_c: Vec2,
    pub h_d: Vec2,
    pub h_dd: f64,
    pub h_dc: f64,
    pub p_bs: f64,
    /// Noise plus any other interference at the cellular user.
    pub noise_c: f64,
    /// Noise plus any other interference at the D2D receiver.
    pub noise_d: f64,
    pub beta_c: f64,
    pub beta_d: f64,
    pub p_max: f64,
}

pub fn inner(a: &Vec2, b: &Vec2) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn norm_sqr(a: &Vec2) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr()
}

pub fn normalize(a: &Vec2) -> Vec2 {
    let n = norm_sqr(a).sqrt();
    [a[0] / n, a[1] / n]
}

/// Beamformer maximising signal-to-leakage-plus-noise towards `h_c` with
/// leakage measured at every vector in `leak`.
///
/// Computed as the normalised `(H H^H + (noise / p_bs) I)^-1 h_c` where the
/// columns of `H` are `h_c` followed by the leakage channels.
pub fn slnr_beamformer_multi(h_c: &Vec2, leak: &[Vec2], noise_over_power: f64) -> Result<Vec2, BeamformingError> {
    if norm_sqr(h_c) == 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    if !(noise_over_power > 0.0 && noise_over_power.is_finite()) {
        return Err(BeamformingError::InvalidParameter {
            name: "noise_over_power",
            reason: format!("must be positive, got {noise_over_power}"),
        });
    }
    // Hermitian 2x2: [[a, b], [conj(b), d]]
    let mut a = noise_over_power;
    let mut d = noise_over_power;
    let mut b = Complex64::new(0.0, 0.0);
    for v in std::iter::once(h_c).chain(leak) {
        a += v[0].norm_sqr();
        d += v[1].norm_sqr();
        b += v[0] * v[1].conj();
    }
    let det = a * d - b.norm_sqr();
    let w = [
        (h_c[0] * d - b * h_c[1]) / det,
        (-b.conj() * h_c[0] + h_c[1] * a) / det,
    ];
    Ok(normalize(&w))
}

pub fn slnr_beamformer(ch: &MisoChannel) -> Result<Vec2, BeamformingError> {
    slnr_beamformer_multi(&ch.h_c, &[ch.h_d], ch.noise_c / ch.p_bs)
}

/// Signal-to-leakage-plus-noise ratio of `w` for the given channel.
pub fn slnr(ch: &MisoChannel, w: &Vec2) -> f64 {
    inner(&ch.h_c, w).norm_sqr() / (inner(&ch.h_d, w).norm_sqr() + ch.noise_c / ch.p_bs)
}

/// Received beamformed powers at the cellular user and at the D2D receiver.
fn beam_powers(ch: &MisoChannel, w: &Vec2) -> (f64, f64) {
    (ch.p_bs * inner(&ch.h_c, w).norm_sqr(), ch.p_bs * inner(&ch.h_d, w).norm_sqr())
}

/// Sum of cellular and D2D Shannon efficiencies with D2D power `p_d`.
pub fn dl_pair_sum_rate(ch: &MisoChannel, w: &Vec2, p_d: f64) -> f64 {
    let (s, i) = beam_powers(ch, w);
    let cellular = (1.0 + s / (p_d * ch.h_dc.powi(2) + ch.noise_c)).log2();
    let d2d = (1.0 + p_d * ch.h_dd.powi(2) / (i + ch.noise_d)).log2();
    cellular + d2d
}

/// Cellular and D2D SINR with D2D power `p_d`.
pub fn dl_pair_sinr(ch: &MisoChannel, w: &Vec2, p_d: f64) -> (f64, f64) {
    let (s, i) = beam_powers(ch, w);
    (s / (p_d * ch.h_dc.powi(2) + ch.noise_c), p_d * ch.h_dd.powi(2) / (i + ch.noise_d))
}

/// Interval of D2D powers meeting both SINR targets, or `None` when empty.
pub fn feasible_power_interval(ch: &MisoChannel, w: &Vec2) -> Option<(f64, f64)> {
    let (s, i) = beam_powers(ch, w);
    let g = ch.h_dd.powi(2);
    let a = ch.h_dc.powi(2);
    let lo = (i + ch.noise_d) * ch.beta_d / g;
    let hi = if a == 0.0 {
        ch.p_max
    } else {
        ((s / ch.beta_c - ch.noise_c) / a).min(ch.p_max)
    };
    if hi < 0.0 || lo > hi || !lo.is_finite() {
        None
    } else {
        Some((lo, hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerChoice {
    pub p_d: f64,
    pub sum_rate: f64,
}

/// D2D power maximising the pair sum rate over the feasible interval.
///
/// The sum rate is smooth in `p_d` and its stationary points solve a
/// quadratic, so the optimum is among the interval ends and the real roots.
/// Ties go to the smaller power. Returns `None` when no power meets both
/// targets.
pub fn optimal_d2d_power(ch: &MisoChannel, w: &Vec2) -> Option<PowerChoice> {
    let (lo, hi) = feasible_power_interval(ch, w)?;
    let (s, i) = beam_powers(ch, w);
    let g = ch.h_dd.powi(2);
    let a = ch.h_dc.powi(2);
    let k = i + ch.noise_d;
    let n0 = ch.noise_c;

    let mut candidates = vec![lo, hi];
    if a > 0.0 {
        let qa = g * a * a;
        let qb = 2.0 * g * a * n0;
        let qc = g * n0 * (n0 + s) - a * s * k;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for r in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
                if r > lo && r < hi {
                    candidates.push(r);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut best = PowerChoice { p_d: candidates[0], sum_rate: dl_pair_sum_rate(ch, w, candidates[0]) };
    for &p in &candidates[1..] {
        let r = dl_pair_sum_rate(ch, w, p);
        if r > best.sum_rate {
            best = PowerChoice { p_d: p, sum_rate: r };
        }
    }
    Some(best)
}

/// Largest feasible D2D power, used as the no-power-control baseline.
pub fn max_feasible_power(ch: &MisoChannel, w: &Vec2) -> Option<PowerChoice> {
    let (_, hi) = feasible_power_interval(ch, w)?;
    Some(PowerChoice { p_d: hi, sum_rate: dl_pair_sum_rate(ch, w, hi) })
}

/// Several D2D pairs sharing the downlink resource of one cellular user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiPairChannel {
    pub h_c: Vec2,
    /// Base station to each D2D receiver.
    pub h_d: Vec<Vec2>,
    /// `h_pair[j][m]` is the amplitude gain from D2D transmitter `j` to D2D
    /// receiver `m`.
    pub h_pair: Vec<Vec<f64>>,
    /// D2D transmitter to cellular user amplitude gains.
    pub h_dc: Vec<f64>,
    pub p_bs: f64,
    pub noise: f64,
    pub beta_c: f64,
    pub beta_d: f64,
    pub p_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    /// Power of each pair, zero for pairs that were not admitted.
    pub powers: Vec<f64>,
    pub admitted: Vec<bool>,
    pub cellular_rate: f64,
    pub d2d_rates: Vec<f64>,
}

impl Admission {
    pub fn sum_rate(&self) -> f64 {
        self.cellular_rate + self.d2d_rates.iter().sum::<f64>()
    }
}

/// Admits pairs one at a time in index order. Each pair sees the
/// interference of the pairs admitted before it as extra noise, picks its
/// power with `choose`, and is skipped when it has no feasible power.
pub fn admit_sequentially(
    ch: &MultiPairChannel,
    w: &Vec2,
    choose: impl Fn(&MisoChannel, &Vec2) -> Option<PowerChoice>,
) -> Admission {
    let n = ch.h_d.len();
    let mut powers = vec![0.0; n];
    let mut admitted = vec![false; n];
    for m in 0..n {
        let at_cellular: f64 = (0..m).map(|j| powers[j] * ch.h_dc[j].powi(2)).sum();
        let at_receiver: f64 = (0..m).map(|j| powers[j] * ch.h_pair[j][m].powi(2)).sum();
        let single = MisoChannel {
            h_c: ch.h_c,
            h_d: ch.h_d[m],
            h_dd: ch.h_pair[m][m],
            h_dc: ch.h_dc[m],
            p_bs: ch.p_bs,
            noise_c: ch.noise + at_cellular,
            noise_d: ch.noise + at_receiver,
            beta_c: ch.beta_c,
            beta_d: ch.beta_d,
            p_max: ch.p_max,
        };
        if let Some(choice) = choose(&single, w) {
            powers[m] = choice.p_d;
            admitted[m] = true;
        }
    }
    let (cellular_rate, d2d_rates) = multi_pair_rates(ch, w, &powers);
    Admission { powers, admitted, cellular_rate, d2d_rates }
}

/// Cellular and per-pair rates with every pair transmitting at `powers`.
pub fn multi_pair_rates(ch: &MultiPairChannel, w: &Vec2, powers: &[f64]) -> (f64, Vec<f64>) {
    let n = powers.len();
    let s = ch.p_bs * inner(&ch.h_c, w).norm_sqr();
    let i_c: f64 = (0..n).map(|j| powers[j] * ch.h_dc[j].powi(2)).sum();
    let cellular = (1.0 + s / (i_c + ch.noise)).log2();
    let rates = (0..n)
        .map(|m| {
            if powers[m] == 0.0 {
                return 0.0;
            }
            let bs = ch.p_bs * inner(&ch.h_d[m], w).norm_sqr();
            let others: f64 = (0..n).filter(|&j| j != m).map(|j| powers[j] * ch.h_pair[j][m].powi(2)).sum();
            (1.0 + powers[m] * ch.h_pair[m][m].powi(2) / (bs + others + ch.noise)).log2()
        })
        .collect();
    (cellular, rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn channel(h_c: Vec2, h_d: Vec2) -> MisoChannel {
        MisoChannel {
            h_c,
            h_d,
            h_dd: 1.0,
            h_dc: 0.3,
            p_bs: 10.0,
            noise_c: 0.1,
            noise_d: 0.1,
            beta_c: 1.0,
            beta_d: 1.0,
            p_max: 5.0,
        }
    }

    #[test]
    fn orthogonal_channels_give_matched_beam() {
        let ch = channel([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]);
        let w = slnr_beamformer(&ch).unwrap();
        assert_relative_eq!(w[0].norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_cellular_channel_is_an_error() {
        let ch = channel([c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(slnr_beamformer(&ch), Err(BeamformingError::ZeroChannel));
    }

    #[test]
    fn no_cross_link_puts_optimum_at_upper_end() {
        let mut ch = channel([c(1.0, 0.2), c(0.3, -0.4)], [c(0.2, 0.1), c(0.6, 0.0)]);
        ch.h_dc = 0.0;
        let w = slnr_beamformer(&ch).unwrap();
        let (_, hi) = feasible_power_interval(&ch, &w).unwrap();
        assert_eq!(hi, ch.p_max);
        assert_eq!(optimal_d2d_power(&ch, &w).unwrap().p_d, ch.p_max);
    }

    #[test]
    fn impossible_targets_are_infeasible() {
        let mut ch = channel([c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]);
        ch.beta_d = 1e6;
        let w = slnr_beamformer(&ch).unwrap();
        assert!(optimal_d2d_power(&ch, &w).is_none());
        ch.beta_d = 1.0;
        ch.beta_c = 1e6;
        assert!(optimal_d2d_power(&ch, &w).is_none());
    }

    #[test]
    fn single_pair_admission_matches_direct_optimum() {
        let ch = channel([c(0.9, 0.1), c(-0.2, 0.5)], [c(0.4, 0.0), c(0.1, 0.2)]);
        let w = slnr_beamformer(&ch).unwrap();
        let multi = MultiPairChannel {
            h_c: ch.h_c,
            h_d: vec![ch.h_d],
            h_pair: vec![vec![ch.h_dd]],
            h_dc: vec![ch.h_dc],
            p_bs: ch.p_bs,
            noise: ch.noise_c,
            beta_c: ch.beta_c,
            beta_d: ch.beta_d,
            p_max: ch.p_max,
        };
        let adm = admit_sequentially(&multi, &w, optimal_d2d_power);
        let direct = optimal_d2d_power(&ch, &w).unwrap();
        assert!(adm.admitted[0]);
        assert_relative_eq!(adm.powers[0], direct.p_d, max_relative = 1e-12);
        assert_relative_eq!(adm.sum_rate(), direct.sum_rate, max_relative = 1e-12);
    }

    fn arb_vec2() -> impl Strategy<Value = Vec2> {
        prop::array::uniform4(-2.0f64..2.0).prop_map(|v| [c(v[0], v[1]), c(v[2], v[3])])
    }

    proptest! {
        #[test]
        fn beamformer_is_unit_norm(h_c in arb_vec2(), h_d in arb_vec2()) {
            prop_assume!(norm_sqr(&h_c) > 1e-6);
            let w = slnr_beamformer(&channel(h_c, h_d)).unwrap();
            prop_assert!((norm_sqr(&w) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn beamformer_beats_any_direction(h_c in arb_vec2(), h_d in arb_vec2(), v in arb_vec2()) {
            prop_assume!(norm_sqr(&h_c) > 1e-6 && norm_sqr(&v) > 1e-9);
            let ch = channel(h_c, h_d);
            let w = slnr_beamformer(&ch).unwrap();
            prop_assert!(slnr(&ch, &w) >= slnr(&ch, &normalize(&v)) * (1.0 - 1e-9));
        }

        #[test]
        fn optimal_power_beats_a_grid(
            h_c in arb_vec2(), h_d in arb_vec2(), h_dd in 0.1f64..3.0, h_dc in 0.0f64..1.0,
        ) {
            prop_assume!(norm_sqr(&h_c) > 1e-3);
            let mut ch = channel(h_c, h_d);
            ch.h_dd = h_dd;
            ch.h_dc = h_dc;
            let w = slnr_beamformer(&ch).unwrap();
            if let Some(best) = optimal_d2d_power(&ch, &w) {
                let (lo, hi) = feasible_power_interval(&ch, &w).unwrap();
                prop_assert!(best.p_d >= lo && best.p_d <= hi);
                let (sc, sd) = dl_pair_sinr(&ch, &w, best.p_d);
                prop_assert!(sc >= ch.beta_c * (1.0 - 1e-9) && sd >= ch.beta_d * (1.0 - 1e-9));
                for k in 0..=200 {
                    let p = lo + (hi - lo) * k as f64 / 200.0;
                    prop_assert!(best.sum_rate >= dl_pair_sum_rate(&ch, &w, p) - 1e-9);
                }
            }
        }
    }
}
