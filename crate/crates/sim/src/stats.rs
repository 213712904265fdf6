use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample statistics, `None` for an empty slice.
pub fn summarize(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(xs);
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    } else {
        0.0
    };
    Some(Summary {
        count: xs.len(),
        mean: m,
        std: var.sqrt(),
        min: sorted[0],
        p5: quantile_sorted(&sorted, 0.05),
        median: quantile_sorted(&sorted, 0.5),
        p95: quantile_sorted(&sorted, 0.95),
        max: sorted[sorted.len() - 1],
    })
}

/// Linear-interpolated quantile of ascending data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Ascending `(value, rank / n)` pairs.
pub fn empirical_cdf(xs: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(i, v)| (v, (i + 1) as f64 / n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_a_small_set() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 2.5);
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn cdf_ranks() {
        assert_eq!(empirical_cdf(&[2.0, 1.0]), vec![(1.0, 0.5), (2.0, 1.0)]);
        assert_eq!(empirical_cdf(&[7.0]), vec![(7.0, 1.0)]);
    }

    proptest::proptest! {
        #[test]
        fn summary_is_ordered(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let s = summarize(&xs).unwrap();
            proptest::prop_assert!(s.min <= s.p5 && s.p5 <= s.median && s.median <= s.p95 && s.p95 <= s.max);
            proptest::prop_assert!(s.min <= s.mean && s.mean <= s.max);
            proptest::prop_assert!(s.std >= 0.0);
        }

        #[test]
        fn cdf_is_sorted_and_ends_at_one(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let cdf = empirical_cdf(&xs);
            proptest::prop_assert_eq!(cdf.len(), xs.len());
            proptest::prop_assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
            proptest::prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        }
    }
}
