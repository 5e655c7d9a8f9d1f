use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample set")]
    EmptySample,
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("sample {0} lies outside the bin edges")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bins {
    /// Fixed width; edges sit on multiples of the width.
    Width(f64),
    /// Equal bins spanning the sample range.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
}

/// Bins the samples. The largest sample falls into the last bin.
pub fn histogram(samples: &[f64], bins: Bins) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(StatsError::OutOfRange(bad));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let edges = match bins {
        Bins::Count(n) => {
            if n == 0 {
                return Err(StatsError::InvalidBins("bin count must be at least 1".into()));
            }
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
            let w = (hi - lo) / n as f64;
            let mut edges: Vec<f64> = (0..n).map(|k| lo + k as f64 * w).collect();
            edges.push(hi);
            edges
        }
        Bins::Width(w) => {
            if !(w > 0.0) || !w.is_finite() {
                return Err(StatsError::InvalidBins(format!(
                    "bin width must be positive, got {w}"
                )));
            }
            let first = (lo / w).floor() as i64;
            let last = ((hi / w).floor() as i64 + 1).max(first + 1);
            (first..=last).map(|k| k as f64 * w).collect()
        }
    };
    histogram_with_edges(samples, &edges)
}

/// Bins the samples on explicit increasing edges. Bins are half-open
/// except the last, which also holds its right edge.
pub fn histogram_with_edges(samples: &[f64], edges: &[f64]) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(StatsError::InvalidBins(
            "edges must be strictly increasing".into(),
        ));
    }
    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    for &x in samples {
        if !(x >= edges[0] && x <= edges[n_bins]) {
            return Err(StatsError::OutOfRange(x));
        }
        let k = edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(n_bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    let frequencies = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        frequencies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small arguments.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (c * j * j).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov test. Ties are handled by stepping both
/// empirical CDFs past a shared value together. Empty input yields `D = 0`,
/// `p = 1`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    if a.is_empty() || b.is_empty() {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(en * d),
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    if samples.is_empty() {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let x = sorted(samples);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
    }
}

/// Total-variation distance between two probability vectors; missing
/// trailing entries count as zero.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64Mcg;

    #[test]
    fn histogram_basics() {
        let h = histogram(&[1.0, 1.0, 2.0], Bins::Count(2)).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.frequencies, vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(h.edges, vec![1.0, 1.5, 2.0]);
        assert_eq!(histogram(&[], Bins::Count(2)), Err(StatsError::EmptySample));
    }

    #[test]
    fn constant_samples_fill_one_bin() {
        for bins in [Bins::Count(1), Bins::Count(4), Bins::Count(5), Bins::Width(0.5)] {
            let h = histogram(&[3.0; 7], bins).unwrap();
            assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1, "{bins:?}");
            assert_eq!(h.counts.iter().sum::<u64>(), 7);
        }
    }

    #[test]
    fn width_bins_align_to_multiples() {
        let h = histogram(&[0.2, 1.0, 1.9, 2.0], Bins::Width(1.0)).unwrap();
        assert_eq!(h.edges, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(h.counts, vec![1, 2, 1]);
    }

    #[test]
    fn uniform_bins_are_flat() {
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let h = histogram_with_edges(&xs, &(0..=10).map(|k| k as f64 / 10.0).collect::<Vec<_>>()).unwrap();
        let sigma = (0.1 * 0.9 / n as f64).sqrt();
        for f in &h.frequencies {
            assert!((f - 0.1).abs() < 3.0 * sigma, "{f}");
        }
        assert!((h.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        assert_eq!(ks_two_sample(&a, &a).p_value, 1.0);
        assert_eq!(ks_two_sample(&a, &[4.0, 5.0]).statistic, 1.0);
        let d = ks_two_sample(&a, &[1.0, 2.0, 4.0]).statistic;
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_ties() {
        let r = ks_two_sample(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0]);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        for lambda in [1.1, 1.17, 1.18, 1.19, 1.25] {
            let small = {
                let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
                let s: f64 = (1..=20).map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp()).sum();
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
            };
            let large = 2.0
                * (1..=100)
                    .map(|k| {
                        let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
                        if k % 2 == 1 {
                            t
                        } else {
                            -t
                        }
                    })
                    .sum::<f64>();
            assert!((small - large).abs() < 1e-12, "{lambda}");
        }
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_one_sample_uniform() {
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!(r.p_value > 0.01, "{r:?}");
        let r = ks_one_sample(&xs, |x| (x * x).clamp(0.0, 1.0));
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0], &[0.0, 1.0]), 1.0);
        assert!((total_variation(&[0.2, 0.8], &[0.5, 0.5]) - 0.3).abs() < 1e-15);
    }
}
