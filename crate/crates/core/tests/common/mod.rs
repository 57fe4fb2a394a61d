#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail probability of Pearson's statistic for `observed` against
/// `expected`, with `fitted` parameters estimated from the data.
pub fn chi_square_p(observed: &[u64], expected: &[f64], fitted: usize) -> f64 {
    chi_square_sf(chi_square_stat(observed, expected), observed.len() - 1 - fitted)
}

pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().sf(stat)
}

/// Bins of width `width` over `k = 1, 2, ...` for a geometric law with
/// success probability `p`, stopping once fewer than `min_expected` of `n`
/// draws would land beyond the next bin; the last bin is the tail.
/// Returns the lower edges and the bin probabilities.
pub fn geometric_bins(p: f64, n: u64, width: u64, min_expected: f64) -> (Vec<u64>, Vec<f64>) {
    let survival = |k: u64| (1.0 - p).powf((k - 1) as f64);
    let mut edges = vec![1];
    let mut probs = Vec::new();
    loop {
        let lo = *edges.last().unwrap();
        let hi = lo + width;
        if survival(hi) * n as f64 >= min_expected {
            probs.push(survival(lo) - survival(hi));
            edges.push(hi);
        } else {
            probs.push(survival(lo));
            return (edges, probs);
        }
    }
}

pub fn bin_index(edges: &[u64], k: u64) -> usize {
    edges.partition_point(|&e| e <= k) - 1
}

pub fn rel_err(value: f64, target: f64) -> f64 {
    ((value - target) / target).abs()
}
