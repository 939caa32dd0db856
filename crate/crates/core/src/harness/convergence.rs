//! Empirical laws of root balls across map sizes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::rng::replica_rng;
use super::stats::total_variation;
use crate::planar_map::ball;
use crate::schaeffer::sample_quadrangulation;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub radius: u32,
    pub sizes: Vec<usize>,
    pub samples: usize,
    /// Number of distinct ball types seen at each size.
    pub types: Vec<usize>,
    /// Total variation between the ball laws of consecutive sizes.
    pub tv: Vec<f64>,
    /// Counts per size, ball types numbered in order of their canonical
    /// codes over all sizes.
    pub histograms: Vec<BTreeMap<usize, u64>>,
}

pub fn local_convergence_probe(
    sizes: &[usize],
    radius: u32,
    samples: usize,
    seed: u64,
) -> ConvergenceReport {
    let per_size: Vec<BTreeMap<Vec<u32>, u64>> = sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let codes: Vec<Vec<u32>> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = replica_rng(seed ^ ((si as u64) << 48), i);
                    let map = sample_quadrangulation(n, &mut rng);
                    ball(&map, map.root(), radius).canonical_code()
                })
                .collect();
            let mut h = BTreeMap::new();
            for c in codes {
                *h.entry(c).or_insert(0) += 1;
            }
            h
        })
        .collect();
    let mut index: BTreeMap<&Vec<u32>, usize> = BTreeMap::new();
    for h in &per_size {
        for code in h.keys() {
            index.entry(code).or_insert(0);
        }
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let histograms: Vec<BTreeMap<usize, u64>> = per_size
        .iter()
        .map(|h| h.iter().map(|(c, &k)| (index[c], k)).collect())
        .collect();
    let tv = histograms
        .windows(2)
        .map(|w| total_variation(&w[0], &w[1]))
        .collect();
    ConvergenceReport {
        radius,
        sizes: sizes.to_vec(),
        samples,
        types: per_size.iter().map(BTreeMap::len).collect(),
        tv,
        histograms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_zero_has_one_type() {
        let r = local_convergence_probe(&[10, 100], 0, 50, 1);
        assert_eq!(r.types, vec![1, 1]);
        assert_eq!(r.tv, vec![0.0]);
    }

    #[test]
    fn radius_one_histograms() {
        let r = local_convergence_probe(&[50, 500], 1, 300, 2);
        assert!(r.types.iter().all(|&t| t > 1));
        assert!(r.tv[0] >= 0.0 && r.tv[0] <= 1.0);
        assert_eq!(r.histograms[0].values().sum::<u64>(), 300);
    }
}
