//! Per-sample records and their aggregation.
//!
//! Aggregates keep every value and sort before summarizing, so merging
//! partial aggregates in any order gives bit-identical summaries.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Flat key to number measurements of one sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatRecord {
    pub values: BTreeMap<String, f64>,
}

impl StatRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.values.insert(key.into(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Normal-approximation 95% interval for the mean.
    pub ci95: (f64, f64),
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let std = var.sqrt();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let half = 1.96 * std / (n as f64).sqrt();
        Some(Summary {
            count: n,
            mean,
            median,
            std,
            ci95: (mean - half, mean + half),
            min: v[0],
            max: v[n - 1],
        })
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

/// All values seen per key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregate {
    values: BTreeMap<String, Vec<f64>>,
}

impl Aggregate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, record: &StatRecord) {
        for (k, &v) in &record.values {
            self.values.entry(k.clone()).or_default().push(v);
        }
    }

    pub fn merge(mut self, other: Aggregate) -> Aggregate {
        for (k, mut v) in other.values {
            self.values.entry(k).or_default().append(&mut v);
        }
        self
    }

    pub fn values(&self, key: &str) -> &[f64] {
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn summaries(&self) -> BTreeMap<String, Summary> {
        self.values
            .iter()
            .filter_map(|(k, v)| Summary::of(v).map(|s| (k.clone(), s)))
            .collect()
    }
}

impl FromIterator<StatRecord> for Aggregate {
    fn from_iter<I: IntoIterator<Item = StatRecord>>(iter: I) -> Self {
        let mut agg = Aggregate::new();
        for r in iter {
            agg.add(&r);
        }
        agg
    }
}

/// Pearson chi-square of `observed` counts against `probs`, which should
/// sum to one. Returns the statistic, degrees of freedom and upper tail
/// p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let statistic = observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = probs.iter().filter(|&&p| p > 0.0).count().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64)
            .expect("positive dof")
            .cdf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Total variation distance between two count histograms.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let (na, nb) = (
        a.values().sum::<u64>() as f64,
        b.values().sum::<u64>() as f64,
    );
    let mut tv = 0.0;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        tv += (ca as f64 / na - cb as f64 / nb).abs();
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            tv += cb as f64 / nb;
        }
    }
    tv / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(x: f64) -> StatRecord {
        let mut r = StatRecord::new();
        r.set("x", x).set("y", x * x);
        r
    }

    #[test]
    fn summary_values() {
        let s = Summary::of(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            (s.count, s.mean, s.median, s.min, s.max),
            (4, 2.5, 2.5, 1.0, 4.0)
        );
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn chi_square_matches_table() {
        // 10 vs 20 against (1/2, 1/2): statistic 10/3 with 1 dof
        let c = chi_square(&[10, 20], &[0.5, 0.5]);
        assert!((c.statistic - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.dof, 1);
        assert!((c.p_value - 0.067889).abs() < 1e-5);
    }

    #[test]
    fn tv_distance() {
        let a: BTreeMap<u8, u64> = [(0, 5), (1, 5)].into();
        let b: BTreeMap<u8, u64> = [(0, 10)].into();
        assert!((total_variation(&a, &b) - 0.5).abs() < 1e-12);
        assert_eq!(total_variation(&a, &a), 0.0);
    }

    proptest! {
        #[test]
        fn merging_is_order_independent(xs in prop::collection::vec(-1e6f64..1e6, 1..60), cut in 0usize..60, cut2 in 0usize..60) {
            let c1 = cut.min(xs.len());
            let c2 = cut2.min(xs.len()).max(c1);
            let part = |s: &[f64]| s.iter().map(|&x| record(x)).collect::<Aggregate>();
            let (a, b, c) = (part(&xs[..c1]), part(&xs[c1..c2]), part(&xs[c2..]));
            let left = a.clone().merge(b.clone()).merge(c.clone());
            let right = c.merge(a.merge(b));
            prop_assert_eq!(left.summaries(), right.summaries());
            let whole = part(&xs);
            prop_assert_eq!(whole.summaries(), left.summaries());
        }
    }
}
