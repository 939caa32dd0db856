//! The random walk on directed edges: from a dart into `v`, step along a
//! uniformly chosen dart leaving `v`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::planar_map::{Dart, RootedQuadrangulation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub darts: usize,
    /// Uniform measure satisfies `pi P = pi` exactly.
    pub uniform_is_stationary: bool,
    /// The stationary system has the uniform law as its only solution.
    pub unique_solution_is_uniform: bool,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.uniform_is_stationary && self.unique_solution_is_uniform
    }
}

fn transition_matrix(map: &RootedQuadrangulation) -> Vec<Vec<BigRational>> {
    let n = map.n_darts();
    let mut p = vec![vec![BigRational::zero(); n]; n];
    for d in 0..n as Dart {
        let v = map.target(d);
        let w = BigRational::new(1.into(), (map.degree(v) as i64).into());
        for e in map.rotation(v) {
            p[d as usize][e as usize] += &w;
        }
    }
    p
}

/// Exact check over the rationals.
pub fn edge_walk_stationarity(map: &RootedQuadrangulation) -> StationarityReport {
    let n = map.n_darts();
    let p = transition_matrix(map);
    let u = BigRational::new(1.into(), (n as i64).into());
    let uniform_is_stationary = (0..n).all(|j| {
        let s: BigRational = (0..n).map(|i| &u * &p[i][j]).sum();
        s == u
    });

    // (P^T - I) pi = 0 with the last equation replaced by sum pi = 1
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = (0..n).map(|i| p[i][j].clone()).collect();
            row[j] -= BigRational::one();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![BigRational::one(); n + 1];
    let solution = solve(a);
    let unique_solution_is_uniform = solution.is_some_and(|x| x.iter().all(|v| *v == u));
    StationarityReport {
        darts: n,
        uniform_is_stationary,
        unique_solution_is_uniform,
    }
}

/// Gauss-Jordan on an augmented square system; `None` if singular.
fn solve(mut a: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = BigRational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &factor * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitReport {
    pub steps: u64,
    pub darts: usize,
    /// Largest `|frequency - 1/darts| / sigma` over darts, with sigma from
    /// batch means.
    pub max_z: f64,
    /// Fraction of darts with that deviation below 3.
    pub within_3_sigma: f64,
}

const BATCHES: usize = 20;

/// Long-run visit frequencies of the walk started at the root.
pub fn edge_walk_visits<R: Rng + ?Sized>(
    map: &RootedQuadrangulation,
    steps: u64,
    rng: &mut R,
) -> VisitReport {
    let n = map.n_darts();
    let per_batch = (steps / BATCHES as u64).max(1);
    let mut batches = vec![vec![0u64; n]; BATCHES];
    let mut d = map.root();
    for counts in batches.iter_mut() {
        for _ in 0..per_batch {
            let v = map.target(d);
            let k = rng.gen_range(0..map.degree(v));
            d = map.rotation(v).nth(k).expect("k < degree");
            counts[d as usize] += 1;
        }
    }
    let b = BATCHES as f64;
    let z: Vec<f64> = (0..n)
        .map(|e| {
            let f: Vec<f64> = batches
                .iter()
                .map(|c| c[e] as f64 / per_batch as f64)
                .collect();
            let mean = f.iter().sum::<f64>() / b;
            let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
            let se = (var / b).sqrt();
            let dev = (mean - 1.0 / n as f64).abs();
            if se > 0.0 {
                dev / se
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    VisitReport {
        steps: per_batch * BATCHES as u64,
        darts: n,
        max_z: z.iter().copied().fold(0.0, f64::max),
        within_3_sigma: z.iter().filter(|&&x| x < 3.0).count() as f64 / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_map::fixtures::{cube, path_map};

    #[test]
    fn small_maps_are_uniformly_stationary() {
        let r = edge_walk_stationarity(&path_map());
        assert_eq!(r.darts, 4);
        assert!(r.pass());
        let r = edge_walk_stationarity(&cube());
        assert_eq!(r.darts, 24);
        assert!(r.pass());
    }

    #[test]
    fn singular_system_is_detected() {
        let z = BigRational::zero;
        assert!(solve(vec![vec![z(), z(), z()], vec![z(), z(), z()]]).is_none());
    }
}
