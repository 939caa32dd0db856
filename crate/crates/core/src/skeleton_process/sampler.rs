//! Sampling trajectories of the cycle-length chain.
//!
//! The chain is run downward. The top length `|gamma_R|` is drawn from its
//! marginal `P{|gamma_R| = m} = [t^m]F * m a^(m-1) * phi_R'(0)` with
//! `a = phi_R(0)`; this is the law reached from `|gamma_0| = 1` through the
//! upward kernel. Given `|gamma_{r+1}| = k`, the reversed kernel is
//!
//! ```text
//! P{|gamma_r| = l | |gamma_{r+1}| = k} ∝ [t^l] phi(t)^k * l a^(l-1),   a = phi_r(0)
//! ```
//!
//! which is the law of the total offspring of `k` individuals when one of
//! them, chosen uniformly, has the size-biased tilted law `j p_j a^(j-1)`
//! and the others have the tilted law `p_j a^j`. Every trajectory therefore
//! has the joint law of the upward Markov chain started from `|gamma_0| = 1`.
//! Floating point is used only here.

use rand::Rng;

use super::SkeletonError;

/// `(phi_k, F_k)` for `k = 0..len` in floating point, from binomial series:
/// `sqrt((t-9)(t-1)^3) = 3 (1-t/9)^(1/2) (1-t)^(3/2)` and
/// `sqrt((9-t)/(1-t)) = 3 (1-t/9)^(1/2) (1-t)^(-1/2)`.
pub fn numeric_coefficients(len: usize) -> (Vec<f64>, Vec<f64>) {
    let binom_series = |alpha: f64, x: f64, n: usize| {
        let mut out = Vec::with_capacity(n);
        let mut c = 1.0f64;
        for k in 0..n {
            out.push(c);
            c *= (alpha - k as f64) / (k as f64 + 1.0) * x;
        }
        out
    };
    let n = len + 1;
    let a = binom_series(0.5, -1.0 / 9.0, n);
    let b = binom_series(1.5, -1.0, n);
    let c = binom_series(-0.5, -1.0, n);
    let conv = |x: &[f64], y: &[f64]| {
        let mut out = vec![0.0; n];
        for (i, xi) in x.iter().enumerate() {
            if xi.abs() < 1e-300 {
                break;
            }
            for (j, yj) in y.iter().enumerate().take(n - i) {
                out[i + j] += xi * yj;
            }
        }
        out
    };
    let root = conv(&a, &b);
    let mut numer: Vec<f64> = root.iter().map(|r| 3.0 * r).collect();
    numer[0] -= 3.0;
    numer[1] += 6.0;
    if n > 2 {
        numer[2] -= 1.0;
    }
    let phi: Vec<f64> = (0..len).map(|k| numer[k + 1] / 2.0).collect();
    let rad = conv(&a, &c);
    let mut f: Vec<f64> = (0..len).map(|k| 0.75 * 3.0 * rad[k]).collect();
    f[0] = 0.0;
    (phi, f)
}

fn phi_r_at_zero(r: usize) -> f64 {
    let w = 3.0 + 2.0 * r as f64;
    1.0 - 8.0 / (w * w - 1.0)
}

fn phi_r_derivative_at_zero(r: usize) -> f64 {
    let w = 3.0 + 2.0 * r as f64;
    let d = w * w - 1.0;
    64.0 * w / (3.0 * d * d)
}

/// Inverse-CDF table for a law on `0..len`.
#[derive(Debug, Clone)]
struct CdfTable {
    cdf: Vec<f64>,
}

impl CdfTable {
    fn from_weights(weights: &[f64]) -> (Self, f64) {
        let mut acc = 0.0;
        let cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        (CdfTable { cdf }, acc)
    }

    fn normalize(&mut self, total: f64) {
        for c in &mut self.cdf {
            *c /= total;
        }
    }

    /// Index of the first cdf entry exceeding `u`, or `None` past the end.
    fn sample(&self, u: f64) -> Option<usize> {
        let i = self.cdf.partition_point(|&c| c <= u);
        (i < self.cdf.len()).then_some(i)
    }
}

#[derive(Debug, Clone)]
struct LevelTables {
    others: CdfTable,
    spine: CdfTable,
}

/// Precomputed tables for trajectories on levels `0..=r_end`.
#[derive(Debug, Clone)]
pub struct CycleChainSampler {
    r_end: usize,
    truncation: usize,
    top: CdfTable,
    /// `levels[r]` drives the step from level `r + 1` down to `r`, for `r >= 1`.
    levels: Vec<Option<LevelTables>>,
}

const MASS_TOLERANCE: f64 = 1e-12;

impl CycleChainSampler {
    pub fn new(r_end: usize, truncation: usize) -> Result<Self, SkeletonError> {
        if truncation < 2 {
            return Err(SkeletonError::InvalidArgument(
                "truncation must be at least 2".into(),
            ));
        }
        let (p, f) = numeric_coefficients(truncation + 1);

        let a = phi_r_at_zero(r_end);
        let b = phi_r_derivative_at_zero(r_end);
        let mut weights = vec![0.0; truncation + 1];
        for (m, w) in weights.iter_mut().enumerate().skip(1) {
            *w = f[m] * m as f64 * a.powi(m as i32 - 1) * b;
        }
        let (top, total) = CdfTable::from_weights(&weights);
        if 1.0 - total > MASS_TOLERANCE {
            return Err(SkeletonError::TruncationTooSmall {
                have: truncation,
                need: 2 * truncation,
            });
        }

        let mut levels = vec![None; r_end];
        for (r, slot) in levels.iter_mut().enumerate().skip(1) {
            let a = phi_r_at_zero(r);
            let others_w: Vec<f64> = (0..=truncation).map(|j| p[j] * a.powi(j as i32)).collect();
            let spine_w: Vec<f64> = (0..=truncation)
                .map(|j| {
                    if j == 0 {
                        0.0
                    } else {
                        j as f64 * p[j] * a.powi(j as i32 - 1)
                    }
                })
                .collect();
            // exact normalizers: phi(a) = phi_{r+1}(0), phi'(a) = phi_{r+1}'(0) / phi_r'(0)
            let others_mass = phi_r_at_zero(r + 1);
            let spine_mass = phi_r_derivative_at_zero(r + 1) / phi_r_derivative_at_zero(r);
            let (mut others, so) = CdfTable::from_weights(&others_w);
            let (mut spine, ss) = CdfTable::from_weights(&spine_w);
            if (others_mass - so) / others_mass > MASS_TOLERANCE
                || (spine_mass - ss) / spine_mass > MASS_TOLERANCE
            {
                return Err(SkeletonError::TruncationTooSmall {
                    have: truncation,
                    need: 2 * truncation,
                });
            }
            others.normalize(so);
            spine.normalize(ss);
            *slot = Some(LevelTables { others, spine });
        }
        Ok(CycleChainSampler {
            r_end,
            truncation,
            top,
            levels,
        })
    }

    /// Smallest power-of-two truncation (at least `start`) that holds the
    /// laws up to level `r_end`.
    pub fn with_adaptive_truncation(r_end: usize, start: usize) -> Self {
        let mut k = start.max(16);
        loop {
            match Self::new(r_end, k) {
                Ok(s) => return s,
                Err(_) => k *= 2,
            }
        }
    }

    pub fn r_end(&self) -> usize {
        self.r_end
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Cycle lengths `|gamma_r|` for `r = 0..=r_end`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<u64>, SkeletonError> {
        let mut lengths = vec![0u64; self.r_end + 1];
        let mut k = self.top.sample(rng.gen::<f64>()).ok_or(self.too_small())? as u64;
        lengths[self.r_end] = k;
        for r in (0..self.r_end).rev() {
            let l = match &self.levels[r] {
                // phi_0(0) = 0: only the spine keeps a single child
                None => 1,
                Some(tables) => {
                    let mut total = tables
                        .spine
                        .sample(rng.gen::<f64>())
                        .ok_or(self.too_small())? as u64;
                    for _ in 1..k {
                        total += tables
                            .others
                            .sample(rng.gen::<f64>())
                            .ok_or(self.too_small())? as u64;
                    }
                    total
                }
            };
            if l as usize > self.truncation {
                return Err(self.too_small());
            }
            lengths[r] = l;
            k = l;
        }
        Ok(lengths)
    }

    fn too_small(&self) -> SkeletonError {
        SkeletonError::TruncationTooSmall {
            have: self.truncation,
            need: 2 * self.truncation,
        }
    }
}

/// Cycle lengths for levels `r_start..=r_end` of one trajectory.
pub fn sample_cycle_chain<R: Rng + ?Sized>(
    r_start: usize,
    r_end: usize,
    rng: &mut R,
    truncation: usize,
) -> Result<Vec<u64>, SkeletonError> {
    if r_start > r_end {
        return Err(SkeletonError::InvalidArgument(
            "r_start exceeds r_end".into(),
        ));
    }
    let sampler = CycleChainSampler::new(r_end, truncation)?;
    Ok(sampler.sample(rng)?[r_start..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::super::series::ratio_to_f64;
    use super::super::{f_series, phi_series};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn float_coefficients_match_exact() {
        let (p, f) = numeric_coefficients(40);
        let (pe, fe) = (phi_series(39), f_series(39));
        for k in 0..40 {
            let (a, b) = (ratio_to_f64(pe.at(k)), ratio_to_f64(fe.at(k)));
            assert!(
                (p[k] - a).abs() <= 1e-13 * a.abs().max(1e-300),
                "phi_{k}: {} vs {a}",
                p[k]
            );
            assert!(
                (f[k] - b).abs() <= 1e-13 * b.abs().max(1e-15),
                "F_{k}: {} vs {b}",
                f[k]
            );
        }
    }

    #[test]
    fn lengths_are_positive_and_start_at_one() {
        let sampler = CycleChainSampler::with_adaptive_truncation(6, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let t = sampler.sample(&mut rng).unwrap();
            assert_eq!(t[0], 1);
            assert!(t.iter().all(|&l| l >= 1));
        }
    }

    #[test]
    fn tiny_truncation_is_reported() {
        assert!(matches!(
            CycleChainSampler::new(10, 8),
            Err(SkeletonError::TruncationTooSmall { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_cycle_chain(2, 1, &mut rng, 64).is_err());
    }
}
