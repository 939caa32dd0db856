use num_rational::BigRational;
use num_traits::Zero;

use super::series::RationalSeries;
use super::{f_series, phi_of, phi_series, SkeletonError};

/// Cached series for `F` and the iterates `phi_n`, `n = 0..=max_steps`,
/// all truncated at order `order`.
#[derive(Debug, Clone)]
pub struct SkeletonKernel {
    order: usize,
    f: RationalSeries,
    phis: Vec<RationalSeries>,
}

impl SkeletonKernel {
    pub fn new(order: usize, max_steps: usize) -> Self {
        let mut phis = Vec::with_capacity(max_steps + 1);
        phis.push(RationalSeries::variable(order));
        for n in 1..=max_steps {
            let next = if n == 1 {
                phi_series(order)
            } else {
                phi_of(&phis[n - 1]).expect("iterates stay in (0, 1) at 0")
            };
            phis.push(next);
        }
        SkeletonKernel {
            order,
            f: f_series(order),
            phis,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn f(&self) -> &RationalSeries {
        &self.f
    }

    pub fn phi(&self, n: usize) -> &RationalSeries {
        &self.phis[n]
    }

    pub fn max_steps(&self) -> usize {
        self.phis.len() - 1
    }

    /// `P{xi_n = l | xi_0 = k} = [t^l] phi_n(t)^k`.
    pub fn branching_prob(
        &self,
        l: usize,
        k: usize,
        n: usize,
    ) -> Result<BigRational, SkeletonError> {
        self.check(l, k, n)?;
        let base = self.phis[n].truncate(l);
        Ok(base.pow(k).at(l).clone())
    }

    /// `P{|gamma_{r+n}| = k | |gamma_r| = l} = ([t^k]F / [t^l]F) P{xi_n = l | xi_0 = k}`.
    pub fn transition_prob(
        &self,
        l: usize,
        k: usize,
        n: usize,
    ) -> Result<BigRational, SkeletonError> {
        self.check(l, k, n)?;
        if l == 0 || k == 0 {
            return Err(SkeletonError::InvalidArgument(
                "cycle lengths are at least 1".into(),
            ));
        }
        let ratio = self.f.at(k) / self.f.at(l);
        Ok(ratio * self.branching_prob(l, k, n)?)
    }

    /// The row `k -> P(l -> k)` for `k = 1..=order`.
    pub fn transition_row(&self, l: usize, n: usize) -> Result<Vec<BigRational>, SkeletonError> {
        self.check(l, 1, n)?;
        let base = self.phis[n].truncate(l);
        let mut power = RationalSeries::one(l);
        let mut row = Vec::with_capacity(self.order);
        for k in 1..=self.order {
            power = &power * &base;
            let p = if power.at(l).is_zero() {
                BigRational::zero()
            } else {
                self.f.at(k) / self.f.at(l) * power.at(l)
            };
            row.push(p);
        }
        Ok(row)
    }

    fn check(&self, l: usize, k: usize, n: usize) -> Result<(), SkeletonError> {
        let need = l.max(k);
        if need > self.order {
            return Err(SkeletonError::TruncationTooSmall {
                have: self.order,
                need,
            });
        }
        if n == 0 || n > self.max_steps() {
            return Err(SkeletonError::InvalidArgument(format!(
                "step count {n} outside 1..={}",
                self.max_steps()
            )));
        }
        Ok(())
    }
}

/// One-off transition probability with truncation `order`.
pub fn transition_prob(
    l: usize,
    k: usize,
    n: usize,
    order: usize,
) -> Result<BigRational, SkeletonError> {
    let need = l.max(k);
    if need > order {
        return Err(SkeletonError::TruncationTooSmall { have: order, need });
    }
    SkeletonKernel::new(need, n).transition_prob(l, k, n)
}

#[cfg(test)]
mod tests {
    use super::super::series::{rat, ratio_to_f64};
    use super::*;

    #[test]
    fn first_transitions_from_one() {
        assert_eq!(transition_prob(1, 1, 1, 10).unwrap(), rat(5, 27));
        assert_eq!(transition_prob(1, 2, 1, 10).unwrap(), rat(140, 729));
        assert!(matches!(
            transition_prob(1, 12, 1, 10),
            Err(SkeletonError::TruncationTooSmall { have: 10, need: 12 })
        ));
    }

    #[test]
    fn rows_are_stochastic() {
        let kernel = SkeletonKernel::new(160, 1);
        for l in 1..=3 {
            let row = kernel.transition_row(l, 1).unwrap();
            let partial: Vec<f64> = row
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += ratio_to_f64(p);
                    Some(*acc)
                })
                .collect();
            assert!(partial.windows(2).all(|w| w[1] >= w[0]));
            let gap = 1.0 - partial.last().unwrap();
            // the rows decay geometrically, so the truncated mass is negligible
            assert!(gap.abs() < 1e-9, "l = {l}, gap = {gap}");
        }
    }

    #[test]
    fn two_steps_compose() {
        // Chapman-Kolmogorov on the branching side: P_2(l | k) = sum_m P_1(l | m) P_1(m | k)
        let kernel = SkeletonKernel::new(48, 2);
        let (l, k) = (2, 3);
        let direct = kernel.branching_prob(l, k, 2).unwrap();
        let mut via = BigRational::zero();
        for m in 0..=48 {
            let a = if m == 0 {
                if l == 0 {
                    rat(1, 1)
                } else {
                    rat(0, 1)
                }
            } else {
                kernel.branching_prob(l, m, 1).unwrap()
            };
            let b = kernel.phi(1).truncate(m).pow(k).at(m).clone();
            via += a * b;
        }
        // truncation at m <= 48 leaves a tiny positive remainder
        let diff = ratio_to_f64(&(direct - via));
        assert!((0.0..1e-8).contains(&diff), "{diff}");
    }
}
