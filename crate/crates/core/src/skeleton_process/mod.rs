//! Exact generating functions of the cycle-length chain and the skeleton
//! branching process, with a sampler for the chain.
//!
//! The offspring generating function is
//! `phi(t) = (sqrt((t-9)(t-1)^3) - 3 + 6t - t^2) / (2t)` and the chain's
//! harmonic function is `F(t) = 3/4 (sqrt((9-t)/(1-t)) - 3)`. All identities
//! are checked with exact rational arithmetic.
//!
//! Composition with an inner series whose constant term is nonzero cannot be
//! done by truncated Horner evaluation. Iterates `phi(phi_n)` are instead
//! obtained by evaluating the algebraic expression of `phi` on the series
//! `phi_n`: the radicand `(u-9)(u-1)^3` then has a constant term that is a
//! rational square, so the series square root stays exact.

mod kernel;
mod sampler;
pub mod series;

pub use kernel::{transition_prob, SkeletonKernel};
pub use sampler::{numeric_coefficients, sample_cycle_chain, CycleChainSampler};
pub use series::{RationalSeries, SeriesError};

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use series::{int, rat, rational_sqrt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("truncation {have} too small: need at least {need}")]
    TruncationTooSmall { have: usize, need: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `sqrt((9-u)/(1-u))` for a series argument with `u(0) != 1`.
pub fn radical_of(u: &RationalSeries) -> Result<RationalSeries, SeriesError> {
    let nine_minus = (-u).add_constant(&int(9));
    let one_minus = (-u).add_constant(&int(1));
    nine_minus.divide(&one_minus)?.sqrt()
}

/// `F(u) = 3/4 (sqrt((9-u)/(1-u)) - 3)`.
pub fn f_of(u: &RationalSeries) -> Result<RationalSeries, SeriesError> {
    Ok(radical_of(u)?.add_constant(&int(-3)).scale(&rat(3, 4)))
}

/// `phi(u)` for a series argument. When `u(0) = 0` the division by `u`
/// costs one order of precision, so the result has order `u.order() - 1`.
pub fn phi_of(u: &RationalSeries) -> Result<RationalSeries, SeriesError> {
    let u_minus_9 = u.add_constant(&int(-9));
    let u_minus_1 = u.add_constant(&int(-1));
    let radicand = &u_minus_9 * &u_minus_1.pow(3);
    let root = radicand.sqrt()?;
    let u2 = u * u;
    let numer = &(&root + &u.scale(&int(6))) - &u2;
    let numer = numer.add_constant(&int(-3));
    let two_u = u.scale(&int(2));
    if u.at(0).is_zero() {
        numer.div_t()?.divide(&two_u.div_t()?)
    } else {
        numer.divide(&two_u)
    }
}

/// Taylor coefficients of `phi` at 0, to order `k`.
pub fn phi_series(k: usize) -> RationalSeries {
    phi_of(&RationalSeries::variable(k + 1)).expect("phi is analytic at 0")
}

/// Taylor coefficients of `F` at 0, to order `k`.
pub fn f_series(k: usize) -> RationalSeries {
    f_of(&RationalSeries::variable(k)).expect("F is analytic at 0")
}

/// `phi` composed with itself `r` times, by repeated evaluation.
pub fn phi_iterate(r: usize, k: usize) -> RationalSeries {
    let mut u = RationalSeries::variable(k);
    for step in 0..r {
        u = if step == 0 {
            phi_series(k)
        } else {
            phi_of(&u).expect("iterates stay in (0, 1) at 0")
        };
    }
    u
}

/// The closed form `1 - 8 / ((sqrt((9-t)/(1-t)) + 2r)^2 - 1)`.
pub fn phi_closed(r: usize, k: usize) -> RationalSeries {
    let s = radical_of(&RationalSeries::variable(k)).expect("radical is analytic at 0");
    let w = s.add_constant(&int(2 * r as i64));
    let denom = (&w * &w).add_constant(&int(-1));
    let frac = denom
        .inverse()
        .expect("denominator is (3+2r)^2 - 1 at 0")
        .scale(&int(-8));
    frac.add_constant(&int(1))
}

/// `phi_r(0) = 1 - 8 / ((3 + 2r)^2 - 1)`.
pub fn phi_r_at_zero(r: usize) -> BigRational {
    let w = int(3 + 2 * r as i64);
    BigRational::one() - int(8) / (&w * &w - int(1))
}

/// `phi(t)` at a rational point where the radicand is a rational square.
pub fn phi_value(t: &BigRational) -> Option<BigRational> {
    if t.is_zero() {
        return Some(rat(2, 3));
    }
    let radicand = (t - int(9)) * (t - int(1)) * (t - int(1)) * (t - int(1));
    let root = rational_sqrt(&radicand)?;
    Some((root - int(3) + int(6) * t - t * t) / (int(2) * t))
}

/// Printed closed form of `P{A_R^h = 1}`.
pub fn prob_single_ancestor_closed(r: usize, h: usize) -> BigRational {
    let (r, h) = (r as i64, h as i64);
    let numer = int((h + 2) * (h + 2) * (h + 1) * (h + 1) * (2 * r + 2 * h + 3));
    let denom = int((2 * h + 3) * (r + h + 2) * (r + h + 2) * (r + h + 1) * (r + h + 1));
    numer / denom
}

/// Coefficients `[y^j] [t^1] F(c + y (phi_{r+h}(t) - c))`, `c = phi_h(0)`,
/// for `j = 0..=max_j`. This is the law of the number of ancestors.
///
/// With `D(t) = phi_{r+h}(t) - c`, `[t^1] D^j = j D(0)^(j-1) D'(0)`, and
/// `[y^j] F(c + yD) = T_j D^j` where `T_j` are the Taylor coefficients of
/// `F` at `c`, obtained by evaluating `F` on the series `c + s`.
pub fn single_ancestor_pgf(
    r: usize,
    h: usize,
    max_j: usize,
) -> Result<Vec<BigRational>, SeriesError> {
    let c = phi_iterate(h, 1).at(0).clone();
    let phi_rh = phi_iterate(r + h, 1);
    let d0 = phi_rh.at(0) - &c;
    let d1 = phi_rh.at(1).clone();
    let shifted = RationalSeries::variable(max_j.max(1)).add_constant(&c);
    let taylor = f_of(&shifted)?;
    let mut out = Vec::with_capacity(max_j + 1);
    let mut d0_pow = BigRational::one(); // d0^(j-1)
    for j in 0..=max_j {
        if j == 0 {
            out.push(BigRational::zero());
            continue;
        }
        if j > 1 {
            d0_pow *= &d0;
        }
        out.push(taylor.at(j) * int(j as i64) * &d0_pow * &d1);
    }
    Ok(out)
}

/// `P{A_R^h = 1}` by coefficient extraction.
pub fn prob_single_ancestor_extracted(r: usize, h: usize) -> BigRational {
    single_ancestor_pgf(r, h, 1).expect("F is analytic at phi_h(0)")[1].clone()
}

/// Both routes for `P{A_R^h = 1}`: `(closed form, coefficient extraction)`.
pub fn prob_single_ancestor(r: usize, h: usize) -> (BigRational, BigRational) {
    (
        prob_single_ancestor_closed(r, h),
        prob_single_ancestor_extracted(r, h),
    )
}

/// `2(2R+3) / ((R+1)(R+2)(R+3))`.
pub fn expected_inverse_cycle_length_closed(r: usize) -> BigRational {
    let r = r as i64;
    int(2 * (2 * r + 3)) / int((r + 1) * (r + 2) * (r + 3))
}

/// `[t^1] Phi(phi_R(t))` with `Phi(t) = int_0^t F(y)/y dy`.
///
/// For `R = 0` the inner series is `t` and the coefficient is read off
/// `Phi` directly. Otherwise `[t^1] Phi(phi_R) = [s^1] Phi(a + s) * phi_R'(0)`
/// with `a = phi_R(0)`, and `Phi(a + s) - Phi(a)` is the formal integral of
/// `F(a + s) / (a + s)`.
pub fn expected_inverse_cycle_length_series(r: usize) -> BigRational {
    if r == 0 {
        let big_phi = f_series(2).div_t().expect("F(0) = 0").integrate();
        return big_phi.at(1).clone();
    }
    let inner = phi_iterate(r, 1);
    let a = inner.at(0).clone();
    let u = RationalSeries::variable(1).add_constant(&a);
    let integrand = f_of(&u).and_then(|f| f.divide(&u)).expect("a is in (0, 1)");
    let big_phi_shift = integrand.integrate();
    big_phi_shift.at(1) * inner.at(1)
}

/// Both routes for `E |gamma_R|^-1`: `(closed form, series)`.
pub fn expected_inverse_cycle_length(r: usize) -> (BigRational, BigRational) {
    (
        expected_inverse_cycle_length_closed(r),
        expected_inverse_cycle_length_series(r),
    )
}

/// `phi_r'(0) = 64 (3 + 2r) / (3 ((3 + 2r)^2 - 1)^2)`.
pub fn phi_r_derivative_at_zero(r: usize) -> BigRational {
    let w = int(3 + 2 * r as i64);
    let d = &w * &w - int(1);
    int(64) * w / (int(3) * &d * &d)
}

/// Result of one identity check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Runs every exact identity of this module.
pub fn check_all_identities(k: usize, rmax: usize) -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let mut push =
        |name: String, pass: bool, detail: String| out.push(IdentityCheck { name, pass, detail });

    let phi = phi_series(k);
    push(
        "phi(0) = 2/3".into(),
        phi.at(0) == &rat(2, 3),
        phi.at(0).to_string(),
    );
    let at_one = phi_value(&int(1));
    push(
        "phi(1) = 1".into(),
        at_one.as_ref().is_some_and(|v| v.is_one()),
        at_one
            .as_ref()
            .map_or_else(|| "no closed value".to_string(), |v| v.to_string()),
    );
    let f = f_series(k.max(2));
    push("[t^1]F = 1".into(), f.at(1).is_one(), f.at(1).to_string());
    push("F(0) = 0".into(), f.at(0).is_zero(), f.at(0).to_string());

    let mut u = RationalSeries::variable(k);
    for r in 0..=rmax {
        if r > 0 {
            u = if r == 1 {
                phi.clone()
            } else {
                phi_of(&u).expect("exact iterate")
            };
        }
        let closed = phi_closed(r, k);
        push(
            format!("phi_iterate({r},{k}) = phi_closed({r},{k})"),
            u == closed,
            format!("c0 = {}", closed.at(0)),
        );
    }
    for r in 0..=10 {
        for h in 0..=10 {
            let (a, b) = prob_single_ancestor(r, h);
            push(
                format!("P{{A_{r}^{h} = 1}} closed = extracted"),
                a == b,
                a.to_string(),
            );
        }
    }
    for r in 0..=30 {
        let (a, b) = expected_inverse_cycle_length(r);
        push(
            format!("E|gamma_{r}|^-1 closed = series"),
            a == b,
            a.to_string(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Generalized binomial coefficient `C(alpha, k)`.
    fn binom(alpha: &BigRational, k: usize) -> BigRational {
        let mut c = BigRational::one();
        for i in 0..k {
            c = c * (alpha - int(i as i64)) / int(i as i64 + 1);
        }
        c
    }

    /// `(1 + x t)^alpha` by the binomial theorem.
    fn binomial_series(alpha: BigRational, x: BigRational, order: usize) -> RationalSeries {
        let mut xp = BigRational::one();
        let mut coeffs = Vec::new();
        for k in 0..=order {
            coeffs.push(binom(&alpha, k) * &xp);
            xp *= &x;
        }
        RationalSeries::from_coeffs(coeffs)
    }

    /// sqrt((t-9)(t-1)^3) = 3 (1 - t/9)^(1/2) (1 - t)^(3/2), independently of
    /// the Newton iteration.
    fn radicand_root_oracle(order: usize) -> RationalSeries {
        let a = binomial_series(rat(1, 2), rat(-1, 9), order);
        let b = binomial_series(rat(3, 2), int(-1), order);
        (&a * &b).scale(&int(3))
    }

    fn phi_oracle(k: usize) -> RationalSeries {
        let root = radicand_root_oracle(k + 1);
        let numer = &root + &RationalSeries::from_ints(k + 1, &[-3, 6, -1]);
        numer.div_t().unwrap().scale(&rat(1, 2))
    }

    fn f_oracle(k: usize) -> RationalSeries {
        // 3/4 (3 (1 - t/9)^(1/2) (1 - t)^(-1/2) - 3)
        let a = binomial_series(rat(1, 2), rat(-1, 9), k);
        let b = binomial_series(rat(-1, 2), int(-1), k);
        (&a * &b)
            .scale(&int(3))
            .add_constant(&int(-3))
            .scale(&rat(3, 4))
    }

    #[test]
    fn radicand_expansion() {
        let poly = RationalSeries::from_ints(10, &[9, -28, 30, -12, 1]);
        let root = radicand_root_oracle(10);
        assert_eq!(&root * &root, poly);
        assert_eq!(poly.sqrt().unwrap(), root);
    }

    #[test]
    fn phi_first_coefficients() {
        let phi = phi_series(30);
        assert_eq!(phi, phi_oracle(30));
        assert_eq!(phi.at(0), &rat(2, 3));
        assert_eq!(phi.at(1), &rat(5, 27));
        assert_eq!(phi.at(2), &rat(16, 243));
    }

    #[test]
    fn phi_is_a_probability_generating_function() {
        let phi = phi_series(60);
        let zero = BigRational::zero();
        assert!(phi
            .coeffs()
            .iter()
            .all(|c| c > &zero && c < &BigRational::one()));
        let total = phi.partial_sum();
        assert!(total < BigRational::one());
        assert!(series::ratio_to_f64(&total) > 0.99);
        // mean: partial sums of k p_k stay below 1 and approach it
        let mean: BigRational = phi
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c * int(k as i64))
            .sum();
        assert!(mean < BigRational::one());
        assert!(series::ratio_to_f64(&mean) > 0.6);
        assert_eq!(phi_value(&int(1)), Some(int(1)));
    }

    #[test]
    fn f_first_coefficients() {
        let f = f_series(30);
        assert_eq!(f, f_oracle(30));
        assert!(f.at(0).is_zero());
        assert!(f.at(1).is_one());
        assert_eq!(f.at(2), &rat(7, 9));
    }

    #[test]
    fn closed_form_degenerations() {
        assert_eq!(phi_closed(0, 8), RationalSeries::variable(8));
        assert_eq!(phi_closed(1, 50), phi_series(50));
        assert_eq!(phi_closed(1, 20), phi_oracle(20));
        for r in 0..=20 {
            let expected = phi_r_at_zero(r);
            assert_eq!(phi_closed(r, 3).at(0), &expected);
            assert_eq!(phi_iterate(r, 3).at(0), &expected);
            assert_eq!(phi_closed(r, 3).at(1), &phi_r_derivative_at_zero(r));
        }
    }

    #[test]
    fn iterate_matches_closed_form() {
        for r in 0..=8 {
            assert_eq!(phi_iterate(r, 20), phi_closed(r, 20), "r = {r}");
        }
    }

    #[test]
    fn single_ancestor_values() {
        assert_eq!(prob_single_ancestor_closed(1, 1), rat(7, 20));
        assert_eq!(prob_single_ancestor_extracted(1, 1), rat(7, 20));
        for h in 0..=10 {
            assert!(prob_single_ancestor_closed(0, h).is_one());
            assert!(prob_single_ancestor_extracted(0, h).is_one());
        }
        // monotone in h, tends to 1, partial sums unbounded
        let mut prev = BigRational::zero();
        let mut sum = 0.0;
        let mut h = 0;
        while sum <= 10.0 {
            let p = prob_single_ancestor_closed(1, h);
            assert!(p > prev);
            prev = p.clone();
            sum += series::ratio_to_f64(&p);
            h += 1;
        }
        assert!(h < 40, "partial sums exceed 10 after {h} terms");
    }

    #[test]
    fn ancestor_law_sums_to_one() {
        // P{A = j} for j >= 1; the y-polynomial at y = 1 is [t^1] F(phi_{r+h}) = 1
        let pgf = single_ancestor_pgf(2, 1, 400).unwrap();
        let total: f64 = pgf.iter().map(series::ratio_to_f64).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn inverse_cycle_length_values() {
        assert!(expected_inverse_cycle_length_series(0).is_one());
        assert_eq!(expected_inverse_cycle_length_series(1), rat(5, 12));
        assert_eq!(expected_inverse_cycle_length_closed(1), rat(5, 12));
        for r in 0..=30 {
            let (a, b) = expected_inverse_cycle_length(r);
            assert_eq!(a, b, "r = {r}");
        }
    }

    #[test]
    fn identity_suite_passes() {
        let checks = check_all_identities(20, 6);
        assert!(
            checks.iter().all(|c| c.pass),
            "{:?}",
            checks.iter().find(|c| !c.pass)
        );
    }
}
