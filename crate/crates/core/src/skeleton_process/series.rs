//! Truncated power series with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("constant term is zero, series is not invertible")]
    NotInvertible,
    #[error("constant term {0} has no rational square root")]
    NoRationalSqrt(String),
    #[error("constant term must vanish for this operation")]
    NonZeroConstant,
    #[error("truncation order {have} is too small, need {need}")]
    TruncationTooSmall { have: usize, need: usize },
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    (&rn * &rn == *n && &rd * &rd == *d).then(|| BigRational::new(rn, rd))
}

/// A power series known up to and including `t^order`.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalSeries {
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] + O(t^{})", self.order() + 1)
    }
}

impl RationalSeries {
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least one coefficient"
        );
        RationalSeries { coeffs }
    }

    pub fn from_ints(order: usize, values: &[i64]) -> Self {
        let mut coeffs = vec![BigRational::zero(); order + 1];
        for (c, &v) in coeffs.iter_mut().zip(values) {
            *c = int(v);
        }
        RationalSeries { coeffs }
    }

    pub fn constant(order: usize, c: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); order + 1];
        coeffs[0] = c;
        RationalSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(order, BigRational::zero())
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, BigRational::one())
    }

    /// The series `t`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// `[t^k]`, or `None` beyond the truncation order.
    pub fn coeff(&self, k: usize) -> Option<&BigRational> {
        self.coeffs.get(k)
    }

    /// `[t^k]`, panicking beyond the truncation order.
    pub fn at(&self, k: usize) -> &BigRational {
        &self.coeffs[k]
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        RationalSeries {
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        RationalSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_constant(&self, c: &BigRational) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn mul_truncated(&self, other: &Self, order: usize) -> Self {
        let order = order.min(self.order()).min(other.order());
        let mut coeffs = vec![BigRational::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        RationalSeries { coeffs }
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::one(self.order());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let inv0 = a0.recip();
        let mut b: Vec<BigRational> = Vec::with_capacity(self.coeffs.len());
        b.push(inv0.clone());
        for n in 1..self.coeffs.len() {
            let mut s = BigRational::zero();
            for i in 1..=n {
                if !self.coeffs[i].is_zero() {
                    s += &self.coeffs[i] * &b[n - i];
                }
            }
            b.push(-(s * &inv0));
        }
        Ok(RationalSeries { coeffs: b })
    }

    pub fn divide(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self * &other.inverse()?)
    }

    /// Square root with the positive rational root of the constant term,
    /// by Newton iteration `g <- (g + a/g) / 2`, doubling the number of
    /// correct coefficients at each step.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let a0 = &self.coeffs[0];
        let g0 = rational_sqrt(a0).ok_or_else(|| SeriesError::NoRationalSqrt(a0.to_string()))?;
        if g0.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let half = rat(1, 2);
        let mut g = Self::constant(0, g0);
        let mut prec = 0usize;
        while prec < self.order() {
            prec = (2 * prec + 1).min(self.order());
            let a = self.truncate(prec);
            let g_ext = g.extend(prec);
            let q = a.divide(&g_ext)?;
            g = (&g_ext + &q).scale(&half);
        }
        Ok(g)
    }

    /// Zero-pads to a larger order. Only meaningful when the padding is a
    /// starting guess that is subsequently corrected.
    fn extend(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, BigRational::zero());
        RationalSeries { coeffs }
    }

    /// Formal antiderivative with zero constant term. The result is known
    /// to one order higher than `self`.
    pub fn integrate(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / int(k as i64 + 1));
        }
        RationalSeries { coeffs }
    }

    /// Divides by `t`; requires a vanishing constant term and loses one
    /// order of precision.
    pub fn div_t(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonZeroConstant);
        }
        if self.coeffs.len() < 2 {
            return Err(SeriesError::TruncationTooSmall { have: 0, need: 1 });
        }
        Ok(RationalSeries {
            coeffs: self.coeffs[1..].to_vec(),
        })
    }

    /// `self(inner(t))` for an inner series without constant term
    /// (Horner scheme).
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonZeroConstant);
        }
        let order = inner.order();
        let mut acc = Self::zero(order);
        for c in self.coeffs.iter().take(order + 1).rev() {
            acc = (&acc * inner).add_constant(c);
        }
        Ok(acc)
    }

    /// Sum of the known coefficients, i.e. the value at `t = 1` of the
    /// truncated polynomial.
    pub fn partial_sum(&self) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |a, c| a + c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(ratio_to_f64).collect()
    }
}

pub fn ratio_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

impl Add for &RationalSeries {
    type Output = RationalSeries;
    fn add(self, rhs: &RationalSeries) -> RationalSeries {
        let order = self.order().min(rhs.order());
        RationalSeries {
            coeffs: (0..=order)
                .map(|k| &self.coeffs[k] + &rhs.coeffs[k])
                .collect(),
        }
    }
}

impl Sub for &RationalSeries {
    type Output = RationalSeries;
    fn sub(self, rhs: &RationalSeries) -> RationalSeries {
        let order = self.order().min(rhs.order());
        RationalSeries {
            coeffs: (0..=order)
                .map(|k| &self.coeffs[k] - &rhs.coeffs[k])
                .collect(),
        }
    }
}

impl Neg for &RationalSeries {
    type Output = RationalSeries;
    fn neg(self) -> RationalSeries {
        RationalSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &RationalSeries {
    type Output = RationalSeries;
    fn mul(self, rhs: &RationalSeries) -> RationalSeries {
        self.mul_truncated(rhs, self.order().min(rhs.order()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_one_minus_t() {
        let s = RationalSeries::from_ints(6, &[1, -1]);
        let inv = s.inverse().unwrap();
        assert!(inv.coeffs().iter().all(|c| c.is_one()));
        assert_eq!(
            RationalSeries::variable(3).inverse(),
            Err(SeriesError::NotInvertible)
        );
    }

    #[test]
    fn sqrt_squares_back() {
        let s = RationalSeries::from_ints(12, &[9, -28, 30, -12, 1]);
        let r = s.sqrt().unwrap();
        assert_eq!(&r * &r, s);
        assert_eq!(r.at(0), &int(3));
        assert!(matches!(
            RationalSeries::from_ints(3, &[2, 1]).sqrt(),
            Err(SeriesError::NoRationalSqrt(_))
        ));
    }

    #[test]
    fn sqrt_of_rational_constant() {
        let s = RationalSeries::constant(4, rat(25, 81)).add_constant(&int(0));
        let mut c = s.coeffs().to_vec();
        c[1] = rat(1, 3);
        let s = RationalSeries::from_coeffs(c);
        let r = s.sqrt().unwrap();
        assert_eq!(r.at(0), &rat(5, 9));
        assert_eq!(&r * &r, s);
    }

    #[test]
    fn integrate_and_div_t() {
        let s = RationalSeries::from_ints(3, &[1, 1, 1, 1]);
        let i = s.integrate();
        assert_eq!(i.order(), 4);
        assert_eq!(i.at(4), &rat(1, 4));
        assert_eq!(i.div_t().unwrap().at(0), &int(1));
        assert_eq!(s.div_t(), Err(SeriesError::NonZeroConstant));
    }

    #[test]
    fn compose_geometric_with_t_squared() {
        // 1/(1-u) with u = t^2 is 1 + t^2 + t^4 + ...
        let outer = RationalSeries::from_ints(8, &[1; 9]);
        let inner = RationalSeries::from_ints(8, &[0, 0, 1]);
        let c = outer.compose(&inner).unwrap();
        for k in 0..=8 {
            assert_eq!(c.at(k), &int(if k % 2 == 0 { 1 } else { 0 }));
        }
        assert!(outer.compose(&RationalSeries::one(8)).is_err());
    }

    #[test]
    fn rational_sqrt_cases() {
        assert_eq!(rational_sqrt(&rat(49, 4)), Some(rat(7, 2)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(rational_sqrt(&rat(-1, 1)), None);
    }
}
