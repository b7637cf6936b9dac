//! Scalar abstraction shared by the exact (rational) and floating-point code paths.
//!
//! Combinatorial operations are run with [`Rational`](crate::Rational) so that
//! simplex constraints hold as equalities. The hybrid laboratory produces points
//! whose coordinates come out of logarithms, so the same point and valuation code
//! also runs over `f64`, where equality means agreement within [`Scalar::tolerance`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// A totally ordered field element usable as a simplex coordinate.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromStr + Send + Sync + 'static
{
    /// `true` for exact arithmetic; equality checks then use `==`.
    const EXACT: bool;

    fn from_int(n: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Largest discrepancy accepted by [`Scalar::approx_eq`].
    fn tolerance() -> Self;

    fn approx_eq(&self, other: &Self) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.clone() - other.clone()).abs() <= Self::tolerance()
        }
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator/denominator too large for a direct conversion
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    fn tolerance() -> Self {
        Self::zero()
    }
}

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        Ratio::from_integer(n)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        Self::zero()
    }
}

/// Converts a float into an exact rational (the binary expansion of `x`).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

/// `1 / n` in any scalar type.
pub fn reciprocal<T: Scalar>(n: u32) -> T {
    T::one() / T::from_int(n as i64)
}

pub(crate) fn sum<T: Scalar, I: IntoIterator<Item = T>>(items: I) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x)
}

pub(crate) fn is_one<T: Scalar>(x: &T) -> bool {
    x.approx_eq(&T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parses_fraction_strings() {
        let q: BigRational = "3/4".parse().unwrap();
        assert_eq!(q, BigRational::from_ratio(3, 4));
        assert_eq!(q.to_string(), "3/4");
        let whole: BigRational = "2".parse().unwrap();
        assert_eq!(whole.to_string(), "2");
        assert!("1/0".parse::<BigRational>().is_err());
    }

    #[test]
    fn float_equality_is_tolerant() {
        assert!(0.1f64.approx_eq(&(0.3 - 0.2)));
        assert!(!BigRational::from_ratio(1, 3).approx_eq(&BigRational::from_ratio(333, 1000)));
    }

    #[test]
    fn huge_rationals_still_convert() {
        let big = BigInt::from(10).pow(400);
        let q = Ratio::new(big.clone() + 1, big * 2);
        assert!((Scalar::to_f64(&q) - 0.5).abs() < 1e-12);
    }
}
