//! The hybrid norm on the closed disk of radius `r`.
//!
//! A point `z` of the disk defines the multiplicative seminorm
//! `|f|_z = r^{log|f(z)| / log|z|}` for `z ≠ 0` and `|f|_0 = r^{ord_0 f}`. The
//! exponent is computed after factoring out the lowest-order term, so tiny `|z|`
//! neither underflows nor overflows.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};

/// A finite Laurent polynomial `Σ a_n t^n` with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPolynomial<F: Float> {
    terms: BTreeMap<i32, Complex<F>>,
}

impl<F: Float> LaurentPolynomial<F> {
    /// Zero coefficients are dropped.
    pub fn new(terms: impl IntoIterator<Item = (i32, Complex<F>)>) -> Self {
        let mut map: BTreeMap<i32, Complex<F>> = BTreeMap::new();
        for (n, a) in terms {
            let entry = map.entry(n).or_insert_with(Complex::zero);
            *entry = *entry + a;
        }
        map.retain(|_, a| !a.is_zero());
        Self { terms: map }
    }

    pub fn monomial(n: i32, a: Complex<F>) -> Self {
        Self::new([(n, a)])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Order of vanishing at `t = 0`; `None` for the zero polynomial.
    pub fn ord0(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex<F>)> + '_ {
        self.terms.iter().map(|(n, a)| (*n, *a))
    }

    pub fn eval(&self, z: Complex<F>) -> Complex<F> {
        self.terms.iter().fold(Complex::zero(), |acc, (n, a)| acc + *a * z.powi(*n))
    }

    /// `f(z) / z^{ord_0 f}`, a polynomial in `z` with nonzero constant term.
    fn eval_unit_part(&self, z: Complex<F>) -> Complex<F> {
        let k = self.ord0().unwrap_or(0);
        self.terms.iter().fold(Complex::zero(), |acc, (n, a)| acc + *a * z.powi(*n - k))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().flat_map(|(n, a)| other.terms.iter().map(move |(m, b)| (n + m, *a * *b))))
    }
}

/// Value of the hybrid norm, kept with its exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridNorm<F> {
    /// `log|f(z)| / log|z|`, or `ord_0 f` at the origin.
    pub exponent: F,
    /// `r^exponent`.
    pub value: F,
    /// Set when `f(z) = 0` away from the origin; the exponent is then `+∞`.
    pub vanishes: bool,
}

pub fn hybrid_norm<F: Float>(f: &LaurentPolynomial<F>, z: Complex<F>, r: F) -> Result<HybridNorm<F>> {
    let k = f.ord0().ok_or(Error::ZeroLaurent)?;
    let r64 = r.to_f64().unwrap_or(f64::NAN);
    if !(r > F::zero() && r < F::one()) {
        return Err(Error::Radius(r64));
    }
    let modulus = z.norm();
    if modulus > r {
        return Err(Error::OutsideDisk { modulus: modulus.to_f64().unwrap_or(f64::NAN), radius: r64 });
    }
    let kf = F::from(k).expect("i32 fits in a float");
    if z.is_zero() {
        return Ok(HybridNorm { exponent: kf, value: r.powf(kf), vanishes: false });
    }
    let unit = f.eval_unit_part(z);
    if unit.is_zero() {
        return Ok(HybridNorm { exponent: F::infinity(), value: F::zero(), vanishes: true });
    }
    let exponent = kf + unit.norm().ln() / modulus.ln();
    Ok(HybridNorm { exponent, value: (exponent * r.ln()).exp(), vanishes: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn t_pow(n: i32) -> LaurentPolynomial<f64> {
        LaurentPolynomial::monomial(n, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn constant_has_norm_one() {
        let one = t_pow(0);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.1), Complex64::new(-0.01, 0.0)] {
            assert!((hybrid_norm(&one, z, 0.5).unwrap().value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniformizer_has_norm_r() {
        let t = t_pow(1);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.2, -0.3), Complex64::new(1e-9, 0.0)] {
            assert!((hybrid_norm(&t, z, 0.5).unwrap().value - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn square_at_one_hundredth() {
        // log(1e-4)/log(1e-2) = 2
        let h = hybrid_norm(&t_pow(2), Complex64::new(0.01, 0.0), 0.5).unwrap();
        assert!((h.exponent - 2.0).abs() < 1e-14);
        assert!((h.value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn errors_and_zeros() {
        let z = Complex64::new(0.1, 0.0);
        assert_eq!(hybrid_norm(&LaurentPolynomial::<f64>::new([]), z, 0.5).unwrap_err(), Error::ZeroLaurent);
        assert_eq!(hybrid_norm(&t_pow(1), z, 1.0).unwrap_err(), Error::Radius(1.0));
        assert!(matches!(hybrid_norm(&t_pow(1), Complex64::new(0.6, 0.0), 0.5), Err(Error::OutsideDisk { .. })));
        // f = t - 0.1 vanishes at z = 0.1
        let f = LaurentPolynomial::new([(1, Complex64::new(1.0, 0.0)), (0, Complex64::new(-0.1, 0.0))]);
        let h = hybrid_norm(&f, z, 0.5).unwrap();
        assert!(h.vanishes && h.value == 0.0 && h.exponent.is_infinite());
    }

    #[test]
    fn negative_orders_at_tiny_z() {
        let f = LaurentPolynomial::new([(-40, Complex64::new(2.0, 0.0)), (3, Complex64::new(1.0, 1.0))]);
        let h = hybrid_norm(&f, Complex64::new(1e-30, 0.0), 0.5).unwrap();
        assert!((h.exponent - (-40.0 + 2f64.ln() / 1e-30f64.ln())).abs() < 1e-12);
        assert!(h.value.is_finite());
    }

    #[test]
    fn like_terms_combine() {
        let f = LaurentPolynomial::new([(1, Complex64::new(1.0, 0.0)), (1, Complex64::new(-1.0, 0.0))]);
        assert!(f.is_zero());
        let g = t_pow(1).mul(&t_pow(-1));
        assert_eq!(g, t_pow(0));
    }
}
