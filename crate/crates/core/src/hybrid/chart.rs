//! Adapted charts and their Log maps into the dual complex.

use std::f64::consts::TAU;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{ComplexPoint, ComponentId, Face, StratumId};
use crate::scalar::Scalar;

/// A chart `(U, z)` meeting exactly the stratum `Y_U`, with `z_j` a local
/// equation of `D_j` and `f_U = Π z_j^{m_j}` an equation of `X_0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptedChart {
    pub components: Vec<ComponentId>,
    pub multiplicities: Vec<u32>,
    pub stratum: StratumId,
}

impl AdaptedChart {
    pub fn from_face(face: &Face) -> Self {
        Self { components: face.components.clone(), multiplicities: face.multiplicities.clone(), stratum: face.stratum }
    }

    /// The reduced node `z_1 z_2 = t` of [`gallery::node_fiber`](crate::gallery::node_fiber).
    pub fn node() -> Self {
        Self { components: vec![ComponentId(1), ComponentId(2)], multiplicities: vec![1, 1], stratum: crate::gallery::NODE }
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    /// `log|f_U(z)|`.
    pub fn log_equation<F: Float>(&self, z: &[Complex<F>]) -> Result<F> {
        let logs = self.log_moduli(z)?;
        Ok(self.weighted_sum(&logs))
    }

    fn weighted_sum<F: Float>(&self, logs: &[F]) -> F {
        logs.iter()
            .zip(&self.multiplicities)
            .fold(F::zero(), |acc, (l, m)| acc + *l * F::from(*m).expect("small integer"))
    }

    fn log_moduli<F: Float>(&self, z: &[Complex<F>]) -> Result<Vec<F>> {
        if z.len() != self.arity() {
            return Err(Error::SampleArity { expected: self.arity(), found: z.len() });
        }
        z.iter()
            .enumerate()
            .map(|(index, zj)| {
                let modulus = zj.norm();
                if modulus > F::zero() && modulus < F::one() {
                    Ok(modulus.ln())
                } else {
                    Err(Error::CoordinateModulus { index, modulus: modulus.to_f64().unwrap_or(f64::NAN) })
                }
            })
            .collect()
    }
}

/// `Log_U(z) = (log|z_j| / log|f_U(z)|)_j`, a point in the open face `σ_U`.
pub fn log_map<F: Float + Scalar>(chart: &AdaptedChart, z: &[Complex<F>]) -> Result<ComplexPoint<F>> {
    let logs = chart.log_moduli(z)?;
    let total = chart.weighted_sum(&logs);
    Ok(ComplexPoint::new(chart.stratum, chart.components.iter().zip(&logs).map(|(c, l)| (*c, *l / total))))
}

/// Declared unit factors `z'_j = u_j z_j` relating two charts, with bounds
/// `lower ≤ |u_j| ≤ upper`. `values` holds one unit tuple per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitFactors {
    pub lower: f64,
    pub upper: f64,
    pub values: Vec<Vec<Complex64>>,
}

impl UnitFactors {
    pub fn constant(units: &[Complex64], lower: f64, upper: f64, count: usize) -> Self {
        Self { lower, upper, values: vec![units.to_vec(); count] }
    }

    /// Independent units with modulus uniform in `[lower, upper]` and uniform phase.
    pub fn random(arity: usize, lower: f64, upper: f64, count: usize, seed: u64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::UnitBounds { modulus: f64::NAN, lower, upper });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..count)
            .map(|_| {
                (0..arity)
                    .map(|_| Complex64::from_polar(rng.gen_range(lower..=upper), rng.gen_range(0.0..TAU)))
                    .collect()
            })
            .collect();
        Ok(Self { lower, upper, values })
    }

    /// Whether `u_j z_j` is again a point of the punctured polydisk.
    pub fn keeps_in_chart(units: &[Complex64], z: &[Complex64]) -> bool {
        units.len() == z.len() && units.iter().zip(z).all(|(u, x)| (u * x).norm() < 1.0 && (u * x).norm() > 0.0)
    }
}

/// Deviation between the Log maps of two charts at one value of `|t|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityRow {
    pub t_abs: f64,
    /// `δ(t) = max |Log_U − Log_{U'}|` over the samples (max-coordinate norm).
    pub delta: f64,
    /// Largest `log(1/|f_U|)` over the samples.
    pub log_inverse_equation: f64,
    /// Largest per-sample `|Log_U − Log_{U'}| · log(1/|f_U|)`.
    pub product: f64,
}

/// Compares `Log_U` with `Log_{U'}` on samples at each `|t|`; the product
/// `δ · log(1/|f_U|)` is expected to stay bounded as `|t| → 0`.
pub fn chart_compatibility_check(
    chart: &AdaptedChart,
    batches: &[(f64, Vec<Vec<Complex64>>, UnitFactors)],
) -> Result<Vec<CompatibilityRow>> {
    let mut rows = Vec::with_capacity(batches.len());
    for (t_abs, samples, units) in batches {
        if units.values.len() != samples.len() {
            return Err(Error::WeightCount { expected: samples.len(), found: units.values.len() });
        }
        let mut row = CompatibilityRow { t_abs: *t_abs, delta: 0.0, log_inverse_equation: 0.0, product: 0.0 };
        for (z, u) in samples.iter().zip(&units.values) {
            if u.len() != z.len() {
                return Err(Error::SampleArity { expected: z.len(), found: u.len() });
            }
            for uj in u {
                let modulus = uj.norm();
                if !(units.lower > 0.0 && modulus >= units.lower && modulus <= units.upper) {
                    return Err(Error::UnitBounds { modulus, lower: units.lower, upper: units.upper });
                }
            }
            let primed: Vec<Complex64> = z.iter().zip(u).map(|(a, b)| a * b).collect();
            let p = log_map(chart, z)?;
            let q = log_map(chart, &primed)?;
            let dev = p.weights.values().zip(q.weights.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let log_inv = -chart.log_equation(z)?;
            row.delta = row.delta.max(dev);
            row.log_inverse_equation = row.log_inverse_equation.max(log_inv);
            row.product = row.product.max(dev * log_inv);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(r: f64, theta: f64) -> Complex64 {
        Complex64::from_polar(r, theta)
    }

    #[test]
    fn equal_moduli_give_midpoint() {
        let p = log_map(&AdaptedChart::node(), &[polar(0.1, 0.3), polar(0.1, 2.0)]).unwrap();
        for w in p.weights.values() {
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn exponent_bookkeeping() {
        for t in [0.5, 1e-3, 1e-9] {
            let p = log_map(&AdaptedChart::node(), &[polar(f64::powf(t, 0.3), 0.0), polar(f64::powf(t, 0.7), 1.0)]).unwrap();
            let w: Vec<f64> = p.weights.values().copied().collect();
            assert!((w[0] - 0.3).abs() < 1e-12 && (w[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplicities_enter_the_equation() {
        let chart = AdaptedChart { components: vec![ComponentId(1), ComponentId(2)], multiplicities: vec![2, 1], stratum: StratumId(3) };
        let eps = 0.05;
        let p = log_map(&chart, &[polar(eps, 0.0), polar(eps * eps, 0.0)]).unwrap();
        let w: Vec<f64> = p.weights.values().copied().collect();
        assert!((w[0] - 0.25).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
        assert!((2.0 * w[0] + w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_points_off_the_punctured_polydisk() {
        let chart = AdaptedChart::node();
        assert!(matches!(log_map(&chart, &[polar(0.0, 0.0), polar(0.5, 0.0)]), Err(Error::CoordinateModulus { index: 0, .. })));
        assert!(matches!(log_map(&chart, &[polar(0.5, 0.0), polar(1.0, 0.0)]), Err(Error::CoordinateModulus { index: 1, .. })));
        assert!(matches!(log_map(&chart, &[polar(0.5, 0.0)]), Err(Error::SampleArity { .. })));
    }

    #[test]
    fn trivial_units_give_zero_deviation() {
        let chart = AdaptedChart::node();
        let t = 1e-4;
        let samples: Vec<_> = (1..10).map(|k| {
            let u = k as f64 / 10.0;
            vec![polar(f64::powf(t, u), 0.2), polar(f64::powf(t, 1.0 - u), -0.2)]
        }).collect();
        let units = UnitFactors::constant(&[Complex64::new(1.0, 0.0); 2], 1.0, 1.0, samples.len());
        let rows = chart_compatibility_check(&chart, &[(t, samples, units)]).unwrap();
        assert_eq!(rows[0].delta, 0.0);
    }

    #[test]
    fn random_units_respect_their_bounds() {
        let u = UnitFactors::random(2, 0.5, 2.0, 500, 1).unwrap();
        assert!(u.values.iter().flatten().all(|x| (0.5..=2.0 + 1e-12).contains(&x.norm())));
        assert_eq!(u, UnitFactors::random(2, 0.5, 2.0, 500, 1).unwrap());
        assert!(UnitFactors::random(2, 2.0, 0.5, 1, 0).is_err());
        let z = [polar(0.6, 0.0), polar(0.1, 0.0)];
        assert!(!UnitFactors::keeps_in_chart(&[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)], &z));
        assert!(UnitFactors::keeps_in_chart(&[Complex64::new(1.5, 0.0), Complex64::new(1.0, 0.0)], &z));
    }

    #[test]
    fn unit_bounds_are_enforced() {
        let chart = AdaptedChart::node();
        let samples = vec![vec![polar(0.1, 0.0), polar(0.1, 0.0)]];
        let units = UnitFactors::constant(&[Complex64::new(3.0, 0.0), Complex64::new(1.0, 0.0)], 0.5, 2.0, 1);
        assert!(matches!(chart_compatibility_check(&chart, &[(0.01, samples, units)]), Err(Error::UnitBounds { .. })));
    }
}
