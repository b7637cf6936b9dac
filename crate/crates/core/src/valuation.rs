//! Divisorial and quasi-monomial valuations evaluated on monomial supports.
//!
//! A function germ at the generic point of a stratum is represented only by the
//! support of its expansion `Σ c_β z^β` in the adapted coordinates, with every
//! nonzero coefficient a unit. The quasi-monomial valuation at `w` then takes the
//! value `min { w·β : β in the support }`. Norms follow `log|f|_x = -v_x(f)`,
//! measured in units of `v(t) = 1`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{CentralFiber, ComplexPoint, ComponentId, Face};
use crate::scalar::{reciprocal, Scalar};

/// Support of a local expansion: a nonempty set of exponent vectors on `N^J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SupportRecord", into = "SupportRecord")]
pub struct MonomialSupport {
    index: Vec<ComponentId>,
    exponents: BTreeSet<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportRecord {
    pub index: Vec<ComponentId>,
    pub exponents: Vec<Vec<u32>>,
}

impl TryFrom<SupportRecord> for MonomialSupport {
    type Error = Error;

    fn try_from(r: SupportRecord) -> Result<Self> {
        MonomialSupport::new(r.index, r.exponents)
    }
}

impl From<MonomialSupport> for SupportRecord {
    fn from(s: MonomialSupport) -> Self {
        SupportRecord { index: s.index, exponents: s.exponents.into_iter().collect() }
    }
}

impl MonomialSupport {
    /// `index` fixes the coordinate order of the exponent vectors. It is sorted
    /// internally, permuting the exponents along with it.
    pub fn new(index: Vec<ComponentId>, exponents: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        let mut order: Vec<usize> = (0..index.len()).collect();
        order.sort_by_key(|&k| index[k]);
        let sorted_index: Vec<_> = order.iter().map(|&k| index[k]).collect();
        let mut set = BTreeSet::new();
        for beta in exponents {
            if beta.len() != index.len() {
                return Err(Error::ExponentLength { expected: index.len(), found: beta.len() });
            }
            set.insert(order.iter().map(|&k| beta[k]).collect());
        }
        if set.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self { index: sorted_index, exponents: set })
    }

    /// A single monomial `z^β`.
    pub fn monomial(index: Vec<ComponentId>, beta: Vec<u32>) -> Result<Self> {
        Self::new(index, [beta])
    }

    /// The constant `1`.
    pub fn unit(index: Vec<ComponentId>) -> Self {
        let zero = vec![0; index.len()];
        Self::new(index, [zero]).expect("constant support is valid")
    }

    /// The uniformizer `t = Π z_j^{m_j}` on a face.
    pub fn uniformizer(face: &Face) -> Self {
        Self::new(face.components.clone(), [face.multiplicities.clone()]).expect("face is nonempty")
    }

    pub fn index(&self) -> &[ComponentId] {
        &self.index
    }

    pub fn exponents(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.exponents.iter()
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn same_index(&self, other: &Self) -> Result<()> {
        if self.index != other.index {
            return Err(Error::IndexMismatch { point: self.index.clone(), support: other.index.clone() });
        }
        Ok(())
    }

    /// Support of a product with generic coefficients: `{α + β}`.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        self.same_index(other)?;
        let exponents = self
            .exponents
            .iter()
            .flat_map(|a| other.exponents.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x + y).collect()))
            .collect();
        Ok(Self { index: self.index.clone(), exponents })
    }

    /// Support of a sum with generic coefficients (no cancellation).
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_index(other)?;
        Ok(Self { index: self.index.clone(), exponents: self.exponents.union(&other.exponents).cloned().collect() })
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.index == other.index && self.exponents.is_subset(&other.exponents)
    }
}

/// A rational section `s / s_0` given by the supports of numerator and denominator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSection {
    pub numerator: MonomialSupport,
    pub denominator: MonomialSupport,
}

impl RationalSection {
    pub fn new(numerator: MonomialSupport, denominator: MonomialSupport) -> Result<Self> {
        numerator.same_index(&denominator)?;
        Ok(Self { numerator, denominator })
    }

    pub fn regular(numerator: MonomialSupport) -> Self {
        let denominator = MonomialSupport::unit(numerator.index.clone());
        Self { numerator, denominator }
    }

    pub fn inverse(&self) -> Self {
        Self { numerator: self.denominator.clone(), denominator: self.numerator.clone() }
    }
}

/// `v_w(f) = min { w·β }` over the support of `f`.
pub fn eval_quasi_monomial<T: Scalar>(p: &ComplexPoint<T>, f: &MonomialSupport) -> Result<T> {
    let index = p.index_set();
    if index != f.index {
        return Err(Error::IndexMismatch { point: index, support: f.index.clone() });
    }
    let weights: Vec<T> = p.weights.values().cloned().collect();
    f.exponents
        .iter()
        .map(|beta| {
            weights.iter().zip(beta).fold(T::zero(), |acc, (w, b)| acc + w.clone() * T::from_int(*b as i64))
        })
        .reduce(T::min_of)
        .ok_or(Error::EmptySupport)
}

/// The vertex `v_{D_i} = m_i^{-1} ord_{D_i}`.
pub fn divisorial_valuation<T: Scalar>(fiber: &CentralFiber, component: ComponentId) -> Result<ComplexPoint<T>> {
    let m = fiber.multiplicity(component)?;
    let stratum = fiber.vertex_stratum(component)?;
    Ok(ComplexPoint::new(stratum, [(component, reciprocal::<T>(m))]))
}

/// `log|s|_φ(x) = -v_x(s/s_0)` for the model metric.
pub fn eval_model_metric_log<T: Scalar>(p: &ComplexPoint<T>, s: &RationalSection) -> Result<T> {
    let num = eval_quasi_monomial(p, &s.numerator)?;
    let den = eval_quasi_monomial(p, &s.denominator)?;
    Ok(den - num)
}

fn section_valuation<T: Scalar>(p: &ComplexPoint<T>, s: &RationalSection) -> Result<T> {
    Ok(eval_quasi_monomial(p, &s.numerator)? - eval_quasi_monomial(p, &s.denominator)?)
}

/// Potential of the Fubini-Study metric on the chart `X_i ≠ 0`:
/// `log max_{j≠i} |X_j|/|X_i| = max_{j≠i} (v(X_i) - v(X_j))`.
pub fn eval_na_fubini_study<T: Scalar>(
    p: &ComplexPoint<T>,
    coordinate_sections: &[RationalSection],
    chart_index: usize,
) -> Result<T> {
    if coordinate_sections.len() < 2 {
        return Err(Error::TooFewCoordinates(coordinate_sections.len()));
    }
    if chart_index >= coordinate_sections.len() {
        return Err(Error::ChartIndex { index: chart_index, count: coordinate_sections.len() });
    }
    let values = coordinate_sections.iter().map(|s| section_valuation(p, s)).collect::<Result<Vec<T>>>()?;
    let vi = values[chart_index].clone();
    Ok(values
        .into_iter()
        .enumerate()
        .filter(|(j, _)| *j != chart_index)
        .map(|(_, vj)| vi.clone() - vj)
        .reduce(T::max_of)
        .expect("at least one other coordinate"))
}
