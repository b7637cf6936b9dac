//! Atomic non-archimedean Monge-Ampère measures, curve-case limit measures and
//! essential skeleta.
//!
//! For a model metric of `(X, L)` with `X_0 = Σ m_i D_i` the Monge-Ampère
//! measure is `Σ_i m_i (L^n · D_i) δ_{v_i}`. Degree data is supplied by the
//! caller; since `X_0` is principal, `Σ_i m_i (L^n · D_i) = L^n`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::fiber::{build_dual_complex, CentralFiber, ComponentId, StratumId};
use crate::scalar::{self, Scalar};

/// Intersection numbers `d_i = (L^n · D_i)` and the volume `L^n`.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar, <T as std::str::FromStr>::Err: std::fmt::Display"))]
pub struct ModelPolarization<T: Scalar> {
    #[serde_as(as = "BTreeMap<_, DisplayFromStr>")]
    pub degrees: BTreeMap<ComponentId, T>,
    #[serde_as(as = "DisplayFromStr")]
    pub total_degree: T,
}

impl<T: Scalar> ModelPolarization<T> {
    pub fn new(degrees: impl IntoIterator<Item = (ComponentId, T)>, total_degree: T) -> Self {
        Self { degrees: degrees.into_iter().collect(), total_degree }
    }

    /// Checks that the degrees cover exactly the components of `fiber` and that
    /// `Σ m_i d_i = L^n`.
    pub fn check(&self, fiber: &CentralFiber) -> Result<()> {
        for c in fiber.components() {
            if !self.degrees.contains_key(&c.id) {
                return Err(Error::MissingDegree(c.id));
            }
        }
        if let Some(extra) = self.degrees.keys().find(|c| fiber.component(**c).is_none()) {
            return Err(Error::ExtraDegree(*extra));
        }
        let sum = scalar::sum(
            fiber.components().iter().map(|c| T::from_int(c.multiplicity as i64) * self.degrees[&c.id].clone()),
        );
        if !sum.approx_eq(&self.total_degree) {
            return Err(Error::DegreeConsistency { sum: sum.to_string(), total: self.total_degree.to_string() });
        }
        Ok(())
    }
}

/// A finite nonnegative combination of Dirac masses at divisorial vertices.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar, <T as std::str::FromStr>::Err: std::fmt::Display"))]
pub struct AtomicMeasure<T: Scalar> {
    #[serde_as(as = "BTreeMap<_, DisplayFromStr>")]
    masses: BTreeMap<ComponentId, T>,
}

impl<T: Scalar> AtomicMeasure<T> {
    pub fn new(masses: impl IntoIterator<Item = (ComponentId, T)>) -> Result<Self> {
        let masses: BTreeMap<_, _> = masses.into_iter().collect();
        if let Some((c, m)) = masses.iter().find(|(_, m)| m.is_negative()) {
            return Err(Error::NegativeMass { component: *c, mass: m.to_string() });
        }
        Ok(Self { masses })
    }

    pub fn dirac(at: ComponentId, mass: T) -> Result<Self> {
        Self::new([(at, mass)])
    }

    pub fn masses(&self) -> &BTreeMap<ComponentId, T> {
        &self.masses
    }

    pub fn mass(&self, c: ComponentId) -> T {
        self.masses.get(&c).cloned().unwrap_or_else(T::zero)
    }

    pub fn total_mass(&self) -> T {
        scalar::sum(self.masses.values().cloned())
    }

    /// Vertices carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = ComponentId> + '_ {
        self.masses.iter().filter(|(_, m)| m.is_positive()).map(|(c, _)| *c)
    }

    pub fn scaled(&self, factor: &T) -> Result<Self> {
        Self::new(self.masses.iter().map(|(c, m)| (*c, m.clone() * factor.clone())))
    }

    /// Rescales to total mass one. Returns `None` for the zero measure.
    pub fn normalized(&self) -> Option<Self> {
        let total = self.total_mass();
        if total.is_zero() {
            return None;
        }
        Some(Self { masses: self.masses.iter().map(|(c, m)| (*c, m.clone() / total.clone())).collect() })
    }

    pub fn to_f64(&self) -> AtomicMeasure<f64> {
        AtomicMeasure { masses: self.masses.iter().map(|(c, m)| (*c, m.to_f64())).collect() }
    }
}

/// `MA(φ_L) = Σ_i m_i (L^n · D_i) δ_{v_i}`.
pub fn monge_ampere<T: Scalar>(fiber: &CentralFiber, pol: &ModelPolarization<T>) -> Result<AtomicMeasure<T>> {
    pol.check(fiber)?;
    AtomicMeasure::new(
        fiber.components().iter().map(|c| (c.id, T::from_int(c.multiplicity as i64) * pol.degrees[&c.id].clone())),
    )
}

/// Valence of each vertex of a curve's dual graph; self-nodes count twice.
pub fn curve_valences(fiber: &CentralFiber) -> BTreeMap<ComponentId, u32> {
    let mut val: BTreeMap<_, _> = fiber.components().iter().map(|c| (c.id, 2 * c.self_nodes)).collect();
    for s in fiber.strata().iter().filter(|s| s.component_set.len() == 2) {
        for c in &s.component_set {
            *val.get_mut(c).expect("strata reference known components") += 1;
        }
    }
    val
}

fn connected_components(fiber: &CentralFiber) -> usize {
    let ids: Vec<_> = fiber.components().iter().map(|c| c.id).collect();
    let mut parent: BTreeMap<ComponentId, ComponentId> = ids.iter().map(|c| (*c, *c)).collect();
    fn root(parent: &mut BTreeMap<ComponentId, ComponentId>, mut c: ComponentId) -> ComponentId {
        while parent[&c] != c {
            let up = parent[&parent[&c]];
            parent.insert(c, up);
            c = up;
        }
        c
    }
    for s in fiber.strata() {
        let mut it = s.component_set.iter();
        if let Some(first) = it.next() {
            for other in it {
                let (a, b) = (root(&mut parent, *first), root(&mut parent, *other));
                parent.insert(a, b);
            }
        }
    }
    let roots: BTreeSet<_> = ids.iter().map(|c| root(&mut parent, *c)).collect();
    roots.len()
}

/// Arithmetic genus `Σ g_i + b_1(Γ)` of a connected reduced nodal curve fiber.
pub fn curve_genus(fiber: &CentralFiber) -> Result<u32> {
    check_curve(fiber)?;
    let vertices = fiber.components().len() as i64;
    let edges = fiber.strata().iter().filter(|s| s.component_set.len() == 2).count() as i64
        + fiber.components().iter().map(|c| c.self_nodes as i64).sum::<i64>();
    let b1 = edges - vertices + 1;
    let genera: u32 = fiber.components().iter().map(|c| c.genus.unwrap_or(0)).sum();
    Ok(genera + b1 as u32)
}

fn check_curve(fiber: &CentralFiber) -> Result<()> {
    if fiber.fiber_dimension() != 1 {
        return Err(Error::NotACurve(fiber.fiber_dimension()));
    }
    if let Some(c) = fiber.components().iter().find(|c| c.multiplicity != 1) {
        return Err(Error::Unreduced(c.id, c.multiplicity));
    }
    if let Some(c) = fiber.components().iter().find(|c| c.genus.is_none()) {
        return Err(Error::MissingGenus(c.id));
    }
    if let Some(s) = fiber.strata().iter().find(|s| s.component_set.len() > 2) {
        return Err(Error::NotANode(s.id));
    }
    match connected_components(fiber) {
        1 => Ok(()),
        n => Err(Error::Disconnected(n)),
    }
}

/// Limit measure for a degenerating family of curves: mass `2 g(C_i) - 2 + val(v_i)`
/// at each vertex, total `2g - 2`.
pub fn curve_canonical_measure<T: Scalar>(fiber: &CentralFiber) -> Result<AtomicMeasure<T>> {
    check_curve(fiber)?;
    let val = curve_valences(fiber);
    let mut masses = BTreeMap::new();
    for c in fiber.components() {
        let mass = 2 * c.genus.expect("checked") as i64 - 2 + val[&c.id] as i64;
        if mass < 0 {
            return Err(Error::NegativeMass { component: c.id, mass: mass.to_string() });
        }
        masses.insert(c.id, T::from_int(mass));
    }
    AtomicMeasure::new(masses)
}

/// Degrees `d_i = 2 g(C_i) - 2 + val(v_i)` of the relative canonical bundle on
/// the components of a reduced curve fiber, with `L^n = 2g - 2`.
pub fn curve_canonical_polarization<T: Scalar>(fiber: &CentralFiber) -> Result<ModelPolarization<T>> {
    check_curve(fiber)?;
    let val = curve_valences(fiber);
    let degrees: BTreeMap<_, _> = fiber
        .components()
        .iter()
        .map(|c| (c.id, T::from_int(2 * c.genus.unwrap_or(0) as i64 - 2 + val[&c.id] as i64)))
        .collect();
    let g = curve_genus(fiber)?;
    Ok(ModelPolarization::new(degrees, T::from_int(2 * g as i64 - 2)))
}

/// Repackages the masses `∫_{D_i°} μ` of the archimedean limit as the atomic
/// hybrid limit `Σ_i (∫_{D_i°} μ) δ_{v_i}`. Requires a reduced fiber.
pub fn dirac_limit<T: Scalar>(
    fiber: &CentralFiber,
    limit_masses: &BTreeMap<ComponentId, T>,
) -> Result<AtomicMeasure<T>> {
    if let Some(c) = fiber.components().iter().find(|c| c.multiplicity != 1) {
        return Err(Error::Unreduced(c.id, c.multiplicity));
    }
    for c in fiber.components() {
        if !limit_masses.contains_key(&c.id) {
            return Err(Error::MissingMass(c.id));
        }
    }
    if let Some(extra) = limit_masses.keys().find(|c| fiber.component(**c).is_none()) {
        return Err(Error::UnknownComponent(*extra));
    }
    AtomicMeasure::new(limit_masses.iter().map(|(c, m)| (*c, m.clone())))
}

/// An `m`-pluricanonical form, recorded by its orders of vanishing along the components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PluricanonicalForm {
    pub level: u32,
    pub ords: BTreeMap<ComponentId, i64>,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar, <T as std::str::FromStr>::Err: std::fmt::Display"))]
pub struct FormSkeleton<T: Scalar> {
    #[serde_as(as = "BTreeMap<_, DisplayFromStr>")]
    pub weights: BTreeMap<ComponentId, T>,
    #[serde_as(as = "DisplayFromStr")]
    pub min_weight: T,
    /// Faces (by stratum) all of whose vertices attain the minimal weight.
    pub faces: BTreeSet<StratumId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar, <T as std::str::FromStr>::Err: std::fmt::Display"))]
pub struct EssentialSkeleton<T: Scalar> {
    pub per_form: Vec<FormSkeleton<T>>,
    pub union: BTreeSet<StratumId>,
    /// Components where `ord_{D_i}(Ω) + m < 0` for some form.
    pub warnings: Vec<String>,
}

/// Weights `w_i = (ord_{D_i}(Ω) + m) / m_i` and the faces where they are minimal,
/// for each supplied form, together with the union over forms.
pub fn essential_skeleton<T: Scalar>(
    fiber: &CentralFiber,
    forms: &[PluricanonicalForm],
) -> Result<EssentialSkeleton<T>> {
    if forms.is_empty() {
        return Err(Error::NoForms);
    }
    let complex = build_dual_complex(fiber)?;
    let mut per_form = Vec::with_capacity(forms.len());
    let mut warnings = Vec::new();
    for (k, form) in forms.iter().enumerate() {
        if form.level == 0 {
            return Err(Error::ZeroLevel);
        }
        let mut weights = BTreeMap::new();
        for c in fiber.components() {
            let ord = *form.ords.get(&c.id).ok_or(Error::MissingOrd(c.id))?;
            let shifted = ord + form.level as i64;
            if shifted < 0 {
                warnings.push(format!("form {k}: ord + m = {shifted} < 0 on {}", c.id));
            }
            weights.insert(c.id, T::from_ratio(shifted, c.multiplicity as i64));
        }
        let min_weight = weights.values().cloned().reduce(T::min_of).expect("fiber has a component");
        let faces = complex
            .faces()
            .filter(|f| f.components.iter().all(|c| weights[c] == min_weight))
            .map(|f| f.stratum)
            .collect();
        per_form.push(FormSkeleton { weights, min_weight, faces });
    }
    let union = per_form.iter().flat_map(|f| f.faces.iter().copied()).collect();
    Ok(EssentialSkeleton { per_form, union, warnings })
}
