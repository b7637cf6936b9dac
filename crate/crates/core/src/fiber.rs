//! Central fibers of snc degenerations and their dual complexes.
//!
//! A [`CentralFiber`] records the combinatorics of `X_0 = Σ m_i D_i`: the
//! components with their multiplicities and the strata (connected components of
//! the intersections `D_J`). Strata are supplied by the caller; nothing here looks
//! at equations. The dual complex has one simplex
//! `σ_Y = { w ∈ Q^J_{≥0} : Σ m_j w_j = 1 }` per stratum `Y`, and `σ_Y` is a face of
//! `σ_{Y'}` exactly when `Y' ⊂ Y`.
//!
//! When `D_J` has several connected components, the branch of each face is
//! resolved in this order: the only stratum with that component set, then the
//! stratum's explicit `faces` hints, then a stratum with the same branch label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StratumId(pub u32);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.0)
    }
}

impl fmt::Display for StratumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Y{}", self.0)
    }
}

/// An irreducible component `D_i` of the central fiber.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: ComponentId,
    pub multiplicity: u32,
    /// Geometric genus; only meaningful when the fibers are curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
    /// Number of nodes whose two branches both lie on this component (curves only).
    ///
    /// Such nodes are not snc strata and do not appear in the dual complex; they
    /// only enter the valence count of the curve-case limit measure.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub self_nodes: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl Component {
    pub fn new(id: u32, multiplicity: u32) -> Self {
        Self { id: ComponentId(id), multiplicity, genus: None, self_nodes: 0, name: String::new() }
    }

    pub fn with_genus(mut self, genus: u32) -> Self {
        self.genus = Some(genus);
        self
    }

    pub fn with_self_nodes(mut self, count: u32) -> Self {
        self.self_nodes = count;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// A stratum: one connected component of `D_J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub id: StratumId,
    pub component_set: BTreeSet<ComponentId>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub branch_label: String,
    /// Strata known to contain this one, used to disambiguate branches of faces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faces: Vec<StratumId>,
}

impl Stratum {
    pub fn new(id: u32, components: impl IntoIterator<Item = u32>) -> Self {
        Self {
            id: StratumId(id),
            component_set: components.into_iter().map(ComponentId).collect(),
            branch_label: String::new(),
            faces: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.branch_label = label.into();
        self
    }

    pub fn with_faces(mut self, faces: impl IntoIterator<Item = u32>) -> Self {
        self.faces = faces.into_iter().map(StratumId).collect();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub fiber_dimension: usize,
    pub components: Vec<Component>,
    pub strata: Vec<Stratum>,
}

/// Combinatorial record of an snc central fiber. Always valid once constructed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FiberRecord", into = "FiberRecord")]
pub struct CentralFiber {
    fiber_dimension: usize,
    components: Vec<Component>,
    strata: Vec<Stratum>,
    component_index: BTreeMap<ComponentId, usize>,
    stratum_index: BTreeMap<StratumId, usize>,
}

impl TryFrom<FiberRecord> for CentralFiber {
    type Error = Error;

    fn try_from(r: FiberRecord) -> Result<Self> {
        CentralFiber::new(r.fiber_dimension, r.components, r.strata)
    }
}

impl From<CentralFiber> for FiberRecord {
    fn from(f: CentralFiber) -> Self {
        FiberRecord { fiber_dimension: f.fiber_dimension, components: f.components, strata: f.strata }
    }
}

impl CentralFiber {
    pub fn new(fiber_dimension: usize, components: Vec<Component>, strata: Vec<Stratum>) -> Result<Self> {
        let mut component_index = BTreeMap::new();
        for (k, c) in components.iter().enumerate() {
            if c.multiplicity == 0 {
                return Err(Error::ZeroMultiplicity { id: c.id });
            }
            if component_index.insert(c.id, k).is_some() {
                return Err(Error::DuplicateComponent(c.id));
            }
        }

        let mut stratum_index = BTreeMap::new();
        let mut branches: BTreeMap<(&BTreeSet<ComponentId>, &str), StratumId> = BTreeMap::new();
        let mut by_set: BTreeMap<&BTreeSet<ComponentId>, Vec<StratumId>> = BTreeMap::new();
        for (k, s) in strata.iter().enumerate() {
            if stratum_index.insert(s.id, k).is_some() {
                return Err(Error::DuplicateStratum(s.id));
            }
            if s.component_set.is_empty() {
                return Err(Error::EmptyStratum(s.id));
            }
            if let Some(c) = s.component_set.iter().find(|c| !component_index.contains_key(c)) {
                return Err(Error::UnknownComponentInStratum { stratum: s.id, component: *c });
            }
            if s.component_set.len() > fiber_dimension + 1 {
                return Err(Error::CodimensionBound {
                    stratum: s.id,
                    size: s.component_set.len(),
                    limit: fiber_dimension + 1,
                });
            }
            if let Some(first) = branches.insert((&s.component_set, s.branch_label.as_str()), s.id) {
                return Err(Error::DuplicateBranch { first, second: s.id });
            }
            by_set.entry(&s.component_set).or_default().push(s.id);
        }

        for c in &components {
            let singleton = BTreeSet::from([c.id]);
            match by_set.get(&singleton).map(Vec::len).unwrap_or(0) {
                0 => return Err(Error::MissingVertex(c.id)),
                1 => {}
                count => return Err(Error::SplitVertex { component: c.id, count }),
            }
        }

        for s in &strata {
            for subset in proper_subsets(&s.component_set) {
                if !by_set.contains_key(&subset) {
                    return Err(Error::FaceClosure { stratum: s.id, missing: subset.into_iter().collect() });
                }
            }
            for hint in &s.faces {
                let ok = stratum_index
                    .get(hint)
                    .map(|&k| {
                        let set = &strata[k].component_set;
                        set.len() < s.component_set.len() && set.is_subset(&s.component_set)
                    })
                    .unwrap_or(false);
                if !ok {
                    return Err(Error::BadFaceHint { stratum: s.id, hint: *hint });
                }
            }
        }

        Ok(Self { fiber_dimension, components, strata, component_index, stratum_index })
    }

    pub fn fiber_dimension(&self) -> usize {
        self.fiber_dimension
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn component(&self, id: ComponentId) -> Option<&Component> {
        self.component_index.get(&id).map(|&k| &self.components[k])
    }

    pub fn stratum(&self, id: StratumId) -> Option<&Stratum> {
        self.stratum_index.get(&id).map(|&k| &self.strata[k])
    }

    pub fn multiplicity(&self, id: ComponentId) -> Result<u32> {
        self.component(id).map(|c| c.multiplicity).ok_or(Error::UnknownComponent(id))
    }

    /// The stratum `{i}` of a component.
    pub fn vertex_stratum(&self, id: ComponentId) -> Result<StratumId> {
        self.strata
            .iter()
            .find(|s| s.component_set.len() == 1 && s.component_set.contains(&id))
            .map(|s| s.id)
            .ok_or(Error::UnknownComponent(id))
    }

    pub fn is_reduced(&self) -> bool {
        self.components.iter().all(|c| c.multiplicity == 1)
    }

    pub fn next_component_id(&self) -> ComponentId {
        ComponentId(self.components.iter().map(|c| c.id.0 + 1).max().unwrap_or(1))
    }

    pub fn next_stratum_id(&self) -> StratumId {
        StratumId(self.strata.iter().map(|s| s.id.0 + 1).max().unwrap_or(1))
    }
}

fn proper_subsets(set: &BTreeSet<ComponentId>) -> Vec<BTreeSet<ComponentId>> {
    nonempty_subsets(set).into_iter().filter(|s| s.len() < set.len()).collect()
}

fn nonempty_subsets(set: &BTreeSet<ComponentId>) -> Vec<BTreeSet<ComponentId>> {
    let items: Vec<_> = set.iter().copied().collect();
    (1u64..(1u64 << items.len()))
        .map(|mask| items.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, c)| *c).collect())
        .collect()
}

/// The simplex `σ_Y` attached to one stratum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub stratum: StratumId,
    pub components: Vec<ComponentId>,
    pub multiplicities: Vec<u32>,
    /// Every nonempty subset of the component set, mapped to the stratum whose
    /// simplex is that face of `σ_Y`. Includes the full set, mapped to `Y` itself.
    sub_faces: BTreeMap<BTreeSet<ComponentId>, StratumId>,
}

impl Face {
    pub fn dimension(&self) -> usize {
        self.components.len() - 1
    }

    pub fn multiplicity(&self, c: ComponentId) -> Option<u32> {
        self.components.iter().position(|x| *x == c).map(|k| self.multiplicities[k])
    }

    /// The stratum carrying the face of `σ_Y` spanned by `subset`.
    pub fn sub_face(&self, subset: &BTreeSet<ComponentId>) -> Option<StratumId> {
        self.sub_faces.get(subset).copied()
    }

    /// All faces of this simplex, itself included.
    pub fn sub_faces(&self) -> impl Iterator<Item = StratumId> + '_ {
        self.sub_faces.values().copied()
    }
}

/// The dual complex `D(X_0)` of a central fiber.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRecord", into = "ComplexRecord")]
pub struct DualComplex {
    fiber: Arc<CentralFiber>,
    faces: BTreeMap<StratumId, Face>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub stratum: StratumId,
    pub component_set: Vec<ComponentId>,
    pub multiplicities: Vec<u32>,
    pub dimension: usize,
    /// Proper faces of this simplex.
    pub faces: Vec<StratumId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub fiber: CentralFiber,
    pub vertices: BTreeMap<ComponentId, StratumId>,
    pub faces: Vec<FaceRecord>,
}

impl From<DualComplex> for ComplexRecord {
    fn from(c: DualComplex) -> Self {
        let vertices = c.vertices().collect();
        let faces = c
            .faces
            .values()
            .map(|f| FaceRecord {
                stratum: f.stratum,
                component_set: f.components.clone(),
                multiplicities: f.multiplicities.clone(),
                dimension: f.dimension(),
                faces: f.sub_faces().filter(|s| *s != f.stratum).collect::<BTreeSet<_>>().into_iter().collect(),
            })
            .collect();
        ComplexRecord { fiber: (*c.fiber).clone(), vertices, faces }
    }
}

impl TryFrom<ComplexRecord> for DualComplex {
    type Error = Error;

    fn try_from(r: ComplexRecord) -> Result<Self> {
        let complex = build_dual_complex(&r.fiber)?;
        if ComplexRecord::from(complex.clone()) != r {
            return Err(Error::ComplexMismatch("face records disagree with the fiber".into()));
        }
        Ok(complex)
    }
}

/// Builds the dual complex, resolving which branch each face lies on.
pub fn build_dual_complex(fiber: &CentralFiber) -> Result<DualComplex> {
    let mut by_set: BTreeMap<&BTreeSet<ComponentId>, Vec<&Stratum>> = BTreeMap::new();
    for s in fiber.strata() {
        by_set.entry(&s.component_set).or_default().push(s);
    }

    let mut faces = BTreeMap::new();
    for s in fiber.strata() {
        let mut sub_faces = BTreeMap::new();
        for subset in nonempty_subsets(&s.component_set) {
            let id = if subset == s.component_set {
                s.id
            } else {
                resolve_face(s, &subset, &by_set)?
            };
            sub_faces.insert(subset, id);
        }
        let components: Vec<_> = s.component_set.iter().copied().collect();
        let multiplicities = components.iter().map(|c| fiber.multiplicity(*c)).collect::<Result<_>>()?;
        faces.insert(s.id, Face { stratum: s.id, components, multiplicities, sub_faces });
    }

    // A face of a face must be a face: faces resolved through hints or labels
    // have to agree with each other.
    for f in faces.values() {
        for (subset, id) in &f.sub_faces {
            let g = &faces[id];
            for (sub2, id2) in &g.sub_faces {
                if f.sub_faces.get(sub2) != Some(id2) {
                    return Err(Error::AmbiguousFace {
                        stratum: f.stratum,
                        set: sub2.iter().copied().collect(),
                        candidates: vec![f.sub_faces[sub2], *id2],
                    });
                }
            }
            debug_assert_eq!(&g.components.iter().copied().collect::<BTreeSet<_>>(), subset);
        }
    }

    Ok(DualComplex { fiber: Arc::new(fiber.clone()), faces })
}

fn resolve_face(
    s: &Stratum,
    subset: &BTreeSet<ComponentId>,
    by_set: &BTreeMap<&BTreeSet<ComponentId>, Vec<&Stratum>>,
) -> Result<StratumId> {
    let candidates = by_set.get(subset).map(Vec::as_slice).unwrap_or(&[]);
    match candidates {
        [] => Err(Error::FaceClosure { stratum: s.id, missing: subset.iter().copied().collect() }),
        [only] => Ok(only.id),
        _ => {
            let hinted: Vec<_> = candidates.iter().filter(|c| s.faces.contains(&c.id)).collect();
            if let [one] = hinted.as_slice() {
                return Ok(one.id);
            }
            let labelled: Vec<_> = candidates.iter().filter(|c| c.branch_label == s.branch_label).collect();
            if let [one] = labelled.as_slice() {
                return Ok(one.id);
            }
            Err(Error::AmbiguousFace {
                stratum: s.id,
                set: subset.iter().copied().collect(),
                candidates: candidates.iter().map(|c| c.id).collect(),
            })
        }
    }
}

impl DualComplex {
    pub fn fiber(&self) -> &CentralFiber {
        &self.fiber
    }

    pub fn fiber_arc(&self) -> &Arc<CentralFiber> {
        &self.fiber
    }

    pub fn face(&self, id: StratumId) -> Result<&Face> {
        self.faces.get(&id).ok_or(Error::UnknownStratum(id))
    }

    pub fn faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.values()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Vertices, one per component, with the stratum carrying each.
    pub fn vertices(&self) -> impl Iterator<Item = (ComponentId, StratumId)> + '_ {
        self.faces.values().filter(|f| f.components.len() == 1).map(|f| (f.components[0], f.stratum))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Face> {
        self.faces.values().filter(|f| f.components.len() == 2)
    }

    pub fn dimension(&self) -> usize {
        self.faces.values().map(Face::dimension).max().unwrap_or(0)
    }

    /// `true` when `sigma_small` is a face of `sigma_big` (including equality).
    pub fn is_face_of(&self, small: StratumId, big: StratumId) -> Result<bool> {
        self.face(small)?;
        Ok(self.face(big)?.sub_faces().any(|s| s == small))
    }

    /// Strata that contain no other stratum: the maximal simplices.
    pub fn minimal_strata(&self) -> Vec<StratumId> {
        let mut covered = BTreeSet::new();
        for f in self.faces.values() {
            covered.extend(f.sub_faces().filter(|s| *s != f.stratum));
        }
        self.faces.keys().filter(|s| !covered.contains(s)).copied().collect()
    }

    /// Number of faces in each dimension.
    pub fn f_vector(&self) -> Vec<usize> {
        let mut out = vec![0; self.dimension() + 1];
        for f in self.faces.values() {
            out[f.dimension()] += 1;
        }
        out
    }

    /// Checks that `p` lies on the simplex of its stratum.
    pub fn check_point<T: Scalar>(&self, p: &ComplexPoint<T>) -> Result<()> {
        let face = self.face(p.stratum)?;
        let found: Vec<_> = p.weights.keys().copied().collect();
        if found != face.components {
            return Err(Error::WrongIndexSet { stratum: p.stratum, expected: face.components.clone(), found });
        }
        for (c, w) in &p.weights {
            if w.is_negative() {
                return Err(Error::NegativeWeight { component: *c, value: w.to_string() });
            }
        }
        let total = p.constraint_sum(face);
        if !scalar::is_one(&total) {
            return Err(Error::Normalization { sum: total.to_string() });
        }
        Ok(())
    }
}

/// A point of the dual complex, or equivalently the quasi-monomial valuation
/// attached to `(Y, w)`.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar, <T as std::str::FromStr>::Err: std::fmt::Display"))]
pub struct ComplexPoint<T: Scalar> {
    pub stratum: StratumId,
    #[serde_as(as = "BTreeMap<_, DisplayFromStr>")]
    pub weights: BTreeMap<ComponentId, T>,
}

impl<T: Scalar> ComplexPoint<T> {
    pub fn new(stratum: StratumId, weights: impl IntoIterator<Item = (ComponentId, T)>) -> Self {
        Self { stratum, weights: weights.into_iter().collect() }
    }

    pub fn index_set(&self) -> Vec<ComponentId> {
        self.weights.keys().copied().collect()
    }

    pub fn weight(&self, c: ComponentId) -> T {
        self.weights.get(&c).cloned().unwrap_or_else(T::zero)
    }

    fn constraint_sum(&self, face: &Face) -> T {
        scalar::sum(
            face.components
                .iter()
                .zip(&face.multiplicities)
                .map(|(c, m)| T::from_int(*m as i64) * self.weight(*c)),
        )
    }

    /// Barycentric coordinates `λ_j = m_j w_j`, which sum to one.
    pub fn barycentric(&self, complex: &DualComplex) -> Result<BTreeMap<ComponentId, T>> {
        let face = complex.face(self.stratum)?;
        Ok(face
            .components
            .iter()
            .zip(&face.multiplicities)
            .map(|(c, m)| (*c, T::from_int(*m as i64) * self.weight(*c)))
            .collect())
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ComplexPoint<U> {
        ComplexPoint { stratum: self.stratum, weights: self.weights.iter().map(|(c, w)| (*c, f(w))).collect() }
    }
}

/// Moves a point to its minimal carrying face by dropping zero coordinates.
pub fn canonicalize_point<T: Scalar>(complex: &DualComplex, p: &ComplexPoint<T>) -> Result<ComplexPoint<T>> {
    complex.check_point(p)?;
    let support: BTreeSet<_> = p.weights.iter().filter(|(_, w)| !w.is_zero()).map(|(c, _)| *c).collect();
    if support.is_empty() {
        return Err(Error::ZeroPoint);
    }
    let face = complex.face(p.stratum)?;
    let stratum = face.sub_face(&support).ok_or_else(|| Error::FaceClosure {
        stratum: p.stratum,
        missing: support.iter().copied().collect(),
    })?;
    let out = ComplexPoint {
        stratum,
        weights: p.weights.iter().filter(|(c, _)| support.contains(c)).map(|(c, w)| (*c, w.clone())).collect(),
    };
    complex.check_point(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn segment(m1: u32, m2: u32) -> CentralFiber {
        CentralFiber::new(
            1,
            vec![Component::new(1, m1), Component::new(2, m2)],
            vec![Stratum::new(1, [1]), Stratum::new(2, [2]), Stratum::new(3, [1, 2])],
        )
        .unwrap()
    }

    #[test]
    fn irreducible_fiber_is_a_point() {
        let fiber = CentralFiber::new(2, vec![Component::new(1, 1)], vec![Stratum::new(1, [1])]).unwrap();
        let dc = build_dual_complex(&fiber).unwrap();
        assert_eq!(dc.f_vector(), vec![1]);
        assert_eq!(dc.vertices().collect::<Vec<_>>(), vec![(ComponentId(1), StratumId(1))]);
    }

    #[test]
    fn nodal_fiber_is_a_segment() {
        let dc = build_dual_complex(&segment(1, 1)).unwrap();
        assert_eq!(dc.f_vector(), vec![2, 1]);
        assert!(dc.is_face_of(StratumId(1), StratumId(3)).unwrap());
        assert!(dc.is_face_of(StratumId(2), StratumId(3)).unwrap());
        assert!(!dc.is_face_of(StratumId(3), StratumId(1)).unwrap());
        assert_eq!(dc.minimal_strata(), vec![StratumId(3)]);
    }

    #[test]
    fn branch_labels_give_parallel_edges() {
        let fiber = CentralFiber::new(
            1,
            vec![Component::new(1, 1), Component::new(2, 1)],
            vec![
                Stratum::new(1, [1]),
                Stratum::new(2, [2]),
                Stratum::new(3, [1, 2]).with_label("a"),
                Stratum::new(4, [1, 2]).with_label("b"),
                Stratum::new(5, [1, 2]).with_label("c"),
            ],
        )
        .unwrap();
        let dc = build_dual_complex(&fiber).unwrap();
        assert_eq!(dc.f_vector(), vec![2, 3]);
        for e in dc.edges() {
            assert_eq!(e.sub_face(&BTreeSet::from([ComponentId(1)])), Some(StratumId(1)));
            assert_eq!(e.sub_face(&BTreeSet::from([ComponentId(2)])), Some(StratumId(2)));
        }
    }

    #[test]
    fn rejects_missing_face() {
        let err = CentralFiber::new(
            2,
            vec![Component::new(1, 1), Component::new(2, 1), Component::new(3, 1)],
            vec![
                Stratum::new(1, [1]),
                Stratum::new(2, [2]),
                Stratum::new(3, [3]),
                Stratum::new(4, [1, 2]),
                Stratum::new(5, [2, 3]),
                Stratum::new(7, [1, 2, 3]),
            ],
        )
        .unwrap_err();
        assert_eq!(err, Error::FaceClosure { stratum: StratumId(7), missing: vec![ComponentId(1), ComponentId(3)] });
    }

    #[test]
    fn rejects_codimension_violation() {
        let err = CentralFiber::new(
            0,
            vec![Component::new(1, 1), Component::new(2, 1)],
            vec![Stratum::new(1, [1]), Stratum::new(2, [2]), Stratum::new(3, [1, 2])],
        )
        .unwrap_err();
        assert_eq!(err, Error::CodimensionBound { stratum: StratumId(3), size: 2, limit: 1 });
    }

    #[test]
    fn rejects_structural_errors() {
        let dup = CentralFiber::new(1, vec![Component::new(1, 1), Component::new(1, 2)], vec![]);
        assert_eq!(dup.unwrap_err(), Error::DuplicateComponent(ComponentId(1)));
        let no_vertex = CentralFiber::new(1, vec![Component::new(1, 1)], vec![]);
        assert_eq!(no_vertex.unwrap_err(), Error::MissingVertex(ComponentId(1)));
        let zero = CentralFiber::new(1, vec![Component::new(1, 0)], vec![Stratum::new(1, [1])]);
        assert_eq!(zero.unwrap_err(), Error::ZeroMultiplicity { id: ComponentId(1) });
        let branch = CentralFiber::new(
            1,
            vec![Component::new(1, 1), Component::new(2, 1)],
            vec![Stratum::new(1, [1]), Stratum::new(2, [2]), Stratum::new(3, [1, 2]), Stratum::new(4, [1, 2])],
        );
        assert_eq!(branch.unwrap_err(), Error::DuplicateBranch { first: StratumId(3), second: StratumId(4) });
    }

    #[test]
    fn ambiguous_branches_need_hints() {
        // D_{12} has two branches; the triple point must say which one it lies on.
        let comps = vec![Component::new(1, 1), Component::new(2, 1), Component::new(3, 1)];
        let mut strata = vec![
            Stratum::new(1, [1]),
            Stratum::new(2, [2]),
            Stratum::new(3, [3]),
            Stratum::new(4, [1, 2]).with_label("x"),
            Stratum::new(5, [1, 2]).with_label("y"),
            Stratum::new(6, [1, 3]),
            Stratum::new(7, [2, 3]),
            Stratum::new(8, [1, 2, 3]),
        ];
        let fiber = CentralFiber::new(2, comps.clone(), strata.clone()).unwrap();
        assert!(matches!(build_dual_complex(&fiber), Err(Error::AmbiguousFace { stratum: StratumId(8), .. })));

        strata[7] = Stratum::new(8, [1, 2, 3]).with_faces([5]);
        let fiber = CentralFiber::new(2, comps.clone(), strata.clone()).unwrap();
        let dc = build_dual_complex(&fiber).unwrap();
        assert!(dc.is_face_of(StratumId(5), StratumId(8)).unwrap());
        assert!(!dc.is_face_of(StratumId(4), StratumId(8)).unwrap());

        strata[7] = Stratum::new(8, [1, 2, 3]).with_label("x");
        let dc = build_dual_complex(&CentralFiber::new(2, comps, strata).unwrap()).unwrap();
        assert!(dc.is_face_of(StratumId(4), StratumId(8)).unwrap());
    }

    #[test]
    fn canonicalize_boundary_point_moves_to_vertex() {
        let dc = build_dual_complex(&segment(1, 1)).unwrap();
        let p = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(1, 1)), (ComponentId(2), q(0, 1))]);
        let c = canonicalize_point(&dc, &p).unwrap();
        assert_eq!(c, ComplexPoint::new(StratumId(1), [(ComponentId(1), q(1, 1))]));
    }

    #[test]
    fn canonicalize_interior_point_is_fixed() {
        let dc = build_dual_complex(&segment(1, 1)).unwrap();
        let p = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(1, 3)), (ComponentId(2), q(2, 3))]);
        assert_eq!(canonicalize_point(&dc, &p).unwrap(), p);
    }

    #[test]
    fn canonicalize_uses_multiplicities() {
        let dc = build_dual_complex(&segment(2, 1)).unwrap();
        let p = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(1, 4)), (ComponentId(2), q(1, 2))]);
        assert_eq!(canonicalize_point(&dc, &p).unwrap(), p);
        let bad = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(1, 2)), (ComponentId(2), q(1, 2))]);
        assert!(matches!(canonicalize_point(&dc, &bad), Err(Error::Normalization { .. })));
    }

    #[test]
    fn canonicalize_rejects_bad_input() {
        let dc = build_dual_complex(&segment(1, 1)).unwrap();
        let neg = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(3, 2)), (ComponentId(2), q(-1, 2))]);
        assert!(matches!(canonicalize_point(&dc, &neg), Err(Error::NegativeWeight { .. })));
        let wrong = ComplexPoint::new(StratumId(1), [(ComponentId(2), q(1, 1))]);
        assert!(matches!(canonicalize_point(&dc, &wrong), Err(Error::WrongIndexSet { .. })));
        let unknown = ComplexPoint::new(StratumId(9), [(ComponentId(1), q(1, 1))]);
        assert_eq!(canonicalize_point(&dc, &unknown).unwrap_err(), Error::UnknownStratum(StratumId(9)));
    }

    #[test]
    fn float_points_use_tolerance() {
        let dc = build_dual_complex(&segment(1, 1)).unwrap();
        let p = ComplexPoint::new(StratumId(3), [(ComponentId(1), 0.1f64), (ComponentId(2), 0.9 + 1e-14)]);
        assert!(dc.check_point(&p).is_ok());
    }

    #[test]
    fn fiber_round_trips_through_json() {
        let fiber = segment(2, 1);
        let json = serde_json::to_string(&fiber).unwrap();
        assert_eq!(serde_json::from_str::<CentralFiber>(&json).unwrap(), fiber);
        let dc = build_dual_complex(&fiber).unwrap();
        let json = serde_json::to_string(&dc).unwrap();
        assert_eq!(serde_json::from_str::<DualComplex>(&json).unwrap(), dc);
        let p = ComplexPoint::new(StratumId(3), [(ComponentId(1), q(1, 4)), (ComponentId(2), q(1, 2))]);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"1/4\""));
        assert_eq!(serde_json::from_str::<ComplexPoint<Rational>>(&json).unwrap(), p);
    }

    #[test]
    fn invalid_fiber_json_is_rejected() {
        let json = r#"{"fiber_dimension":1,"components":[{"id":1,"multiplicity":1}],"strata":[]}"#;
        assert!(serde_json::from_str::<CentralFiber>(json).is_err());
    }
}
