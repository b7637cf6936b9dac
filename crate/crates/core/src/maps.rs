//! Model dominations, blow-ups and the retraction maps between dual complexes.
//!
//! A domination `h: X' → X` is recorded by its pullback matrix,
//! `h^* D_i = Σ_j a_ij D'_j`. Rows are indexed by the components of the dominated
//! model `X` (the *target*), columns by the components of the dominating model
//! `X'` (the *source*). Since `h^* X_0 = X'_0`, every column satisfies
//! `Σ_i a_ij m_i = m'_j`, and the retraction `r(w')_i = Σ_j a_ij w'_j` preserves
//! the simplex constraint.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{build_dual_complex, CentralFiber, ComplexPoint, Component, ComponentId, DualComplex, Stratum, StratumId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullbackMatrix {
    source: DualComplex,
    target: DualComplex,
    rows: Vec<ComponentId>,
    cols: Vec<ComponentId>,
    entries: Vec<Vec<u32>>,
    /// For a source stratum `Y'`, a target stratum containing `h(Y')`.
    stratum_map: BTreeMap<StratumId, StratumId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PullbackRecord {
    pub source_fiber: CentralFiber,
    pub target_fiber: CentralFiber,
    pub rows: Vec<ComponentId>,
    pub cols: Vec<ComponentId>,
    pub entries: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stratum_map: BTreeMap<StratumId, StratumId>,
}

impl Serialize for PullbackMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PullbackRecord {
            source_fiber: self.source.fiber().clone(),
            target_fiber: self.target.fiber().clone(),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries: self.entries.clone(),
            stratum_map: self.stratum_map.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PullbackMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PullbackRecord::deserialize(d)?;
        PullbackMatrix::new(r.source_fiber, r.target_fiber, r.rows, r.cols, r.entries, r.stratum_map)
            .map_err(serde::de::Error::custom)
    }
}

/// Non-fatal findings of [`validate_pullback`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PullbackWarning {
    /// A row without a nonzero entry: `h^* D_i = 0`, which no domination produces.
    ZeroRow(ComponentId),
}

impl PullbackMatrix {
    /// Checks shapes and ids only; the multiplicity identity is checked by
    /// [`validate_pullback`].
    pub fn new(
        source_fiber: CentralFiber,
        target_fiber: CentralFiber,
        rows: Vec<ComponentId>,
        cols: Vec<ComponentId>,
        entries: Vec<Vec<u32>>,
        stratum_map: BTreeMap<StratumId, StratumId>,
    ) -> Result<Self> {
        let source = build_dual_complex(&source_fiber)?;
        let target = build_dual_complex(&target_fiber)?;
        let row_set: BTreeSet<_> = rows.iter().copied().collect();
        let target_set: BTreeSet<_> = target_fiber.components().iter().map(|c| c.id).collect();
        if row_set.len() != rows.len() || row_set != target_set {
            return Err(Error::PullbackShape("rows must list each target component once".into()));
        }
        let col_set: BTreeSet<_> = cols.iter().copied().collect();
        let source_set: BTreeSet<_> = source_fiber.components().iter().map(|c| c.id).collect();
        if col_set.len() != cols.len() || col_set != source_set {
            return Err(Error::PullbackShape("cols must list each source component once".into()));
        }
        if entries.len() != rows.len() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::PullbackShape(format!("entries must be {} x {}", rows.len(), cols.len())));
        }
        for (from, to) in &stratum_map {
            source.face(*from)?;
            target.face(*to)?;
        }
        Ok(Self { source, target, rows, cols, entries, stratum_map })
    }

    pub fn identity(fiber: &CentralFiber) -> Result<Self> {
        let ids: Vec<_> = fiber.components().iter().map(|c| c.id).collect();
        let entries = (0..ids.len()).map(|i| (0..ids.len()).map(|j| u32::from(i == j)).collect()).collect();
        let map = fiber.strata().iter().map(|s| (s.id, s.id)).collect();
        Self::new(fiber.clone(), fiber.clone(), ids.clone(), ids, entries, map)
    }

    pub fn source(&self) -> &DualComplex {
        &self.source
    }

    pub fn target(&self) -> &DualComplex {
        &self.target
    }

    pub fn rows(&self) -> &[ComponentId] {
        &self.rows
    }

    pub fn cols(&self) -> &[ComponentId] {
        &self.cols
    }

    pub fn stratum_map(&self) -> &BTreeMap<StratumId, StratumId> {
        &self.stratum_map
    }

    /// `a_ij` with `i` a target component and `j` a source component.
    pub fn entry(&self, row: ComponentId, col: ComponentId) -> u32 {
        match (self.rows.iter().position(|r| *r == row), self.cols.iter().position(|c| *c == col)) {
            (Some(i), Some(j)) => self.entries[i][j],
            _ => 0,
        }
    }
}

/// Checks `Σ_i a_ij m_i = m'_j` column by column and reports the first failure.
pub fn validate_pullback(m: &PullbackMatrix) -> Result<Vec<PullbackWarning>> {
    let target = m.target.fiber();
    let source = m.source.fiber();
    for (j, col) in m.cols.iter().enumerate() {
        let lhs: u64 = m
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| m.entries[i][j] as u64 * target.multiplicity(*row).map(u64::from).unwrap_or(0))
            .sum();
        let rhs = source.multiplicity(*col)?;
        if lhs != rhs as u64 {
            return Err(Error::MultiplicityIdentity { column: *col, lhs, rhs });
        }
    }
    Ok(m.rows
        .iter()
        .zip(&m.entries)
        .filter(|(_, r)| r.iter().all(|a| *a == 0))
        .map(|(row, _)| PullbackWarning::ZeroRow(*row))
        .collect())
}

/// `r(w')_i = Σ_j a_ij w'_j`, placed on the face of the target complex spanned
/// by the positive coordinates.
pub fn retract<T: Scalar>(m: &PullbackMatrix, p: &ComplexPoint<T>) -> Result<ComplexPoint<T>> {
    m.source.check_point(p)?;
    let mut weights = BTreeMap::new();
    for (i, row) in m.rows.iter().enumerate() {
        let mut w = T::zero();
        for (j, col) in m.cols.iter().enumerate() {
            let a = m.entries[i][j];
            if a != 0 {
                w = w + T::from_int(a as i64) * p.weight(*col);
            }
        }
        if w.is_positive() {
            weights.insert(*row, w);
        }
    }
    let support: BTreeSet<_> = weights.keys().copied().collect();
    if support.is_empty() {
        return Err(Error::ZeroPoint);
    }

    let stratum = match m.stratum_map.get(&p.stratum) {
        Some(host) => m
            .target
            .face(*host)?
            .sub_face(&support)
            .ok_or_else(|| Error::UncarriedSupport { support: support.iter().copied().collect() })?,
        None => {
            let candidates: Vec<_> = m
                .target
                .faces()
                .filter(|f| f.components.len() == support.len() && f.components.iter().all(|c| support.contains(c)))
                .map(|f| f.stratum)
                .collect();
            match candidates.as_slice() {
                [] => return Err(Error::UncarriedSupport { support: support.into_iter().collect() }),
                [one] => *one,
                _ => return Err(Error::AmbiguousSupport { support: support.into_iter().collect(), candidates }),
            }
        }
    };
    let out = ComplexPoint { stratum, weights };
    m.target.check_point(&out)?;
    Ok(out)
}

/// Composes `m1: X' → X` with `m2: X'' → X'` into `X'' → X`.
pub fn compose_pullbacks(m1: &PullbackMatrix, m2: &PullbackMatrix) -> Result<PullbackMatrix> {
    if m2.target.fiber() != m1.source.fiber() {
        return Err(Error::FiberMismatch);
    }
    let entries = m1
        .rows
        .iter()
        .map(|&i| {
            m2.cols
                .iter()
                .map(|&j| m1.cols.iter().map(|&k| m1.entry(i, k) * m2.entry(k, j)).sum())
                .collect()
        })
        .collect();
    let stratum_map = m2
        .stratum_map
        .iter()
        .filter_map(|(from, mid)| m1.stratum_map.get(mid).map(|to| (*from, *to)))
        .collect();
    Ok(PullbackMatrix {
        source: m2.source.clone(),
        target: m1.target.clone(),
        rows: m1.rows.clone(),
        cols: m2.cols.clone(),
        entries,
        stratum_map,
    })
}

/// Blows up a minimal stratum `Y` (component set `J`, `|J| ≥ 2`).
///
/// The exceptional divisor `E` gets `m_E = Σ_{j∈J} m_j`, and the dual complex
/// changes by the star subdivision of `σ_Y` with apex `v_E`: `σ_Y` is removed
/// and every proper face `σ_Z` of it is coned off to `v_E`.
pub fn blow_up_stratum(fiber: &CentralFiber, stratum: StratumId) -> Result<(CentralFiber, PullbackMatrix)> {
    let complex = build_dual_complex(fiber)?;
    let center = complex.face(stratum)?;
    if !complex.minimal_strata().contains(&stratum) {
        return Err(Error::NotMinimal(stratum));
    }
    if center.components.len() < 2 {
        return Err(Error::DivisorCenter(stratum));
    }

    let e = fiber.next_component_id();
    let m_e: u32 = center.multiplicities.iter().sum();
    let mut components = fiber.components().to_vec();
    let mut exceptional = Component::new(e.0, m_e);
    if fiber.fiber_dimension() == 1 {
        exceptional = exceptional.with_genus(0);
    }
    components.push(exceptional);

    let mut strata: Vec<Stratum> = fiber.strata().iter().filter(|s| s.id != stratum).cloned().collect();
    let mut next = fiber.next_stratum_id().0;
    let label = fiber.stratum(stratum).map(|s| s.branch_label.clone()).unwrap_or_default();

    let e_vertex = StratumId(next);
    next += 1;
    strata.push(Stratum { id: e_vertex, component_set: BTreeSet::from([e]), branch_label: label.clone(), faces: vec![] });

    // one new stratum E ∩ Z' per proper face Z of Y, keyed by the face's component set
    let full: BTreeSet<_> = center.components.iter().copied().collect();
    let mut cones: BTreeMap<BTreeSet<ComponentId>, StratumId> = BTreeMap::new();
    let mut proper: Vec<BTreeSet<ComponentId>> = center
        .sub_faces()
        .filter_map(|s| complex.face(s).ok())
        .map(|f| f.components.iter().copied().collect::<BTreeSet<_>>())
        .filter(|k| *k != full)
        .collect();
    proper.sort_by_key(|k| (k.len(), k.clone()));
    for k in &proper {
        cones.insert(k.clone(), StratumId(next));
        next += 1;
    }
    for k in &proper {
        let mut hints: Vec<StratumId> = Vec::new();
        for (k2, cone) in &cones {
            if k2.is_subset(k) {
                hints.push(center.sub_face(k2).expect("face of the center"));
                if k2 != k {
                    hints.push(*cone);
                }
            }
        }
        hints.push(e_vertex);
        let mut set = k.clone();
        set.insert(e);
        strata.push(Stratum { id: cones[k], component_set: set, branch_label: label.clone(), faces: hints });
    }

    let new_fiber = CentralFiber::new(fiber.fiber_dimension(), components, strata)?;

    let rows: Vec<_> = fiber.components().iter().map(|c| c.id).collect();
    let cols: Vec<_> = new_fiber.components().iter().map(|c| c.id).collect();
    let entries = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| u32::from(i == j || (j == e && full.contains(&i)))).collect())
        .collect();
    let mut stratum_map: BTreeMap<StratumId, StratumId> = BTreeMap::new();
    for s in new_fiber.strata() {
        let to = if s.component_set.contains(&e) { stratum } else { s.id };
        stratum_map.insert(s.id, to);
    }

    let matrix = PullbackMatrix::new(new_fiber.clone(), fiber.clone(), rows, cols, entries, stratum_map)?;
    Ok((new_fiber, matrix))
}
