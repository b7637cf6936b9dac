//! Standard central fibers and random generators for fibers, towers, points and supports.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fiber::{build_dual_complex, CentralFiber, ComplexPoint, Component, ComponentId, DualComplex, Stratum, StratumId};
use crate::maps::{blow_up_stratum, PullbackMatrix};
use crate::monge_ampere::ModelPolarization;
use crate::valuation::MonomialSupport;
use crate::Rational;

/// Stratum id of the node in [`segment`] and [`node_fiber`].
pub const NODE: StratumId = StratumId(3);

/// Two components meeting along one stratum: strata `1 = {1}`, `2 = {2}`, `3 = {1,2}`.
pub fn segment(m1: u32, m2: u32) -> CentralFiber {
    CentralFiber::new(
        1,
        vec![Component::new(1, m1), Component::new(2, m2)],
        vec![Stratum::new(1, [1]), Stratum::new(2, [2]), Stratum::new(3, [1, 2])],
    )
    .expect("segment is a valid fiber")
}

/// The reduced node `z_1 z_2 = t` of a degenerating family of curves.
pub fn node_fiber() -> CentralFiber {
    curve(&[(1, 0, 0), (2, 0, 0)], &[(1, 2)])
}

/// A full simplex: components `1..=k`, one stratum per nonempty subset.
pub fn simplex(fiber_dimension: usize, multiplicities: &[u32]) -> CentralFiber {
    let k = multiplicities.len();
    let components = multiplicities.iter().enumerate().map(|(i, m)| Component::new(i as u32 + 1, *m)).collect();
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let strata = masks
        .iter()
        .enumerate()
        .map(|(id, mask)| Stratum::new(id as u32 + 1, (0..k as u32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1)))
        .collect();
    CentralFiber::new(fiber_dimension, components, strata).expect("simplex is a valid fiber")
}

/// A reduced nodal curve: `vertices` lists `(id, genus, self_nodes)`, `edges` the
/// nodes between distinct components. Parallel edges get distinct branch labels.
pub fn curve(vertices: &[(u32, u32, u32)], edges: &[(u32, u32)]) -> CentralFiber {
    let components = vertices.iter().map(|(id, g, loops)| Component::new(*id, 1).with_genus(*g).with_self_nodes(*loops)).collect();
    let mut strata: Vec<Stratum> = vertices.iter().enumerate().map(|(k, (id, _, _))| Stratum::new(k as u32 + 1, [*id])).collect();
    let first = strata.len() as u32 + 1;
    for (k, (a, b)) in edges.iter().enumerate() {
        strata.push(Stratum::new(first + k as u32, [*a, *b]).with_label(format!("e{k}")));
    }
    CentralFiber::new(1, components, strata).expect("curve data is a valid fiber")
}

/// Two genus-one components joined by one node (genus 2).
pub fn dumbbell() -> CentralFiber {
    curve(&[(1, 1, 0), (2, 1, 0)], &[(1, 2)])
}

/// Two rational components joined by three nodes (genus 2).
pub fn theta_graph() -> CentralFiber {
    CentralFiber::new(
        1,
        vec![Component::new(1, 1).with_genus(0), Component::new(2, 1).with_genus(0)],
        vec![
            Stratum::new(1, [1]),
            Stratum::new(2, [2]),
            Stratum::new(3, [1, 2]).with_label("a"),
            Stratum::new(4, [1, 2]).with_label("b"),
            Stratum::new(5, [1, 2]).with_label("c"),
        ],
    )
    .expect("theta graph is a valid fiber")
}

/// Stable dual graphs of genus 2 and 3 beyond the dumbbell and the theta graph.
pub fn stable_graphs() -> Vec<(&'static str, u32, CentralFiber)> {
    vec![
        ("smooth genus 2", 2, curve(&[(1, 2, 0)], &[])),
        ("genus 1 with a self-node", 2, curve(&[(1, 1, 1)], &[])),
        ("rational with two self-nodes", 2, curve(&[(1, 0, 2)], &[])),
        ("genus 1 joined to a nodal rational", 2, curve(&[(1, 1, 0), (2, 0, 1)], &[(1, 2)])),
        ("two nodal rationals joined", 2, curve(&[(1, 0, 1), (2, 0, 1)], &[(1, 2)])),
        ("K4 of rational curves", 3, curve(&[(1, 0, 0), (2, 0, 0), (3, 0, 0), (4, 0, 0)], &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])),
        ("chain of three elliptic curves", 3, curve(&[(1, 1, 0), (2, 1, 0), (3, 1, 0)], &[(1, 2), (2, 3)])),
        ("two rationals joined by four nodes", 3, curve(&[(1, 0, 0), (2, 0, 0)], &[(1, 2), (1, 2), (1, 2), (1, 2)])),
        ("genus 2 joined to elliptic", 3, curve(&[(1, 2, 0), (2, 1, 0)], &[(1, 2)])),
    ]
}

/// A random connected stable graph: every vertex has `2g - 2 + val > 0`.
pub fn random_stable_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> CentralFiber {
    loop {
        let n = rng.gen_range(1..=max_vertices) as u32;
        let vertices: Vec<(u32, u32, u32)> =
            (1..=n).map(|id| (id, rng.gen_range(0..=1), if rng.gen_bool(0.2) { 1 } else { 0 })).collect();
        let mut edges = Vec::new();
        // spanning tree first, then extra edges
        for id in 2..=n {
            edges.push((rng.gen_range(1..id), id));
        }
        for _ in 0..rng.gen_range(0..=n) {
            if n >= 2 {
                let a = rng.gen_range(1..=n);
                let mut b = rng.gen_range(1..=n);
                while b == a {
                    b = rng.gen_range(1..=n);
                }
                edges.push((a.min(b), a.max(b)));
            }
        }
        let fiber = curve(&vertices, &edges);
        let val = crate::monge_ampere::curve_valences(&fiber);
        if fiber.components().iter().all(|c| 2 * c.genus.unwrap_or(0) as i64 - 2 + val[&c.id] as i64 > 0) {
            return fiber;
        }
    }
}

/// A random simplex-shaped fiber with `k ≤ n + 1` components, `n ≤ max_dimension`.
pub fn random_fiber<R: Rng>(rng: &mut R, max_dimension: usize, max_multiplicity: u32) -> CentralFiber {
    random_fiber_with(rng, 1, max_dimension, max_multiplicity)
}

/// As [`random_fiber`], with at least `min_components ≥ 1` components.
pub fn random_fiber_with<R: Rng>(rng: &mut R, min_components: usize, max_dimension: usize, max_multiplicity: u32) -> CentralFiber {
    let n = rng.gen_range(min_components.saturating_sub(1).max(1)..=max_dimension.max(min_components - 1));
    let k = rng.gen_range(min_components..=n + 1);
    let mults: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=max_multiplicity)).collect();
    simplex(n, &mults)
}

/// A random fiber with at most `max_components` components, not necessarily a
/// single simplex: a few simplices glued along common faces.
pub fn random_glued_fiber<R: Rng>(rng: &mut R, max_components: usize, max_multiplicity: u32) -> CentralFiber {
    let k = rng.gen_range(1..=max_components);
    let n = rng.gen_range(1..=3usize);
    let mut faces: BTreeSet<BTreeSet<u32>> = (1..=k as u32).map(|i| BTreeSet::from([i])).collect();
    for _ in 0..rng.gen_range(0..=k) {
        let size = rng.gen_range(2..=(n + 1).min(k).max(2));
        if size > k {
            continue;
        }
        let mut ids: Vec<u32> = (1..=k as u32).collect();
        ids.shuffle(rng);
        let top: BTreeSet<u32> = ids.into_iter().take(size).collect();
        let items: Vec<u32> = top.iter().copied().collect();
        for mask in 1u32..(1 << items.len()) {
            faces.insert(items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, c)| *c).collect());
        }
    }
    let components = (1..=k as u32).map(|i| Component::new(i, rng.gen_range(1..=max_multiplicity))).collect();
    let mut faces: Vec<_> = faces.into_iter().collect();
    faces.sort_by_key(|f| (f.len(), f.clone()));
    let strata = faces.into_iter().enumerate().map(|(id, set)| Stratum::new(id as u32 + 1, set)).collect();
    CentralFiber::new(n, components, strata).expect("glued simplices form a valid fiber")
}

/// Consistent random degree data: nonnegative `d_i`, `L^n = Σ m_i d_i`.
pub fn random_polarization<R: Rng>(rng: &mut R, fiber: &CentralFiber) -> ModelPolarization<Rational> {
    let degrees: Vec<_> = fiber
        .components()
        .iter()
        .map(|c| (c.id, Rational::new(rng.gen_range(0..=20i64).into(), rng.gen_range(1..=6i64).into())))
        .collect();
    let total = fiber
        .components()
        .iter()
        .zip(&degrees)
        .fold(Rational::from_integer(0.into()), |acc, (c, (_, d))| acc + Rational::from_integer(c.multiplicity.into()) * d);
    ModelPolarization::new(degrees, total)
}

/// Blows up `depth` randomly chosen minimal strata in succession. Returns the
/// models `X_0, ..., X_k` and the matrices `X_{j+1} → X_j`; `k < depth` only
/// when no minimal stratum meets two components.
pub fn random_tower<R: Rng>(rng: &mut R, base: &CentralFiber, depth: usize) -> (Vec<CentralFiber>, Vec<PullbackMatrix>) {
    let mut fibers = vec![base.clone()];
    let mut maps = Vec::new();
    for _ in 0..depth {
        let current = fibers.last().expect("nonempty");
        let complex = build_dual_complex(current).expect("valid fiber");
        let minimal: Vec<_> =
            complex.minimal_strata().into_iter().filter(|s| complex.face(*s).expect("declared").dimension() > 0).collect();
        let Some(&choice) = minimal.choose(rng) else { break };
        let (next, m) = blow_up_stratum(current, choice).expect("minimal strata can be blown up");
        fibers.push(next);
        maps.push(m);
    }
    (fibers, maps)
}

/// A random exact point: uniformly chosen face, random integer weights
/// normalized by `Σ m_j w_j`, occasionally with zero coordinates.
pub fn random_point<R: Rng>(rng: &mut R, complex: &DualComplex) -> ComplexPoint<Rational> {
    let faces: Vec<_> = complex.faces().collect();
    let face = faces[rng.gen_range(0..faces.len())];
    let mut raw: Vec<i64> = face.components.iter().map(|_| rng.gen_range(0..=12)).collect();
    if raw.iter().all(|r| *r == 0) {
        raw[0] = 1;
    }
    let norm: i64 = raw.iter().zip(&face.multiplicities).map(|(r, m)| r * *m as i64).sum();
    ComplexPoint::new(
        face.stratum,
        face.components.iter().zip(&raw).map(|(c, r)| (*c, Rational::new((*r).into(), norm.into()))),
    )
}

/// A random support on the index set `index` with up to `max_terms` exponents.
pub fn random_support<R: Rng>(rng: &mut R, index: &[ComponentId], max_terms: usize, max_exponent: u32) -> MonomialSupport {
    let terms = rng.gen_range(1..=max_terms);
    MonomialSupport::new(
        index.to_vec(),
        (0..terms).map(|_| index.iter().map(|_| rng.gen_range(0..=max_exponent)).collect::<Vec<_>>()),
    )
    .expect("nonempty support")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixtures_build() {
        for f in [segment(1, 1), node_fiber(), simplex(3, &[1, 2, 3, 4]), dumbbell(), theta_graph()] {
            build_dual_complex(&f).unwrap();
        }
        assert_eq!(build_dual_complex(&simplex(3, &[1, 1, 1, 1])).unwrap().f_vector(), vec![4, 6, 4, 1]);
        for (_, _, f) in stable_graphs() {
            build_dual_complex(&f).unwrap();
        }
    }

    #[test]
    fn generators_produce_valid_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let f = random_glued_fiber(&mut rng, 5, 3);
            let dc = build_dual_complex(&f).unwrap();
            dc.check_point(&random_point(&mut rng, &dc)).unwrap();
            random_polarization(&mut rng, &f).check(&f).unwrap();
            let g = random_stable_graph(&mut rng, 4);
            crate::curve_canonical_measure::<Rational>(&g).unwrap();
        }
    }
}
