use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use nadegen_core::gallery;
use nadegen_core::hybrid::{hybrid_norm, log_map, pushforward, sample_family, AdaptedChart, FamilySpec, LaurentPolynomial, Sampler};
use nadegen_core::monge_ampere::{curve_canonical_polarization, curve_genus};
use nadegen_core::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn constraint(complex: &DualComplex, p: &ExactPoint) -> Rational {
    p.barycentric(complex).unwrap().into_values().fold(q(0, 1), |a, b| a + b)
}

/// A random point on a fixed face.
fn point_on(rng: &mut ChaCha8Rng, face: &Face) -> ExactPoint {
    let mut raw: Vec<i64> = face.components.iter().map(|_| rng.gen_range(0..=9)).collect();
    if raw.iter().all(|r| *r == 0) {
        raw[0] = 1;
    }
    let norm: i64 = raw.iter().zip(&face.multiplicities).map(|(r, m)| r * *m as i64).sum();
    ComplexPoint::new(face.stratum, face.components.iter().zip(&raw).map(|(c, r)| (*c, q(*r, norm))))
}

/// The same fiber with component `i` renamed to `perm[i - 1]` and strata listed in reverse.
fn renamed(fiber: &CentralFiber, perm: &[u32]) -> CentralFiber {
    let map = |c: &ComponentId| ComponentId(perm[c.0 as usize - 1]);
    let components = fiber
        .components()
        .iter()
        .map(|c| Component { id: map(&c.id), ..c.clone() })
        .collect();
    let strata = fiber
        .strata()
        .iter()
        .rev()
        .map(|s| Stratum { component_set: s.component_set.iter().map(map).collect(), ..s.clone() })
        .collect();
    CentralFiber::new(fiber.fiber_dimension(), components, strata).unwrap()
}

type Shape = (BTreeMap<Vec<(ComponentId, u32)>, usize>, BTreeMap<(BTreeSet<ComponentId>, BTreeSet<ComponentId>), usize>);

fn shape(dc: &DualComplex) -> Shape {
    let mut faces = BTreeMap::new();
    let mut incidence = BTreeMap::new();
    for f in dc.faces() {
        let key: Vec<_> = f.components.iter().copied().zip(f.multiplicities.iter().copied()).collect();
        *faces.entry(key).or_insert(0) += 1;
        let big: BTreeSet<_> = f.components.iter().copied().collect();
        for s in f.sub_faces() {
            let small = dc.face(s).unwrap().components.iter().copied().collect();
            *incidence.entry((small, big.clone())).or_insert(0) += 1;
        }
    }
    (faces, incidence)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalize_is_idempotent_and_keeps_the_constraint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dc = build_dual_complex(&gallery::random_glued_fiber(&mut r, 5, 4)).unwrap();
        let p = gallery::random_point(&mut r, &dc);
        let once = canonicalize_point(&dc, &p).unwrap();
        prop_assert_eq!(canonicalize_point(&dc, &once).unwrap(), once.clone());
        prop_assert_eq!(constraint(&dc, &once), q(1, 1));
        prop_assert!(once.weights.values().all(|w| *w > q(0, 1)));
        prop_assert!(dc.is_face_of(once.stratum, p.stratum).unwrap());
    }

    #[test]
    fn dual_complex_is_invariant_under_renaming(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_glued_fiber(&mut r, 5, 3);
        let k = fiber.components().len() as u32;
        let mut perm: Vec<u32> = (1..=k).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let a = build_dual_complex(&fiber).unwrap();
        let b = build_dual_complex(&renamed(&fiber, &perm)).unwrap();
        prop_assert_eq!(a.f_vector(), b.f_vector());
        let (faces, incidence) = shape(&a);
        let relabel = |c: &ComponentId| ComponentId(perm[c.0 as usize - 1]);
        let faces: BTreeMap<_, _> = faces
            .into_iter()
            .map(|(key, n)| {
                let mut key: Vec<_> = key.iter().map(|(c, m)| (relabel(c), *m)).collect();
                key.sort();
                (key, n)
            })
            .collect();
        let incidence: BTreeMap<_, _> = incidence
            .into_iter()
            .map(|((s, b), n)| ((s.iter().map(relabel).collect(), b.iter().map(relabel).collect()), n))
            .collect();
        prop_assert_eq!((faces, incidence), shape(&b));
        prop_assert_eq!(build_dual_complex(&fiber).unwrap().f_vector(), a.f_vector());
    }

    #[test]
    fn face_vertices_are_the_singleton_strata(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_glued_fiber(&mut r, 6, 3);
        let dc = build_dual_complex(&fiber).unwrap();
        for f in dc.faces() {
            for c in &f.components {
                prop_assert_eq!(f.sub_face(&BTreeSet::from([*c])), Some(fiber.vertex_stratum(*c).unwrap()));
            }
        }
    }

    #[test]
    fn valuation_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dc = build_dual_complex(&gallery::random_fiber(&mut r, 3, 4)).unwrap();
        let p = gallery::random_point(&mut r, &dc);
        let index = p.index_set();
        let a = gallery::random_support(&mut r, &index, 5, 6);
        let b = gallery::random_support(&mut r, &index, 5, 6);
        let va: Rational = eval_quasi_monomial(&p, &a).unwrap();
        let vb: Rational = eval_quasi_monomial(&p, &b).unwrap();
        prop_assert_eq!(eval_quasi_monomial(&p, &a.minkowski_sum(&b).unwrap()).unwrap(), &va + &vb);
        let union = a.union(&b).unwrap();
        prop_assert_eq!(eval_quasi_monomial(&p, &union).unwrap(), va.clone().min(vb.clone()));
        prop_assert!(eval_quasi_monomial(&p, &union).unwrap() <= va.clone());
        let t = MonomialSupport::uniformizer(dc.face(p.stratum).unwrap());
        prop_assert_eq!(eval_quasi_monomial(&p, &t).unwrap(), q(1, 1));
        let s = RationalSection::new(a, b).unwrap();
        let forward: Rational = eval_model_metric_log(&p, &s).unwrap();
        prop_assert_eq!(eval_model_metric_log(&p, &s.inverse()).unwrap(), -forward);
    }

    #[test]
    fn divisorial_vertices_value_t_at_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_glued_fiber(&mut r, 5, 6);
        let dc = build_dual_complex(&fiber).unwrap();
        for c in fiber.components() {
            let v: ExactPoint = divisorial_valuation(&fiber, c.id).unwrap();
            let t = MonomialSupport::uniformizer(dc.face(v.stratum).unwrap());
            prop_assert_eq!(eval_quasi_monomial(&v, &t).unwrap(), q(1, 1));
        }
    }

    #[test]
    fn retraction_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let base = gallery::random_fiber_with(&mut r, 2, 3, 3);
        let depth = r.gen_range(1..=3);
        let (fibers, maps) = gallery::random_tower(&mut r, &base, depth);
        prop_assert_eq!(maps.len(), depth);
        for m in &maps {
            prop_assert!(validate_pullback(m).unwrap().is_empty());
        }
        let top = build_dual_complex(fibers.last().unwrap()).unwrap();
        let bottom = build_dual_complex(&base).unwrap();
        let p = gallery::random_point(&mut r, &top);

        // step down one model at a time, and all at once
        let mut stepwise = p.clone();
        for m in maps.iter().rev() {
            stepwise = retract(m, &stepwise).unwrap();
        }
        let composed = maps[1..].iter().try_fold(maps[0].clone(), |acc, m| compose_pullbacks(&acc, m)).unwrap();
        prop_assert!(validate_pullback(&composed).is_ok());
        prop_assert_eq!(retract(&composed, &p).unwrap(), stepwise.clone());
        prop_assert_eq!(constraint(&bottom, &stepwise), q(1, 1));

        // affine on faces
        let face = top.face(p.stratum).unwrap();
        let p2 = point_on(&mut r, face);
        let lambda = q(r.gen_range(0..=7), 7);
        let mix = ComplexPoint::new(
            face.stratum,
            face.components.iter().map(|c| (*c, &lambda * p.weight(*c) + (q(1, 1) - &lambda) * p2.weight(*c))),
        );
        let (rp, rq, rmix) = (retract(&composed, &p).unwrap(), retract(&composed, &p2).unwrap(), retract(&composed, &mix).unwrap());
        for c in base.components() {
            prop_assert_eq!(rmix.weight(c.id), &lambda * rp.weight(c.id) + (q(1, 1) - &lambda) * rq.weight(c.id));
        }
    }

    #[test]
    fn monge_ampere_conserves_mass(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_glued_fiber(&mut r, 5, 4);
        let pol = gallery::random_polarization(&mut r, &fiber);
        let mu = monge_ampere(&fiber, &pol).unwrap();
        prop_assert_eq!(mu.total_mass(), pol.total_degree.clone());
        for c in fiber.components() {
            prop_assert_eq!(mu.mass(c.id), Rational::from_integer(c.multiplicity.into()) * &pol.degrees[&c.id]);
        }
    }

    #[test]
    fn curve_measure_matches_genus_and_monge_ampere(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_stable_graph(&mut r, 5);
        let mu: ExactMeasure = curve_canonical_measure(&fiber).unwrap();
        let g = curve_genus(&fiber).unwrap() as i64;
        prop_assert_eq!(mu.total_mass(), q(2 * g - 2, 1));
        let pol = curve_canonical_polarization(&fiber).unwrap();
        prop_assert_eq!(monge_ampere(&fiber, &pol).unwrap(), mu.clone());
        let normalized = dirac_limit(&fiber, &mu.normalized().unwrap().masses().clone()).unwrap();
        prop_assert_eq!(normalized, mu.scaled(&q(1, 2 * g - 2)).unwrap());
    }

    #[test]
    fn essential_skeleton_is_face_closed(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fiber = gallery::random_glued_fiber(&mut r, 5, 3);
        let dc = build_dual_complex(&fiber).unwrap();
        let forms: Vec<PluricanonicalForm> = (0..r.gen_range(1..=3))
            .map(|_| PluricanonicalForm {
                level: r.gen_range(1..=3),
                ords: fiber.components().iter().map(|c| (c.id, r.gen_range(-1..=3))).collect(),
            })
            .collect();
        let sk: EssentialSkeleton<Rational> = essential_skeleton(&fiber, &forms).unwrap();
        for form in &sk.per_form {
            prop_assert!(!form.faces.is_empty());
            for s in &form.faces {
                for sub in dc.face(*s).unwrap().sub_faces() {
                    prop_assert!(form.faces.contains(&sub));
                }
            }
            prop_assert!(form.faces.is_subset(&sk.union));
        }
    }

    #[test]
    fn hybrid_norm_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let laurent = |r: &mut ChaCha8Rng| {
            LaurentPolynomial::new((0..r.gen_range(1..=4)).map(|_| {
                (r.gen_range(-3..=5), Complex64::new(r.gen_range(0.5..2.0), r.gen_range(-1.0..1.0)))
            }))
        };
        let (f, g) = (laurent(&mut r), laurent(&mut r));
        prop_assume!(!f.is_zero() && !g.is_zero());
        let z = Complex64::from_polar(r.gen_range(1e-6..0.01f64), r.gen_range(0.0..TAU));
        let (nf, ng, nfg) = (hybrid_norm(&f, z, 0.5).unwrap(), hybrid_norm(&g, z, 0.5).unwrap(), hybrid_norm(&f.mul(&g), z, 0.5).unwrap());
        prop_assert!(((nf.value * ng.value) / nfg.value - 1.0).abs() <= 1e-10);
        let origin = Complex64::new(0.0, 0.0);
        let at0 = hybrid_norm(&f.mul(&g), origin, 0.5).unwrap();
        prop_assert_eq!(at0.exponent, hybrid_norm(&f, origin, 0.5).unwrap().exponent + hybrid_norm(&g, origin, 0.5).unwrap().exponent);
    }

    #[test]
    fn log_map_lands_in_the_open_face(m1 in 1u32..5, m2 in 1u32..5, a in 1e-9f64..0.99, b in 1e-9f64..0.99) {
        let chart = AdaptedChart { components: vec![ComponentId(1), ComponentId(2)], multiplicities: vec![m1, m2], stratum: StratumId(3) };
        let p = log_map(&chart, &[Complex64::new(a, 0.0), Complex64::new(0.0, b)]).unwrap();
        prop_assert!(p.weights.values().all(|w| *w > 0.0));
        let sum = m1 as f64 * p.weight(ComponentId(1)) + m2 as f64 * p.weight(ComponentId(2));
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn pushforward_preserves_total_mass() {
    let chart = AdaptedChart::node();
    for (k, family) in [FamilySpec::EdgeUniform, FamilySpec::TwoComponent { lambda: 0.4 }].iter().enumerate() {
        let samples = sample_family(family, Complex64::new(1e-5, 0.0), 5_000, k as u64).unwrap();
        let mu = pushforward(&chart, &samples, None).unwrap();
        assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
        let weights: Vec<f64> = (0..samples.len()).map(|i| 1.0 + (i % 3) as f64).collect();
        let total: f64 = weights.iter().sum();
        assert!((pushforward(&chart, &samples, Some(&weights)).unwrap().total_mass() - total).abs() <= 1e-12 * total);
    }
}

#[test]
fn pipeline_is_independent_of_worker_count() {
    let family = FamilySpec::EdgeUniform;
    let t = [1e-2, 1e-4];
    let a = hybrid::simulate(&family, &t, 20_000, 9, &Sampler::with_workers(1)).unwrap();
    let b = hybrid::simulate(&family, &t, 20_000, 9, &Sampler::with_workers(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn continuity_at_the_puncture() {
    let mut r = rng(3);
    for _ in 0..50 {
        let k = r.gen_range(-4..=4);
        let lowest = Complex64::from_polar(r.gen_range(0.1..10.0), r.gen_range(0.0..TAU));
        let f = LaurentPolynomial::new([(k, lowest), (k + 1, Complex64::new(3.0, 1.0)), (k + 4, Complex64::new(-2.0, 0.0))]);
        let z = Complex64::from_polar(r.gen_range(1e-12..1e-8), r.gen_range(0.0..TAU));
        // the exponent approaches k like ln|a_k| / ln|z|
        let gap = hybrid_norm(&f, z, 0.5).unwrap().exponent - k as f64;
        assert!((gap - lowest.norm().ln() / z.norm().ln()).abs() <= 1e-6, "{gap}");
        let monic = LaurentPolynomial::new([(k, lowest / lowest.norm()), (k + 1, Complex64::new(3.0, 1.0))]);
        assert!((hybrid_norm(&monic, z, 0.5).unwrap().exponent - k as f64).abs() <= 1e-2);
    }
}

#[test]
fn json_round_trips() {
    let mut r = rng(11);
    for _ in 0..20 {
        let fiber = gallery::random_glued_fiber(&mut r, 5, 3);
        let text = serde_json::to_string(&fiber).unwrap();
        assert_eq!(serde_json::from_str::<CentralFiber>(&text).unwrap(), fiber);
        let dc = build_dual_complex(&fiber).unwrap();
        let back: DualComplex = serde_json::from_str(&serde_json::to_string(&dc).unwrap()).unwrap();
        assert_eq!(back.f_vector(), dc.f_vector());
        let p = gallery::random_point(&mut r, &dc);
        assert_eq!(serde_json::from_str::<ExactPoint>(&serde_json::to_string(&p).unwrap()).unwrap(), p);
        let pol = gallery::random_polarization(&mut r, &fiber);
        let mu = monge_ampere(&fiber, &pol).unwrap();
        assert_eq!(serde_json::from_str::<ExactMeasure>(&serde_json::to_string(&mu).unwrap()).unwrap(), mu);
        let base = gallery::random_fiber_with(&mut r, 2, 3, 3);
        let (_, maps) = gallery::random_tower(&mut r, &base, 2);
        let m = &maps[1];
        assert_eq!(serde_json::from_str::<PullbackMatrix>(&serde_json::to_string(m).unwrap()).unwrap(), *m);
    }
}
