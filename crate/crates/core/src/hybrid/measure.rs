//! Log pushforwards of sampled measures and convergence statistics on the dual complex.
//!
//! Distances on the dual complex follow one fixed reporting convention: each
//! simplex carries the total-variation metric in its barycentric coordinates
//! `λ_j = m_j w_j` (so every edge has length 1), and paths between simplices run
//! along the 1-skeleton. Under this convention the distance from a point `p` to
//! a vertex `v_i` is `min_k (1 − λ_k(p)) + d_Γ(v_k, v_i)` over the vertices `v_k`
//! of the face carrying `p`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{log_map, AdaptedChart};
use super::sampling::Sample;
use crate::error::{Error, Result};
use crate::fiber::{ComplexPoint, ComponentId, DualComplex, StratumId};
use crate::monge_ampere::AtomicMeasure;

pub const METRIC_CONVENTION: &str =
    "W1 uses the total-variation metric in barycentric coordinates m_j*w_j on each face (unit edges) and the \
     shortest 1-skeleton path between faces; vertex fractions count atoms within max-coordinate distance \
     epsilon of the vertex in w-coordinates; KS compares the first barycentric coordinate of the edge with \
     uniform[0,1]";

/// A finite sum of point masses on a dual complex.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(ComplexPoint<f64>, f64)>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<(ComplexPoint<f64>, f64)>) -> Result<Self> {
        if let Some((_, m)) = atoms.iter().find(|(_, m)| m.is_nan() || *m <= 0.0) {
            return Err(Error::NonPositiveMass(*m));
        }
        Ok(Self { atoms })
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|(_, m)| *m))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `(Log_U)_* μ` for the empirical measure on `samples`; masses default to `1/N`.
pub fn pushforward(chart: &AdaptedChart, samples: &[Sample], weights: Option<&[f64]>) -> Result<EmpiricalMeasure> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let masses: Vec<f64> = match weights {
        Some(w) if w.len() != samples.len() => {
            return Err(Error::WeightCount { expected: samples.len(), found: w.len() })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0 / samples.len() as f64; samples.len()],
    };
    let atoms = samples
        .par_iter()
        .zip(masses.par_iter())
        .map(|(z, m)| Ok((log_map(chart, z)?, *m)))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms)
}

/// What a sequence of measures is compared against.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvergenceTarget {
    Atomic(AtomicMeasure<f64>),
    /// Lebesgue measure on the edge carried by `stratum`.
    EdgeLebesgue { stratum: StratumId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t_abs: f64,
    pub atoms: usize,
    pub total_mass: f64,
    /// Fraction of the mass within `ε` of each target vertex.
    pub vertex_fractions: BTreeMap<ComponentId, f64>,
    pub wasserstein: Option<f64>,
    pub kolmogorov_smirnov: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub convention: String,
    pub epsilon: f64,
    pub rows: Vec<ConvergenceRow>,
}

pub fn convergence_report(
    complex: &DualComplex,
    seq: &[(f64, EmpiricalMeasure)],
    target: &ConvergenceTarget,
    epsilon: f64,
) -> Result<ConvergenceReport> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Epsilon(epsilon));
    }
    let metric = ComplexMetric::new(complex);
    let mut rows = Vec::with_capacity(seq.len());
    for (t_abs, mu) in seq {
        for (p, _) in &mu.atoms {
            complex.check_point(p).map_err(|e| Error::ComplexMismatch(e.to_string()))?;
        }
        let total = mu.total_mass();
        let mut row = ConvergenceRow {
            t_abs: *t_abs,
            atoms: mu.len(),
            total_mass: total,
            vertex_fractions: BTreeMap::new(),
            wasserstein: None,
            kolmogorov_smirnov: None,
        };
        match target {
            ConvergenceTarget::Atomic(nu) => {
                for v in nu.masses().keys() {
                    complex.fiber().component(*v).ok_or_else(|| Error::ComplexMismatch(format!("no vertex {v}")))?;
                    let m_v = complex.fiber().multiplicity(*v)? as f64;
                    let near = compensated_sum(
                        mu.atoms.iter().filter(|(p, _)| vertex_distance(p, *v, m_v) <= epsilon).map(|(_, m)| *m),
                    );
                    row.vertex_fractions.insert(*v, near / total);
                }
                row.wasserstein = Some(wasserstein_to_atomic(complex, &metric, mu, nu)?);
            }
            ConvergenceTarget::EdgeLebesgue { stratum } => {
                row.kolmogorov_smirnov = Some(ks_on_edge(complex, mu, *stratum)?);
            }
        }
        rows.push(row);
    }
    Ok(ConvergenceReport { convention: METRIC_CONVENTION.to_string(), epsilon, rows })
}

/// Neumaier summation; the error does not grow with the number of atoms.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Max-coordinate distance in `w` from `p` to the vertex `v` (weight `1/m_v`).
fn vertex_distance(p: &ComplexPoint<f64>, v: ComponentId, m_v: f64) -> f64 {
    if !p.weights.contains_key(&v) {
        return f64::INFINITY;
    }
    p.weights
        .iter()
        .map(|(c, w)| if *c == v { (w - 1.0 / m_v).abs() } else { w.abs() })
        .fold(0.0, f64::max)
}

/// Graph distances between vertices along the 1-skeleton.
struct ComplexMetric {
    hops: BTreeMap<ComponentId, BTreeMap<ComponentId, f64>>,
}

impl ComplexMetric {
    fn new(complex: &DualComplex) -> Self {
        let mut adjacency: BTreeMap<ComponentId, BTreeSet<ComponentId>> = BTreeMap::new();
        for (c, _) in complex.vertices() {
            adjacency.entry(c).or_default();
        }
        for e in complex.edges() {
            let (a, b) = (e.components[0], e.components[1]);
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        let mut hops = BTreeMap::new();
        for &start in adjacency.keys() {
            let mut dist = BTreeMap::from([(start, 0.0)]);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                let d = dist[&x];
                for y in &adjacency[&x] {
                    if !dist.contains_key(y) {
                        dist.insert(*y, d + 1.0);
                        queue.push_back(*y);
                    }
                }
            }
            hops.insert(start, dist);
        }
        Self { hops }
    }

    fn hop(&self, a: ComponentId, b: ComponentId) -> f64 {
        self.hops.get(&a).and_then(|d| d.get(&b)).copied().unwrap_or(f64::INFINITY)
    }

    fn to_vertex(&self, complex: &DualComplex, p: &ComplexPoint<f64>, v: ComponentId) -> f64 {
        let face = complex.face(p.stratum).expect("checked point");
        face.components
            .iter()
            .zip(&face.multiplicities)
            .map(|(k, m)| (1.0 - *m as f64 * p.weight(*k)).max(0.0) + self.hop(*k, v))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `W_1(μ/|μ|, ν/|ν|)` for a target supported on vertices.
fn wasserstein_to_atomic(
    complex: &DualComplex,
    metric: &ComplexMetric,
    mu: &EmpiricalMeasure,
    nu: &AtomicMeasure<f64>,
) -> Result<f64> {
    let nu_total = nu.total_mass();
    let targets: Vec<(ComponentId, f64)> =
        nu.masses().iter().filter(|(_, m)| **m > 0.0).map(|(c, m)| (*c, m / nu_total)).collect();
    if targets.is_empty() {
        return Err(Error::NonPositiveMass(nu_total));
    }
    let mu_total = mu.total_mass();
    let costs: Vec<(f64, Vec<f64>)> = mu
        .atoms
        .iter()
        .map(|(p, m)| (m / mu_total, targets.iter().map(|(v, _)| metric.to_vertex(complex, p, *v)).collect()))
        .collect();
    match targets.len() {
        1 => Ok(compensated_sum(costs.iter().map(|(m, c)| m * c[0]))),
        2 => Ok(two_target_transport(&costs, targets[0].1)),
        _ => transport_lp(&costs, &targets.iter().map(|(_, b)| *b).collect::<Vec<_>>()),
    }
}

/// Exact transport to two sinks: the first receives the atoms with the
/// smallest cost advantage `c_1 − c_2`, filled up to its mass `b_1`.
fn two_target_transport(costs: &[(f64, Vec<f64>)], first_mass: f64) -> f64 {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    let advantage = |k: usize| costs[k].1[0] - costs[k].1[1];
    order.sort_by(|a, b| advantage(*a).total_cmp(&advantage(*b)));
    let mut total: f64 = costs.iter().map(|(m, c)| m * c[1]).sum();
    let mut room = first_mass;
    for k in order {
        if room <= 0.0 {
            break;
        }
        let moved = costs[k].0.min(room);
        total += moved * advantage(k);
        room -= moved;
    }
    total
}

/// General transport as a linear program. Atoms with identical cost vectors are merged first.
fn transport_lp(costs: &[(f64, Vec<f64>)], sinks: &[f64]) -> Result<f64> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};

    let mut merged: BTreeMap<Vec<u64>, (f64, Vec<f64>)> = BTreeMap::new();
    for (m, c) in costs {
        let key = c.iter().map(|x| x.to_bits()).collect();
        merged.entry(key).or_insert_with(|| (0.0, c.clone())).0 += m;
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut columns: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); sinks.len()];
    for (mass, c) in merged.values() {
        let mut row = Vec::new();
        for (i, cost) in c.iter().enumerate() {
            if cost.is_finite() {
                let x = problem.add_var(*cost, (0.0, f64::INFINITY));
                row.push((x, 1.0));
                columns[i].push((x, 1.0));
            }
        }
        if row.is_empty() {
            return Ok(f64::INFINITY);
        }
        problem.add_constraint(row.as_slice(), ComparisonOp::Eq, *mass);
    }
    for (col, b) in columns.iter().zip(sinks) {
        problem.add_constraint(col.as_slice(), ComparisonOp::Eq, *b);
    }
    match problem.solve() {
        Ok(solution) => Ok(solution.objective()),
        Err(microlp::Error::Infeasible) => Ok(f64::INFINITY),
        Err(e) => Err(Error::Transport(e.to_string())),
    }
}

/// Weighted Kolmogorov–Smirnov distance between the first barycentric
/// coordinate on an edge and the uniform law on `[0, 1]`.
fn ks_on_edge(complex: &DualComplex, mu: &EmpiricalMeasure, stratum: StratumId) -> Result<f64> {
    let edge = complex.face(stratum)?;
    if edge.components.len() != 2 {
        return Err(Error::ComplexMismatch(format!("{stratum} is not an edge")));
    }
    let (first, m_first) = (edge.components[0], edge.multiplicities[0] as f64);
    let total = mu.total_mass();
    let mut values: Vec<(f64, f64)> = Vec::with_capacity(mu.len());
    for (p, m) in &mu.atoms {
        let on_edge = p.stratum == stratum || edge.sub_faces().any(|s| s == p.stratum);
        if !on_edge {
            return Err(Error::ComplexMismatch(format!("atom on {} is not on edge {stratum}", p.stratum)));
        }
        values.push(((m_first * p.weight(first)).clamp(0.0, 1.0), m / total));
    }
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0;
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while k < values.len() {
        let x = values[k].0;
        worst = worst.max((cdf - x).abs());
        while k < values.len() && values[k].0 == x {
            cdf += values[k].1;
            k += 1;
        }
        worst = worst.max((cdf - x).abs());
    }
    Ok(worst)
}
