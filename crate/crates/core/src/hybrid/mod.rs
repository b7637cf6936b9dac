//! Floating-point laboratory for the hybrid side of a degeneration.
//!
//! Everything here works with `|t|` through logarithms: norms are carried as
//! exponents, Log maps as ratios of logarithms, and only reported values are
//! exponentiated.

pub mod chart;
pub mod measure;
pub mod norm;
pub mod sampling;

use num_complex::Complex64;

pub use chart::{chart_compatibility_check, log_map, AdaptedChart, CompatibilityRow, UnitFactors};
pub use measure::{convergence_report, pushforward, ConvergenceReport, ConvergenceRow, ConvergenceTarget, EmpiricalMeasure};
pub use norm::{hybrid_norm, HybridNorm, LaurentPolynomial};
pub use sampling::{sample_family, FamilySpec, Sample, Sampler};

use crate::error::Result;

/// Samples the family at each `|t|` (on the positive real axis) and pushes the
/// uniform empirical measure forward through the node chart.
pub fn simulate(
    family: &FamilySpec,
    t_values: &[f64],
    n_samples: usize,
    seed: u64,
    sampler: &Sampler,
) -> Result<Vec<(f64, EmpiricalMeasure)>> {
    let chart = AdaptedChart::node();
    t_values
        .iter()
        .map(|&t| {
            let samples = sampler.sample(family, Complex64::new(t, 0.0), n_samples, seed)?;
            Ok((t, pushforward(&chart, &samples, None)?))
        })
        .collect()
}
