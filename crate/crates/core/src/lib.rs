//! Combinatorics and measures of hybrid degenerations.
//!
//! The exact side (dual complexes, quasi-monomial valuations, model maps and
//! non-archimedean Monge-Ampère measures) is generic over a [`Scalar`] and is
//! normally run over [`Rational`]. The [`hybrid`] module is the floating-point
//! laboratory: hybrid norms, Log maps, sampled families and convergence
//! statistics.

pub mod error;
pub mod fiber;
pub mod gallery;
pub mod hybrid;
pub mod maps;
pub mod monge_ampere;
pub mod scalar;
pub mod valuation;

pub use error::{Error, Result};
pub use fiber::{
    build_dual_complex, canonicalize_point, CentralFiber, ComplexPoint, Component, ComponentId, DualComplex, Face,
    Stratum, StratumId,
};
pub use maps::{blow_up_stratum, compose_pullbacks, retract, validate_pullback, PullbackMatrix};
pub use monge_ampere::{
    curve_canonical_measure, dirac_limit, essential_skeleton, monge_ampere, AtomicMeasure, EssentialSkeleton,
    ModelPolarization, PluricanonicalForm,
};
pub use scalar::Scalar;
pub use valuation::{
    divisorial_valuation, eval_model_metric_log, eval_na_fubini_study, eval_quasi_monomial, MonomialSupport,
    RationalSection,
};

/// Exact rational scalar used by all combinatorial computations.
pub type Rational = num_rational::BigRational;

/// A point of a dual complex with exact coordinates.
pub type ExactPoint = ComplexPoint<Rational>;
/// A point of a dual complex with floating-point coordinates (Log map output).
pub type FloatPoint = ComplexPoint<f64>;
/// An atomic measure with exact masses.
pub type ExactMeasure = AtomicMeasure<Rational>;
pub type ExactPolarization = ModelPolarization<Rational>;
