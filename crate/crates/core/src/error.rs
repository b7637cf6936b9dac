use thiserror::Error;

use crate::fiber::{ComponentId, StratumId};

/// Errors raised by the combinatorial and numerical routines.
///
/// Every message names the violated invariant so that callers (the CLI in
/// particular) can surface it as a one-line diagnostic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate component id {0}")]
    DuplicateComponent(ComponentId),
    #[error("component {id} has multiplicity 0; multiplicities must be positive")]
    ZeroMultiplicity { id: ComponentId },
    #[error("duplicate stratum id {0}")]
    DuplicateStratum(StratumId),
    #[error("stratum {0} has an empty component set")]
    EmptyStratum(StratumId),
    #[error("stratum {stratum} references unknown component {component}")]
    UnknownComponentInStratum { stratum: StratumId, component: ComponentId },
    #[error("strata {first} and {second} share component set and branch label")]
    DuplicateBranch { first: StratumId, second: StratumId },
    #[error("component {0} has no singleton stratum")]
    MissingVertex(ComponentId),
    #[error("component {component} has {count} singleton strata; components are irreducible")]
    SplitVertex { component: ComponentId, count: usize },
    #[error("codimension bound violated at stratum {stratum}: |J| = {size} > n + 1 = {limit}")]
    CodimensionBound { stratum: StratumId, size: usize, limit: usize },
    #[error("face closure violated at stratum {stratum}: no stratum with component set {missing:?}")]
    FaceClosure { stratum: StratumId, missing: Vec<ComponentId> },
    #[error("ambiguous face of stratum {stratum}: {candidates:?} all have component set {set:?}")]
    AmbiguousFace { stratum: StratumId, set: Vec<ComponentId>, candidates: Vec<StratumId> },
    #[error("stratum {stratum} lists face hint {hint}, which does not exist or is not a proper face")]
    BadFaceHint { stratum: StratumId, hint: StratumId },
    #[error("unknown stratum {0}")]
    UnknownStratum(StratumId),
    #[error("unknown component {0}")]
    UnknownComponent(ComponentId),

    #[error("negative weight {value} on component {component}")]
    NegativeWeight { component: ComponentId, value: String },
    #[error("weights of stratum {stratum} must be indexed by {expected:?}, got {found:?}")]
    WrongIndexSet { stratum: StratumId, expected: Vec<ComponentId>, found: Vec<ComponentId> },
    #[error("simplex constraint violated: sum of m_j w_j = {sum}, expected 1")]
    Normalization { sum: String },
    #[error("point has no positive weight")]
    ZeroPoint,

    #[error("empty monomial support")]
    EmptySupport,
    #[error("exponent vector of length {found} on an index set of size {expected}")]
    ExponentLength { expected: usize, found: usize },
    #[error("index set mismatch: point carries {point:?}, support uses {support:?}")]
    IndexMismatch { point: Vec<ComponentId>, support: Vec<ComponentId> },
    #[error("Fubini-Study potential needs at least two coordinates, got {0}")]
    TooFewCoordinates(usize),
    #[error("chart index {index} out of range for {count} coordinates")]
    ChartIndex { index: usize, count: usize },

    #[error("pullback matrix shape mismatch: {0}")]
    PullbackShape(String),
    #[error("multiplicity identity violated at column {column}: sum of a_ij m_i = {lhs}, m'_j = {rhs}")]
    MultiplicityIdentity { column: ComponentId, lhs: u64, rhs: u32 },
    #[error("cannot compose pullbacks: source fiber of the first differs from target fiber of the second")]
    FiberMismatch,
    #[error("retraction support {support:?} is not carried by any declared stratum")]
    UncarriedSupport { support: Vec<ComponentId> },
    #[error("retraction support {support:?} matches several strata {candidates:?}; supply a stratum map")]
    AmbiguousSupport { support: Vec<ComponentId>, candidates: Vec<StratumId> },
    #[error("stratum {0} is not minimal; only minimal strata can be blown up")]
    NotMinimal(StratumId),
    #[error("stratum {0} is a component; blowing up a divisor does not change the model")]
    DivisorCenter(StratumId),

    #[error("degree data missing for component {0}")]
    MissingDegree(ComponentId),
    #[error("degree data for unknown component {0}")]
    ExtraDegree(ComponentId),
    #[error("degree consistency violated at total: sum of m_i d_i = {sum}, L^n = {total}")]
    DegreeConsistency { sum: String, total: String },
    #[error("negative mass {mass} at component {component}")]
    NegativeMass { component: ComponentId, mass: String },
    #[error("fiber dimension is {0}, expected 1")]
    NotACurve(usize),
    #[error("component {0} is not reduced (multiplicity {1})")]
    Unreduced(ComponentId, u32),
    #[error("component {0} carries no genus marking")]
    MissingGenus(ComponentId),
    #[error("stratum {0} is not a node (curve strata must have |J| <= 2)")]
    NotANode(StratumId),
    #[error("dual graph is disconnected ({0} connected components)")]
    Disconnected(usize),
    #[error("mass data missing for component {0}")]
    MissingMass(ComponentId),
    #[error("no pluricanonical forms supplied")]
    NoForms,
    #[error("form level must be positive")]
    ZeroLevel,
    #[error("ord data missing for component {0}")]
    MissingOrd(ComponentId),

    #[error("hybrid norm of the zero Laurent polynomial is undefined")]
    ZeroLaurent,
    #[error("radius {0} outside (0, 1)")]
    Radius(f64),
    #[error("|z| = {modulus} exceeds radius {radius}")]
    OutsideDisk { modulus: f64, radius: f64 },
    #[error("chart coordinate {index} has modulus {modulus}, expected 0 < |z| < 1")]
    CoordinateModulus { index: usize, modulus: f64 },
    #[error("sample has {found} coordinates, chart expects {expected}")]
    SampleArity { expected: usize, found: usize },
    #[error("invalid t: |t| = {0}, expected 0 < |t| < 1")]
    InvalidT(f64),
    #[error("sample count must be positive")]
    NoSamples,
    #[error("mixture weight {0} outside [0, 1]")]
    MixtureWeight(f64),
    #[error("measure mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("weights list has {found} entries for {expected} samples")]
    WeightCount { expected: usize, found: usize },
    #[error("epsilon {0} outside (0, 1/2)")]
    Epsilon(f64),
    #[error("empty measure sequence")]
    EmptySequence,
    #[error("measure lives on a different complex: {0}")]
    ComplexMismatch(String),
    #[error("unit factor modulus {modulus} outside declared bounds [{lower}, {upper}]")]
    UnitBounds { modulus: f64, lower: f64, upper: f64 },
    #[error("transport solver failed: {0}")]
    Transport(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
