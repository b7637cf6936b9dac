//! Command-line driver: reads a JSON run configuration, validates it against
//! the bundled schema, runs one task and writes JSON or CSV.
//!
//! Exit status is 0 on success, 2 when the invocation or configuration is
//! invalid, 3 when the data violates a mathematical invariant, and 1 when the
//! output cannot be written. Every failure prints exactly one diagnostic line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Parser, ValueEnum};
use nadegen_core::hybrid::{
    chart_compatibility_check, convergence_report, simulate, AdaptedChart, ConvergenceTarget, EmpiricalMeasure,
    FamilySpec, Sampler, UnitFactors,
};
use nadegen_core::monge_ampere::{curve_genus, curve_valences};
use nadegen_core::{
    blow_up_stratum, build_dual_complex, compose_pullbacks, curve_canonical_measure, essential_skeleton, gallery,
    monge_ampere, retract, validate_pullback, AtomicMeasure, CentralFiber, ComplexPoint, ComponentId,
    EssentialSkeleton, ExactMeasure, ExactPoint, ModelPolarization, PluricanonicalForm, PullbackMatrix, Rational,
    StratumId,
};
use nadegen_core::fiber::FiberRecord;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = include_str!("../schema/config.schema.json");

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_T: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    DualComplex,
    MaMeasure,
    CurveLimit,
    Skeleton,
    Retraction,
    Blowup,
    HybridSim,
    ChartCheck,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nadegen", version, about = "Dual complexes, non-archimedean Monge-Ampère measures and hybrid limits")]
pub struct Cli {
    pub task: Task,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated values of |t|.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Domain(nadegen_core::Error),
    Output(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Output(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Failure::Invalid(m) => ("invalid configuration", m.clone()),
            Failure::Domain(e) => ("domain error", e.to_string()),
            Failure::Output(m) => ("output error", m.clone()),
        };
        write!(f, "{kind}: {}", msg.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

impl From<nadegen_core::Error> for Failure {
    fn from(e: nadegen_core::Error) -> Self {
        Failure::Domain(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

/// An exact rational given as `"p/q"`, `"p"` or a JSON integer.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalInput(pub Rational);

impl<'de> Deserialize<'de> for RationalInput {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Self(Rational::from_integer(n.into()))),
            Raw::Text(s) => s
                .parse::<Rational>()
                .map(Self)
                .map_err(|e| serde::de::Error::custom(format!("bad rational {s:?}: {e}"))),
        }
    }
}

fn exact(map: BTreeMap<ComponentId, RationalInput>) -> BTreeMap<ComponentId, Rational> {
    map.into_iter().map(|(k, v)| (k, v.0)).collect()
}

#[derive(Debug, Deserialize)]
pub struct PolarizationInput {
    pub degrees: BTreeMap<ComponentId, RationalInput>,
    pub total_degree: RationalInput,
}

#[derive(Debug, Deserialize)]
pub struct PointInput {
    pub stratum: StratumId,
    pub weights: BTreeMap<ComponentId, RationalInput>,
}

#[derive(Debug, Deserialize)]
pub struct PullbackInput {
    pub source_fiber: FiberRecord,
    pub target_fiber: FiberRecord,
    pub rows: Vec<ComponentId>,
    pub cols: Vec<ComponentId>,
    pub entries: Vec<Vec<u32>>,
    #[serde(default)]
    pub stratum_map: BTreeMap<StratumId, StratumId>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetInput {
    Dirac { component: ComponentId },
    Atomic { masses: BTreeMap<ComponentId, RationalInput> },
    EdgeLebesgue,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum UnitsInput {
    Constant { values: Vec<[f64; 2]>, lower: f64, upper: f64 },
    Random { lower: f64, upper: f64 },
}

#[derive(Debug, Default, Deserialize)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub fiber: Option<FiberRecord>,
    pub polarization: Option<PolarizationInput>,
    pub forms: Option<Vec<PluricanonicalForm>>,
    pub point: Option<PointInput>,
    pub pullbacks: Option<Vec<PullbackInput>>,
    pub blowups: Option<Vec<StratumId>>,
    pub stratum: Option<StratumId>,
    pub family: Option<FamilySpec>,
    pub target: Option<TargetInput>,
    pub units: Option<UnitsInput>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub workers: Option<usize>,
    pub chunk_size: Option<usize>,
    pub output: Option<PathBuf>,
}

fn schema() -> &'static jsonschema::JSONSchema {
    static COMPILED: OnceLock<jsonschema::JSONSchema> = OnceLock::new();
    COMPILED.get_or_init(|| {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("bundled schema is JSON");
        jsonschema::JSONSchema::compile(&schema).expect("bundled schema compiles")
    })
}

/// Parses and schema-checks a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, Failure> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| invalid(format!("config is not JSON: {e}")))?;
    if let Err(mut errors) = schema().validate(&value) {
        let first = errors.next().expect("a failed validation has an error");
        let at = first.instance_path.to_string();
        return Err(invalid(format!("schema violation at {}: {first}", if at.is_empty() { "/" } else { &at })));
    }
    serde_json::from_value(value).map_err(|e| invalid(format!("config does not parse: {e}")))
}

/// Bytes produced by a task, before they are written anywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    pub kind: ArtifactKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArtifactKind {
    Json,
    Csv,
}

fn json<T: Serialize>(value: &T) -> Result<Artifact, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(Artifact { bytes, kind: ArtifactKind::Json })
}

fn csv_artifact(header: &[String], rows: &[Vec<String>]) -> Result<Artifact, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Failure::Output(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Failure::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Output(e.to_string()))?;
    Ok(Artifact { bytes, kind: ArtifactKind::Csv })
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Command-line values override the configuration file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
}

impl From<&Cli> for Overrides {
    fn from(cli: &Cli) -> Self {
        Self { seed: cli.seed, samples: cli.samples, t: cli.t.clone(), epsilon: cli.epsilon }
    }
}

struct Hybrid {
    seed: u64,
    samples: usize,
    t: Vec<f64>,
    epsilon: f64,
    sampler: Sampler,
}

fn hybrid_settings(config: &RunConfig, over: &Overrides) -> Result<Hybrid, Failure> {
    let t = over.t.clone().or_else(|| config.t.clone()).unwrap_or_else(|| DEFAULT_T.to_vec());
    if t.is_empty() {
        return Err(invalid("the list of |t| values is empty"));
    }
    if let Some(bad) = t.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(invalid(format!("|t| = {bad} is outside (0, 1)")));
    }
    let samples = over.samples.or(config.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(invalid("sample count must be positive"));
    }
    let epsilon = over.epsilon.or(config.epsilon).unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid(format!("epsilon = {epsilon} is outside (0, 1/2)")));
    }
    let mut sampler = Sampler::default();
    if let Some(c) = config.chunk_size {
        sampler.chunk_size = c;
    }
    sampler.workers = config.workers;
    Ok(Hybrid { seed: over.seed.or(config.seed).unwrap_or(DEFAULT_SEED), samples, t, epsilon, sampler })
}

fn require<'a, T>(block: &'a Option<T>, name: &str, task: Task) -> Result<&'a T, Failure> {
    block.as_ref().ok_or_else(|| invalid(format!("task {task} requires a \"{name}\" block")))
}

fn fiber(config: &RunConfig, task: Task) -> Result<CentralFiber, Failure> {
    Ok(CentralFiber::try_from(require(&config.fiber, "fiber", task)?.clone())?)
}

fn pullback(input: &PullbackInput) -> Result<PullbackMatrix, Failure> {
    let m = PullbackMatrix::new(
        input.source_fiber.clone().try_into()?,
        input.target_fiber.clone().try_into()?,
        input.rows.clone(),
        input.cols.clone(),
        input.entries.clone(),
        input.stratum_map.clone(),
    )?;
    validate_pullback(&m)?;
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupOutput {
    pub fiber: CentralFiber,
    pub pullback: PullbackMatrix,
}

/// Runs one task on a parsed configuration.
pub fn execute(task: Task, config: &RunConfig, over: &Overrides) -> Result<Artifact, Failure> {
    if let Some(declared) = config.task {
        if declared != task {
            return Err(invalid(format!("config is for task {declared}, not {task}")));
        }
    }
    match task {
        Task::DualComplex => json(&build_dual_complex(&fiber(config, task)?)?),
        Task::MaMeasure => {
            let pol = require(&config.polarization, "polarization", task)?;
            let pol = ModelPolarization::new(exact(pol.degrees.clone()), pol.total_degree.0.clone());
            let mu: ExactMeasure = monge_ampere(&fiber(config, task)?, &pol)?;
            json(&mu)
        }
        Task::CurveLimit => curve_limit(&fiber(config, task)?),
        Task::Skeleton => {
            let forms = require(&config.forms, "forms", task)?;
            let sk: EssentialSkeleton<Rational> = essential_skeleton(&fiber(config, task)?, forms)?;
            json(&sk)
        }
        Task::Retraction => retraction(config, task),
        Task::Blowup => {
            let stratum = *require(&config.stratum, "stratum", task)?;
            let (fiber, pullback) = blow_up_stratum(&fiber(config, task)?, stratum)?;
            json(&BlowupOutput { fiber, pullback })
        }
        Task::HybridSim => hybrid_sim(config, over),
        Task::ChartCheck => chart_check(config, over),
    }
}

fn curve_limit(fiber: &CentralFiber) -> Result<Artifact, Failure> {
    let mu: ExactMeasure = curve_canonical_measure(fiber)?;
    let val = curve_valences(fiber);
    let g = curve_genus(fiber)?;
    let header = ["vertex", "genus", "valence", "mass"].map(String::from);
    let mut rows: Vec<Vec<String>> = fiber
        .components()
        .iter()
        .map(|c| {
            vec![
                c.id.0.to_string(),
                c.genus.expect("checked by the measure").to_string(),
                val[&c.id].to_string(),
                mu.mass(c.id).to_string(),
            ]
        })
        .collect();
    rows.push(vec!["total".into(), g.to_string(), String::new(), mu.total_mass().to_string()]);
    csv_artifact(&header, &rows)
}

fn retraction(config: &RunConfig, task: Task) -> Result<Artifact, Failure> {
    let input = require(&config.point, "point", task)?;
    let p: ExactPoint = ComplexPoint::new(input.stratum, exact(input.weights.clone()));
    let composed = match (&config.pullbacks, &config.blowups) {
        (Some(_), Some(_)) => return Err(invalid("give either \"pullbacks\" or \"blowups\", not both")),
        (Some(list), None) => {
            let mut maps = list.iter().map(pullback);
            let first = maps.next().expect("schema requires one pullback")?;
            maps.try_fold(first, |acc, m| compose_pullbacks(&acc, &m?).map_err(Failure::from))?
        }
        (None, Some(centers)) => {
            let mut current = fiber(config, task)?;
            let mut acc: Option<PullbackMatrix> = None;
            for s in centers {
                let (next, m) = blow_up_stratum(&current, *s)?;
                acc = Some(match acc {
                    None => m,
                    Some(a) => compose_pullbacks(&a, &m)?,
                });
                current = next;
            }
            acc.expect("schema requires one center")
        }
        (None, None) => return Err(invalid("task retraction requires \"pullbacks\" or \"blowups\"")),
    };
    json(&retract(&composed, &p)?)
}

fn default_target(family: &FamilySpec) -> ConvergenceTarget {
    match family {
        FamilySpec::ComponentConcentrated { component } => {
            ConvergenceTarget::Atomic(AtomicMeasure::dirac(*component, 1.0).expect("unit mass"))
        }
        FamilySpec::EdgeUniform => ConvergenceTarget::EdgeLebesgue { stratum: gallery::NODE },
        FamilySpec::TwoComponent { lambda } => ConvergenceTarget::Atomic(
            AtomicMeasure::new([(ComponentId(1), *lambda), (ComponentId(2), 1.0 - *lambda)]).expect("masses in [0, 1]"),
        ),
    }
}

fn target(input: &Option<TargetInput>, family: &FamilySpec) -> Result<ConvergenceTarget, Failure> {
    Ok(match input {
        None => default_target(family),
        Some(TargetInput::Dirac { component }) => ConvergenceTarget::Atomic(AtomicMeasure::dirac(*component, 1.0)?),
        Some(TargetInput::Atomic { masses }) => {
            let exact_masses: ExactMeasure = AtomicMeasure::new(exact(
                masses.iter().map(|(k, v)| (*k, v.clone())).collect(),
            ))?;
            ConvergenceTarget::Atomic(exact_masses.to_f64())
        }
        Some(TargetInput::EdgeLebesgue) => ConvergenceTarget::EdgeLebesgue { stratum: gallery::NODE },
    })
}

fn reject_fiber(config: &RunConfig, task: Task) -> Result<(), Failure> {
    if config.fiber.is_some() {
        return Err(invalid(format!("task {task} runs on the built-in node chart z1 z2 = t and takes no \"fiber\"")));
    }
    Ok(())
}

fn first_coordinate_range(mu: &EmpiricalMeasure) -> (f64, f64) {
    mu.atoms
        .iter()
        .map(|(p, _)| p.weight(ComponentId(1)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)))
}

/// Runs the sampling pipeline and returns the measures with their report.
pub fn hybrid_pipeline(
    config: &RunConfig,
    over: &Overrides,
) -> Result<(Vec<(f64, EmpiricalMeasure)>, nadegen_core::hybrid::ConvergenceReport), Failure> {
    reject_fiber(config, Task::HybridSim)?;
    let family = require(&config.family, "family", Task::HybridSim)?;
    let s = hybrid_settings(config, over)?;
    let target = target(&config.target, family)?;
    let seq = simulate(family, &s.t, s.samples, s.seed, &s.sampler)?;
    let complex = build_dual_complex(&gallery::node_fiber())?;
    let report = convergence_report(&complex, &seq, &target, s.epsilon)?;
    Ok((seq, report))
}

fn hybrid_sim(config: &RunConfig, over: &Overrides) -> Result<Artifact, Failure> {
    let (seq, report) = hybrid_pipeline(config, over)?;
    let mut header: Vec<String> = ["t_abs", "samples", "epsilon", "total_mass", "w1_min", "w1_max"].map(String::from).to_vec();
    let vertices: Vec<ComponentId> = report.rows[0].vertex_fractions.keys().copied().collect();
    for v in &vertices {
        header.push(format!("mass_fraction_within_eps_maxcoord_of_v{}", v.0));
    }
    let atomic = report.rows[0].wasserstein.is_some();
    if atomic {
        header.push("wasserstein1_unit_edge_barycentric_path_metric".into());
    } else {
        header.push("ks_first_barycentric_vs_uniform01".into());
    }
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .zip(&seq)
        .map(|(row, (_, mu))| {
            let (lo, hi) = first_coordinate_range(mu);
            let mut out = vec![
                float(row.t_abs),
                row.atoms.to_string(),
                float(report.epsilon),
                float(row.total_mass),
                float(lo),
                float(hi),
            ];
            out.extend(vertices.iter().map(|v| float(row.vertex_fractions[v])));
            out.push(float(row.wasserstein.or(row.kolmogorov_smirnov).expect("one statistic per target")));
            out
        })
        .collect();
    csv_artifact(&header, &rows)
}

fn chart_check(config: &RunConfig, over: &Overrides) -> Result<Artifact, Failure> {
    reject_fiber(config, Task::ChartCheck)?;
    let units = require(&config.units, "units", Task::ChartCheck)?;
    let family = config.family.clone().unwrap_or(FamilySpec::EdgeUniform);
    let s = hybrid_settings(config, over)?;
    let chart = AdaptedChart::node();
    let seq_samples: Vec<(f64, Vec<Vec<Complex64>>)> = s
        .t
        .iter()
        .map(|&t| Ok((t, s.sampler.sample(&family, Complex64::new(t, 0.0), s.samples, s.seed)?)))
        .collect::<Result<_, nadegen_core::Error>>()?;
    let mut batches = Vec::new();
    let mut discarded = Vec::new();
    for (k, (t, samples)) in seq_samples.into_iter().enumerate() {
        let all = match units {
            UnitsInput::Constant { values, lower, upper } => {
                if values.len() != chart.arity() {
                    return Err(invalid(format!("chart has {} coordinates but {} units are given", chart.arity(), values.len())));
                }
                let u: Vec<Complex64> = values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                UnitFactors::constant(&u, *lower, *upper, samples.len())
            }
            UnitsInput::Random { lower, upper } => {
                UnitFactors::random(chart.arity(), *lower, *upper, samples.len(), s.seed.wrapping_add(k as u64 + 1))?
            }
        };
        let (kept, units_kept): (Vec<_>, Vec<_>) = samples
            .into_iter()
            .zip(all.values)
            .filter(|(z, u)| UnitFactors::keeps_in_chart(u, z))
            .unzip();
        discarded.push(s.samples - kept.len());
        if kept.is_empty() {
            return Err(invalid(format!("no sample at |t| = {t} stays in the primed chart")));
        }
        batches.push((t, kept, UnitFactors { lower: all.lower, upper: all.upper, values: units_kept }));
    }
    let rows = chart_compatibility_check(&chart, &batches)?;
    let header = ["t_abs", "samples_used", "samples_discarded", "delta_maxcoord", "log_inverse_f", "product"].map(String::from);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .zip(&batches)
        .zip(&discarded)
        .map(|((r, (_, kept, _)), d)| {
            vec![float(r.t_abs), kept.len().to_string(), d.to_string(), float(r.delta), float(r.log_inverse_equation), float(r.product)]
        })
        .collect();
    csv_artifact(&header, &rows)
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let fail = |e: std::io::Error| Failure::Output(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn run_cli(cli: &Cli) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| invalid(format!("cannot read {}: {e}", cli.config.display())))?;
    let config = parse_config(&text)?;
    let artifact = execute(cli.task, &config, &Overrides::from(cli))?;
    match cli.out.as_ref().or(config.output.as_ref()) {
        Some(path) => write_atomically(path, &artifact.bytes),
        None => std::io::stdout().write_all(&artifact.bytes).map_err(|e| Failure::Output(e.to_string())),
    }
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                print!("{e}");
            } else {
                let first = e.to_string().lines().next().unwrap_or("bad arguments").to_string();
                eprintln!("nadegen: invalid invocation: {}", first.trim_start_matches("error: "));
            }
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("nadegen: {f}");
            f.exit_code()
        }
    }
}
