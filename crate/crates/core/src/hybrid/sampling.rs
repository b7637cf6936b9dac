//! Built-in families on the node chart `z_1 z_2 = t` and deterministic parallel sampling.
//!
//! Samples are drawn in fixed-size chunks; chunk `k` uses its own ChaCha stream
//! `k` under the run seed, and chunks are concatenated in order. The output is
//! therefore a function of `(family, t, n, seed, chunk_size)` alone, whatever the
//! number of worker threads.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::ComponentId;

/// One point of a fiber `X_t`, in chart coordinates.
pub type Sample = Vec<Complex64>;

pub const DEFAULT_CHUNK_SIZE: usize = 4096;

fn second() -> ComponentId {
    ComponentId(2)
}

/// Synthetic families of probability measures on the fibers near the node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// Mass stays in a compact subset of `D_i° × (annulus)`: the coordinate of
    /// the other component has modulus uniform in `[1/2, 3/4]` and the
    /// coordinate of `D_i` equals `t` divided by it. The hybrid limit is `δ_{v_i}`.
    ComponentConcentrated {
        #[serde(default = "second")]
        component: ComponentId,
    },
    /// `|z_1| = |t|^U` with `U` uniform on `(0, 1)`: mass escapes into the node
    /// and the hybrid limit is Lebesgue measure on the edge.
    EdgeUniform,
    /// With probability `lambda` a concentrated sample on `D_1`, else on `D_2`.
    TwoComponent { lambda: f64 },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::ComponentConcentrated { .. } => "component-concentrated",
            FamilySpec::EdgeUniform => "edge-uniform",
            FamilySpec::TwoComponent { .. } => "two-component",
        }
    }

    fn check(&self, t_abs: f64) -> Result<()> {
        if !(t_abs > 0.0 && t_abs < 1.0) {
            return Err(Error::InvalidT(t_abs));
        }
        match self {
            FamilySpec::ComponentConcentrated { component } => {
                if *component != ComponentId(1) && *component != ComponentId(2) {
                    return Err(Error::UnknownComponent(*component));
                }
                // |t| / |z| < 1 for |z| ≥ 1/2
                if t_abs >= 0.5 {
                    return Err(Error::InvalidT(t_abs));
                }
            }
            FamilySpec::TwoComponent { lambda } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::MixtureWeight(*lambda));
                }
                if t_abs >= 0.5 {
                    return Err(Error::InvalidT(t_abs));
                }
            }
            FamilySpec::EdgeUniform => {}
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R, t: Complex64) -> Sample {
        match self {
            FamilySpec::ComponentConcentrated { component } => concentrated(rng, t, *component),
            FamilySpec::EdgeUniform => {
                let u: f64 = rng.sample(rand::distributions::Open01);
                let z1 = Complex64::from_polar(t.norm().powf(u), rng.gen_range(0.0..TAU));
                vec![z1, t / z1]
            }
            FamilySpec::TwoComponent { lambda } => {
                let on = if rng.gen_bool(*lambda) { ComponentId(1) } else { ComponentId(2) };
                concentrated(rng, t, on)
            }
        }
    }
}

fn concentrated<R: Rng>(rng: &mut R, t: Complex64, component: ComponentId) -> Sample {
    let free = Complex64::from_polar(rng.gen_range(0.5..=0.75), rng.gen_range(0.0..TAU));
    let small = t / free;
    if component == ComponentId(2) {
        vec![free, small]
    } else {
        vec![small, free]
    }
}

/// Chunked sampler; `workers = None` uses the global rayon pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampler {
    pub chunk_size: usize,
    pub workers: Option<usize>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { chunk_size: DEFAULT_CHUNK_SIZE, workers: None }
    }
}

impl Sampler {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers: Some(workers), ..Self::default() }
    }

    pub fn sample(&self, family: &FamilySpec, t: Complex64, n_samples: usize, seed: u64) -> Result<Vec<Sample>> {
        family.check(t.norm())?;
        if n_samples == 0 {
            return Err(Error::NoSamples);
        }
        let chunk = self.chunk_size.max(1);
        let chunks = n_samples.div_ceil(chunk);
        let run = || {
            (0..chunks)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let len = chunk.min(n_samples - k * chunk);
                    (0..len).map(|_| family.draw(&mut rng, t)).collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let parts = match self.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Transport(e.to_string()))?
                .install(run),
            None => run(),
        };
        Ok(parts.into_iter().flatten().collect())
    }
}

/// Draws `n_samples` points of `X_t` from a built-in family.
pub fn sample_family(family: &FamilySpec, t: Complex64, n_samples: usize, seed: u64) -> Result<Vec<Sample>> {
    Sampler::default().sample(family, t, n_samples, seed)
}
