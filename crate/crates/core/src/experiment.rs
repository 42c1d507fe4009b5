//! Schedulability-ratio sweeps.
//!
//! Every task set gets its own seed derived from the master seed and its
//! position in the grid, so results do not depend on how the work is spread
//! across threads.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rta::{schedulability_test, Method};
use crate::taskgen::{assign_priorities_dm, gen_taskset, rng_from_seed, GenConfig, GenError};

pub const CSV_HEADER: &str = "point,method,ratio,n_sets,warnings,mean_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sweep {
    /// Fixed processor count, varying total utilization.
    Utilization { processors: u64, values: Vec<f64> },
    /// Total utilization `factor·m`, varying `m`.
    Processors { factor: f64, values: Vec<u64> },
}

impl Sweep {
    fn len(&self) -> usize {
        match self {
            Sweep::Utilization { values, .. } => values.len(),
            Sweep::Processors { values, .. } => values.len(),
        }
    }

    /// `(label, total utilization, m)` of grid point `i`.
    fn point(&self, i: usize) -> (String, f64, u64) {
        match self {
            Sweep::Utilization { processors, values } => (values[i].to_string(), values[i], *processors),
            Sweep::Processors { factor, values } => (values[i].to_string(), factor * values[i] as f64, values[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sweep: Sweep,
    #[serde(default = "GenConfig::desk")]
    pub generator: GenConfig,
    #[serde(default = "default_sets")]
    pub sets_per_point: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// When false the `mean_ms` column holds `-`, making the CSV a pure
    /// function of the spec.
    #[serde(default = "default_timing")]
    pub timing: bool,
}

fn default_sets() -> usize {
    100
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sets_per_point must be at least 1")]
    NoSets,
    #[error("no methods requested")]
    NoMethods,
    #[error("processor count must be positive")]
    NoProcessors,
    #[error(transparent)]
    Generator(#[from] GenError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub point: String,
    pub method: Method,
    pub ratio: f64,
    /// Task sets analyzed without error.
    pub n_sets: usize,
    pub warnings: usize,
    pub mean_ms: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sweep.len() == 0 {
            return Err(ExperimentError::EmptyGrid);
        }
        if self.sets_per_point == 0 {
            return Err(ExperimentError::NoSets);
        }
        if self.methods.is_empty() {
            return Err(ExperimentError::NoMethods);
        }
        if (0..self.sweep.len()).any(|i| self.sweep.point(i).2 == 0) {
            return Err(ExperimentError::NoProcessors);
        }
        self.generator.validate()?;
        Ok(())
    }
}

/// Seed of task set `index` at grid point `point`.
pub fn derive_seed(master: u64, point: usize, index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ point as u64) ^ index as u64)
}

/// Per-method outcome of one task set: `Some((schedulable, ms))` or `None`
/// on an analysis error.
type SetOutcome = Vec<Option<(bool, f64)>>;

fn run_set(spec: &ExperimentSpec, point: usize, index: usize) -> SetOutcome {
    let (_, util, m) = spec.sweep.point(point);
    let mut rng = rng_from_seed(derive_seed(spec.seed, point, index));
    let Ok(ts) = gen_taskset(util, m, &spec.generator, &mut rng) else {
        return vec![None; spec.methods.len()];
    };
    let ts = assign_priorities_dm(ts);
    spec.methods
        .iter()
        .map(|&method| {
            let started = Instant::now();
            let verdict = schedulability_test(&ts, method).ok()?.schedulable;
            Some((verdict, started.elapsed().as_secs_f64() * 1e3))
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ExperimentError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep.len())
        .flat_map(|p| (0..spec.sets_per_point).map(move |i| (p, i)))
        .collect();
    let outcomes: Vec<SetOutcome> = jobs.par_iter().map(|&(p, i)| run_set(spec, p, i)).collect();

    let mut rows = Vec::new();
    for (p, chunk) in outcomes.chunks(spec.sets_per_point).enumerate() {
        let (label, _, _) = spec.sweep.point(p);
        for (k, &method) in spec.methods.iter().enumerate() {
            let ok: Vec<(bool, f64)> = chunk.iter().filter_map(|o| o[k]).collect();
            let n_sets = ok.len();
            let passed = ok.iter().filter(|o| o.0).count();
            rows.push(ExperimentRow {
                point: label.clone(),
                method,
                ratio: if n_sets == 0 {
                    0.0
                } else {
                    passed as f64 / n_sets as f64
                },
                n_sets,
                warnings: chunk.len() - n_sets,
                mean_ms: (spec.timing && n_sets > 0).then(|| ok.iter().map(|o| o.1).sum::<f64>() / n_sets as f64),
            });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let ms = r.mean_ms.map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{},{}",
            r.point, r.method, r.ratio, r.n_sets, r.warnings, ms
        );
    }
    out
}

/// Points where DGA's ratio falls below MBB's.
pub fn dominance_violations(rows: &[ExperimentRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.method == Method::Dga)
        .filter(|d| {
            rows.iter()
                .any(|b| b.method == Method::Mbb && b.point == d.point && b.ratio > d.ratio)
        })
        .map(|d| d.point.clone())
        .collect()
}
