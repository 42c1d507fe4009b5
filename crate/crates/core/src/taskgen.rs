//! Random DAG tasks and task sets.
//!
//! Graphs follow `G(n, p)` over a random vertex ordering, so every edge
//! points forward and the result is acyclic; disconnected pieces are then
//! joined with the fewest extra edges. All randomness comes from the caller's
//! RNG, so a seed fixes the whole pipeline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::Dag;
use crate::task::{DagTask, TaskSet};

/// Relative tolerance on a generated task set's total utilization.
pub const UTIL_TOLERANCE: f64 = 1e-3;

const MAX_LAST_TASK_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub edge_prob: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub wcet_min: u64,
    pub wcet_max: u64,
    pub beta: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            edge_prob: 0.2,
            n_min: 10,
            n_max: 20,
            wcet_min: 1,
            wcet_max: 100,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("total utilization must be positive, got {0}")]
    Utilization(f64),
    #[error("could not match the requested utilization after {0} draws of the last task")]
    LastTask(usize),
}

impl GenConfig {
    /// Smaller graphs for quick runs.
    pub fn desk() -> Self {
        Self {
            n_min: 5,
            n_max: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.into()));
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return bad("edge_prob must lie in [0, 1]");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must lie in (0, 1]");
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad("n range must be non-empty and start at 1 or more");
        }
        if self.wcet_min == 0 || self.wcet_min > self.wcet_max {
            return bad("wcet range must be non-empty and start at 1 or more");
        }
        Ok(())
    }
}

fn find(parent: &mut [usize], v: usize) -> usize {
    let mut root = v;
    while parent[root] != root {
        root = parent[root];
    }
    let mut v = v;
    while parent[v] != root {
        let next = parent[v];
        parent[v] = root;
        v = next;
    }
    root
}

/// Random weakly connected DAG.
pub fn gen_dag(config: &GenConfig, rng: &mut impl Rng) -> Dag {
    let n = rng.random_range(config.n_min..=config.n_max);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(config.edge_prob) {
                edges.push((order[i], order[j]));
            }
        }
    }

    // Join components: each component, taken by its earliest position, gets
    // one edge from the latest earlier-positioned vertex already joined.
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut seen_roots = Vec::new();
    let mut joined = vec![false; n];
    let mut joined_root = None;
    for (pos, &v) in order.iter().enumerate() {
        let root = find(&mut parent, v);
        if seen_roots.contains(&root) {
            continue;
        }
        seen_roots.push(root);
        if let Some(jr) = joined_root {
            let src = order[..pos]
                .iter()
                .rev()
                .copied()
                .find(|&u| joined[find(&mut parent, u)])
                .expect("the first component precedes every other");
            edges.push((src, v));
            let r = find(&mut parent, v);
            parent[r] = jr;
        } else {
            joined_root = Some(root);
            joined[root] = true;
        }
        let jr = find(&mut parent, v);
        joined[jr] = true;
    }

    edges.sort_unstable();
    let wcets: Vec<u64> = (0..n)
        .map(|_| rng.random_range(config.wcet_min..=config.wcet_max))
        .collect();
    Dag::new(&wcets, &edges).expect("forward edges over a permutation form a DAG")
}

/// `L` if `T = L`, otherwise a normal sample around `(T + L)/2` redrawn
/// until it rounds into `[L, T]`.
fn draw_deadline(span: u64, period: u64, rng: &mut impl Rng) -> u64 {
    if period == span {
        return span;
    }
    let (l, t) = (span as f64, period as f64);
    let normal = Normal::new((t + l) / 2.0, (t - l) / 4.0).expect("positive standard deviation");
    loop {
        let d = normal.sample(rng).round();
        if d >= l && d <= t {
            return d as u64;
        }
    }
}

fn period_for(work: u64, span: u64, util: f64) -> u64 {
    ((work as f64 / util).round() as u64).max(span)
}

/// Utilization uniform in `[β, C/L]` (exactly `C/L` when that is below
/// `β`), period `round(C/U)` but at least `L`, and a sampled deadline.
pub fn gen_task(dag: Dag, config: &GenConfig, rng: &mut impl Rng) -> DagTask {
    let (c, l) = (dag.work(), dag.span());
    let ratio = c as f64 / l as f64;
    let util = if ratio <= config.beta {
        ratio
    } else {
        rng.random_range(config.beta..=ratio)
    };
    let period = period_for(c, l, util);
    let deadline = draw_deadline(l, period, rng);
    DagTask::new(dag, deadline, period).expect("generated timing is constrained")
}

/// Tasks are added until the total utilization reaches `total_util`; the
/// last task's period is then stretched so the total matches within
/// [`UTIL_TOLERANCE`] (the last task is redrawn if rounding prevents it).
/// Tasks are returned in generation order.
pub fn gen_taskset(total_util: f64, m: u64, config: &GenConfig, rng: &mut impl Rng) -> Result<TaskSet, GenError> {
    config.validate()?;
    if total_util.is_nan() || total_util <= 0.0 || total_util.is_infinite() {
        return Err(GenError::Utilization(total_util));
    }
    let mut tasks = Vec::new();
    let mut acc = 0.0;
    let mut last_draws = 0;
    loop {
        let task = gen_task(gen_dag(config, rng), config, rng);
        let u = task.utilization();
        if acc + u < total_util * (1.0 - UTIL_TOLERANCE) {
            acc += u;
            tasks.push(task);
            continue;
        }
        let need = total_util - acc;
        let period = period_for(task.work(), task.span(), need).max(task.period());
        let total = acc + task.work() as f64 / period as f64;
        if ((total - total_util) / total_util).abs() <= UTIL_TOLERANCE {
            let deadline = draw_deadline(task.span(), period, rng);
            tasks.push(
                task.with_timing(deadline, period)
                    .expect("stretched period keeps timing valid"),
            );
            break;
        }
        last_draws += 1;
        if last_draws >= MAX_LAST_TASK_DRAWS {
            return Err(GenError::LastTask(last_draws));
        }
    }
    Ok(TaskSet::new(tasks, m).expect("m validated by caller"))
}

/// Stable sort by relative deadline; ties keep generation order.
pub fn assign_priorities_dm(mut taskset: TaskSet) -> TaskSet {
    taskset.tasks.sort_by_key(DagTask::deadline);
    taskset
}

/// The RNG used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
