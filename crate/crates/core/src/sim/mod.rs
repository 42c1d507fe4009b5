//! Event-driven simulation of preemptive global fixed-priority scheduling.
//!
//! Time is integral and events happen only at releases and completions.
//! At every event the `m` highest-priority ready subtasks run, ordered by
//! task index, then job release order, then subtask id. A subtask that stays
//! selected keeps its processor.

mod audit;
mod chain;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::TaskSet;

pub use audit::{audit, AuditError};
pub use chain::{critical_chain, critical_interference, interference_intervals, task_interference, ChainError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReleasePolicy {
    /// Every task releases at 0, T, 2T, ...
    Periodic,
    /// First release uniform in `[0, ⌊T/2⌋]`, then gaps uniform in
    /// `[T, T + ⌊T/2⌋]`.
    Sporadic,
    /// Explicit release times per task; gaps must be at least the period.
    Scripted(Vec<Vec<u64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecPolicy {
    FullWcet,
    /// Each subtask runs for a uniform time in `[1, WCET]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Jobs are released strictly before this instant; all of them then run
    /// to completion.
    pub horizon: u64,
    pub release: ReleasePolicy,
    pub exec: ExecPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("horizon {horizon} is shorter than the largest period {max_period}")]
    HorizonTooShort { horizon: u64, max_period: u64 },
    #[error("scripted releases given for {got} tasks, expected {expected}")]
    ScriptLength { expected: usize, got: usize },
    #[error("scripted releases of task {task} are closer than its period")]
    ScriptGap { task: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Job {
    pub task: usize,
    /// Release order within the task.
    pub seq: usize,
    pub release: u64,
    pub deadline: u64,
    pub exec: Vec<u64>,
    pub finish: Vec<u64>,
    pub completion: u64,
}

impl Job {
    pub fn response(&self) -> u64 {
        self.completion - self.release
    }
}

/// One uninterrupted run of a subtask on a processor, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub processor: usize,
    pub job: usize,
    pub task: usize,
    pub subtask: usize,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub processors: usize,
    pub jobs: Vec<Job>,
    pub segments: Vec<Segment>,
}

impl SimResult {
    pub fn max_response(&self, task: usize) -> Option<u64> {
        self.jobs.iter().filter(|j| j.task == task).map(Job::response).max()
    }

    /// Segments as JSON lines.
    pub fn write_trace(&self, mut out: impl Write) -> std::io::Result<()> {
        for s in &self.segments {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

struct Active {
    job: usize,
    remaining: Vec<u64>,
    waiting_on: Vec<usize>,
    left: usize,
}

fn release_times(taskset: &TaskSet, config: &SimConfig, rng: &mut impl Rng) -> Result<Vec<Vec<u64>>, SimError> {
    let horizon = config.horizon;
    match &config.release {
        ReleasePolicy::Periodic => Ok(taskset
            .tasks
            .iter()
            .map(|t| (0..horizon).step_by(t.period() as usize).collect())
            .collect()),
        ReleasePolicy::Sporadic => Ok(taskset
            .tasks
            .iter()
            .map(|t| {
                let p = t.period();
                let mut out = Vec::new();
                let mut r = rng.random_range(0..=p / 2);
                while r < horizon {
                    out.push(r);
                    r += p + rng.random_range(0..=p / 2);
                }
                out
            })
            .collect()),
        ReleasePolicy::Scripted(times) => {
            if times.len() != taskset.len() {
                return Err(SimError::ScriptLength {
                    expected: taskset.len(),
                    got: times.len(),
                });
            }
            for (i, ts) in times.iter().enumerate() {
                if ts.windows(2).any(|w| w[1] < w[0] + taskset.tasks[i].period()) {
                    return Err(SimError::ScriptGap { task: i });
                }
            }
            Ok(times
                .iter()
                .map(|ts| ts.iter().copied().filter(|&r| r < horizon).collect())
                .collect())
        }
    }
}

pub fn simulate(taskset: &TaskSet, config: &SimConfig, rng: &mut impl Rng) -> Result<SimResult, SimError> {
    let max_period = taskset.max_period();
    if config.horizon < max_period {
        return Err(SimError::HorizonTooShort {
            horizon: config.horizon,
            max_period,
        });
    }
    let m = taskset.processors as usize;
    let releases = release_times(taskset, config, rng)?;
    let mut next_release = vec![0usize; taskset.len()];

    let mut jobs: Vec<Job> = Vec::new();
    let mut active: Vec<Active> = Vec::new();
    let mut segments = Vec::new();
    // (active slot's job index, subtask, segment start)
    let mut running: Vec<Option<(usize, usize, u64)>> = vec![None; m];
    let mut t = 0u64;

    loop {
        for (i, task) in taskset.tasks.iter().enumerate() {
            while next_release[i] < releases[i].len() && releases[i][next_release[i]] == t {
                let dag = task.dag();
                let exec: Vec<u64> = dag
                    .wcets()
                    .iter()
                    .map(|&w| match config.exec {
                        ExecPolicy::FullWcet => w,
                        ExecPolicy::Uniform => rng.random_range(1..=w),
                    })
                    .collect();
                let n = dag.len();
                active.push(Active {
                    job: jobs.len(),
                    remaining: exec.clone(),
                    waiting_on: (0..n).map(|v| dag.preds(v).len()).collect(),
                    left: n,
                });
                jobs.push(Job {
                    task: i,
                    seq: next_release[i],
                    release: t,
                    deadline: t + task.deadline(),
                    exec,
                    finish: vec![0; n],
                    completion: 0,
                });
                next_release[i] += 1;
            }
        }

        let mut ready: Vec<(usize, usize, usize, usize)> = Vec::new();
        for a in &active {
            let job = &jobs[a.job];
            for v in 0..a.remaining.len() {
                if a.waiting_on[v] == 0 && a.remaining[v] > 0 {
                    ready.push((job.task, job.seq, v, a.job));
                }
            }
        }
        ready.sort_unstable();
        ready.truncate(m);
        let chosen: Vec<(usize, usize)> = ready.iter().map(|&(_, _, v, j)| (j, v)).collect();

        for p in 0..m {
            if let Some((j, v, start)) = running[p] {
                if !chosen.contains(&(j, v)) {
                    if start < t {
                        segments.push(Segment {
                            processor: p,
                            job: j,
                            task: jobs[j].task,
                            subtask: v,
                            start,
                            end: t,
                        });
                    }
                    running[p] = None;
                }
            }
        }
        for &(j, v) in &chosen {
            if running.iter().flatten().any(|&(rj, rv, _)| (rj, rv) == (j, v)) {
                continue;
            }
            let p = running
                .iter()
                .position(Option::is_none)
                .expect("at most m subtasks chosen");
            running[p] = Some((j, v, t));
        }

        let slot = |j: usize, active: &[Active]| active.iter().position(|a| a.job == j).expect("running job is active");
        let next_rel = (0..taskset.len())
            .filter_map(|i| releases[i].get(next_release[i]).copied())
            .min();
        let next_fin = running
            .iter()
            .flatten()
            .map(|&(j, v, _)| t + active[slot(j, &active)].remaining[v])
            .min();
        let Some(t_next) = [next_rel, next_fin].into_iter().flatten().min() else {
            break;
        };

        let dt = t_next - t;
        for p in 0..m {
            let Some((j, v, start)) = running[p] else { continue };
            let s = slot(j, &active);
            let a = &mut active[s];
            a.remaining[v] -= dt;
            if a.remaining[v] > 0 {
                continue;
            }
            segments.push(Segment {
                processor: p,
                job: j,
                task: jobs[j].task,
                subtask: v,
                start,
                end: t_next,
            });
            running[p] = None;
            jobs[j].finish[v] = t_next;
            for &w in taskset.tasks[jobs[j].task].dag().succs(v) {
                a.waiting_on[w] -= 1;
            }
            a.left -= 1;
            if a.left == 0 {
                jobs[j].completion = t_next;
                active.swap_remove(s);
            }
        }
        t = t_next;
    }

    segments.sort_by_key(|s| (s.start, s.processor));
    Ok(SimResult {
        processors: m,
        jobs,
        segments,
    })
}
