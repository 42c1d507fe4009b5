//! Independent checks on a finished trace.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use super::SimResult;
use crate::task::TaskSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("processor {processor} runs two segments at {time}")]
    Overlap { processor: usize, time: u64 },
    #[error("job {job} subtask {subtask} runs before it is ready or after it finishes")]
    Precedence { job: usize, subtask: usize },
    #[error("job {job} subtask {subtask} runs on two processors at {time}")]
    SelfParallel { job: usize, subtask: usize, time: u64 },
    #[error("job {job} subtask {subtask} ran {ran} units, expected {exec}")]
    ExecMismatch {
        job: usize,
        subtask: usize,
        ran: u64,
        exec: u64,
    },
    #[error("job {job} completion does not match its last subtask")]
    Completion { job: usize },
    #[error("a subtask waits at {time} while a processor is idle")]
    Idle { time: u64 },
    #[error("a subtask waits at {time} while lower-priority work runs")]
    PriorityInversion { time: u64 },
}

type Key = (usize, usize, usize);

/// Check processor exclusivity, precedence, execution totals, work
/// conservation and priority order.
pub fn audit(taskset: &TaskSet, result: &SimResult) -> Result<(), AuditError> {
    let m = result.processors;
    let mut by_proc: Vec<Vec<(u64, u64)>> = vec![Vec::new(); m];
    for s in &result.segments {
        by_proc[s.processor].push((s.start, s.end));
    }
    for (processor, segs) in by_proc.iter_mut().enumerate() {
        segs.sort_unstable();
        if let Some(w) = segs.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(AuditError::Overlap {
                processor,
                time: w[1].0,
            });
        }
    }

    let mut runs: Vec<Vec<Vec<(u64, u64)>>> = result.jobs.iter().map(|j| vec![Vec::new(); j.exec.len()]).collect();
    for s in &result.segments {
        runs[s.job][s.subtask].push((s.start, s.end));
    }

    // Pending interval [ready, finish) of every subtask.
    let mut pending: Vec<(u64, u64, Key)> = Vec::new();
    for (ji, job) in result.jobs.iter().enumerate() {
        let dag = taskset.tasks[job.task].dag();
        for v in 0..dag.len() {
            let ready = dag.preds(v).iter().map(|&u| job.finish[u]).max().unwrap_or(job.release);
            let rs = &mut runs[ji][v];
            rs.sort_unstable();
            if let Some(w) = rs.windows(2).find(|w| w[1].0 < w[0].1) {
                return Err(AuditError::SelfParallel {
                    job: ji,
                    subtask: v,
                    time: w[1].0,
                });
            }
            let ran: u64 = rs.iter().map(|&(a, b)| b - a).sum();
            if ran != job.exec[v] {
                return Err(AuditError::ExecMismatch {
                    job: ji,
                    subtask: v,
                    ran,
                    exec: job.exec[v],
                });
            }
            if rs.first().is_some_and(|r| r.0 < ready) || rs.last().is_some_and(|r| r.1 != job.finish[v]) {
                return Err(AuditError::Precedence { job: ji, subtask: v });
            }
            pending.push((ready, job.finish[v], (job.task, job.seq, v)));
        }
        if job.finish.iter().max() != Some(&job.completion) {
            return Err(AuditError::Completion { job: ji });
        }
    }

    let mut running: Vec<(u64, u64, Key)> = result
        .segments
        .iter()
        .map(|s| {
            let j = &result.jobs[s.job];
            (s.start, s.end, (j.task, j.seq, s.subtask))
        })
        .collect();
    pending.sort_unstable();
    running.sort_unstable();

    let mut times: Vec<u64> = pending.iter().flat_map(|p| [p.0, p.1]).collect();
    times.extend(running.iter().flat_map(|r| [r.0, r.1]));
    times.sort_unstable();
    times.dedup();

    let (mut pi, mut ri) = (0, 0);
    let mut pend_set: BTreeSet<Key> = BTreeSet::new();
    let mut pend_end: BinaryHeap<Reverse<(u64, Key)>> = BinaryHeap::new();
    let mut run_set: BTreeSet<Key> = BTreeSet::new();
    let mut run_end: BinaryHeap<Reverse<(u64, Key)>> = BinaryHeap::new();
    for &t in &times {
        while let Some(&Reverse((e, k))) = pend_end.peek() {
            if e > t {
                break;
            }
            pend_end.pop();
            pend_set.remove(&k);
        }
        while let Some(&Reverse((e, k))) = run_end.peek() {
            if e > t {
                break;
            }
            run_end.pop();
            run_set.remove(&k);
        }
        while pi < pending.len() && pending[pi].0 <= t {
            let (_, e, k) = pending[pi];
            if e > t {
                pend_set.insert(k);
                pend_end.push(Reverse((e, k)));
            }
            pi += 1;
        }
        while ri < running.len() && running[ri].0 <= t {
            let (_, e, k) = running[ri];
            if e > t {
                run_set.insert(k);
                run_end.push(Reverse((e, k)));
            }
            ri += 1;
        }
        let Some(waiting) = pend_set.iter().find(|k| !run_set.contains(k)) else {
            continue;
        };
        if run_set.len() < m {
            return Err(AuditError::Idle { time: t });
        }
        if run_set.last().is_some_and(|r| r > waiting) {
            return Err(AuditError::PriorityInversion { time: t });
        }
    }
    Ok(())
}
