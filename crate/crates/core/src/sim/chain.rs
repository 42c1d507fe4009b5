//! Critical chains and critical interference measured on a trace.

use thiserror::Error;

use super::SimResult;
use crate::task::TaskSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("no job {0} in the trace")]
    NoSuchJob(usize),
    #[error("chain does not match the trace: {0}")]
    Mismatch(String),
}

fn last_completing(finish: &[u64], candidates: &[usize]) -> Option<usize> {
    // Lowest id wins ties.
    candidates
        .iter()
        .copied()
        .max_by(|&a, &b| finish[a].cmp(&finish[b]).then(b.cmp(&a)))
}

/// Walk back from the last-completing subtask through last-completing
/// predecessors; returned in execution order.
pub fn critical_chain(taskset: &TaskSet, result: &SimResult, job: usize) -> Result<Vec<usize>, ChainError> {
    let j = result.jobs.get(job).ok_or(ChainError::NoSuchJob(job))?;
    let dag = taskset.tasks[j.task].dag();
    let all: Vec<usize> = (0..dag.len()).collect();
    let mut v = last_completing(&j.finish, &all).expect("DAGs are non-empty");
    let mut chain = vec![v];
    while let Some(p) = last_completing(&j.finish, dag.preds(v)) {
        chain.push(p);
        v = p;
    }
    chain.reverse();
    Ok(chain)
}

/// Instants in the job's window where the chain's current subtask is ready
/// but not running, as sorted disjoint half-open intervals.
pub fn interference_intervals(
    taskset: &TaskSet,
    result: &SimResult,
    job: usize,
    chain: &[usize],
) -> Result<Vec<(u64, u64)>, ChainError> {
    let j = result.jobs.get(job).ok_or(ChainError::NoSuchJob(job))?;
    let dag = taskset.tasks[j.task].dag();
    let mismatch = |m: String| Err(ChainError::Mismatch(m));
    let (Some(&first), Some(&last)) = (chain.first(), chain.last()) else {
        return mismatch("empty chain".into());
    };
    if first >= dag.len() || !dag.preds(first).is_empty() {
        return mismatch(format!("{first} is not a source"));
    }
    if last >= dag.len() || j.finish[last] != j.completion {
        return mismatch(format!("{last} does not complete the job"));
    }

    let mut out: Vec<(u64, u64)> = Vec::new();
    let mut push = |a: u64, b: u64| {
        if a >= b {
            return;
        }
        match out.last_mut() {
            Some(prev) if prev.1 == a => prev.1 = b,
            _ => out.push((a, b)),
        }
    };
    let mut ready = j.release;
    for (idx, &v) in chain.iter().enumerate() {
        if idx > 0 {
            let p = chain[idx - 1];
            let latest = dag.preds(v).iter().map(|&u| j.finish[u]).max();
            if !dag.preds(v).contains(&p) || latest != Some(j.finish[p]) {
                return mismatch(format!("{p} is not a last-completing predecessor of {v}"));
            }
        }
        let mut runs: Vec<(u64, u64)> = result
            .segments
            .iter()
            .filter(|s| s.job == job && s.subtask == v)
            .map(|s| (s.start, s.end))
            .collect();
        runs.sort_unstable();
        let mut at = ready;
        for (s, e) in runs {
            push(at, s);
            at = e;
        }
        push(at, j.finish[v]);
        ready = j.finish[v];
    }
    Ok(out)
}

/// `I_k`: total length of the interference intervals.
pub fn critical_interference(intervals: &[(u64, u64)]) -> u64 {
    intervals.iter().map(|&(a, b)| b - a).sum()
}

/// `I_{i,k}`: processor time task `i` spends inside the intervals.
pub fn task_interference(result: &SimResult, intervals: &[(u64, u64)], task: usize) -> u64 {
    result
        .segments
        .iter()
        .filter(|s| s.task == task)
        .map(|s| {
            intervals
                .iter()
                .map(|&(a, b)| b.min(s.end).saturating_sub(a.max(s.start)))
                .sum::<u64>()
        })
        .sum()
}
