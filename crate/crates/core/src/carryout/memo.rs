//! Memoized carry-out bounds.
//!
//! The memo stores, per window length, an interval `[lb, ub]` known to
//! contain the model optimum. Intervals are combined with three facts about
//! the optimum `CO(Δ)`: it is non-decreasing in `Δ`, it grows by at most
//! the graph's width per time unit, and it never exceeds
//! `Σ_chains min(Δ, work(chain))` for any chain cover.

use std::collections::BTreeMap;
use std::sync::RwLock;

use super::model::{build_model, ModelOptions};
use super::solve::{solve_with, CarryOutError, Outcome, SolveOptions};
use crate::dag::Dag;
use crate::task::DagTask;

#[derive(Debug, Default)]
pub struct CarryOutMemo {
    inner: RwLock<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    cover: Option<Vec<u64>>,
    entries: BTreeMap<u64, (u64, u64)>,
    solves: u64,
    nodes: u64,
}

/// Counters of the work done behind a task's memo.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoStats {
    pub entries: usize,
    pub solves: u64,
    pub nodes: u64,
}

/// Works of a greedy chain cover over the positive-WCET vertices; each
/// chain is a path in the transitive closure.
pub fn chain_cover(dag: &Dag) -> Vec<u64> {
    let n = dag.len();
    let topo = dag.topological_order();
    // reach[v] = set of ancestors of v
    let mut ancestors = vec![vec![false; n]; n];
    for &v in topo {
        for &p in dag.preds(v) {
            ancestors[v][p] = true;
            for u in 0..n {
                if ancestors[p][u] {
                    ancestors[v][u] = true;
                }
            }
        }
    }
    let mut covered: Vec<bool> = (0..n).map(|v| dag.wcet(v) == 0).collect();
    let mut chains = Vec::new();
    while covered.iter().any(|c| !c) {
        let mut best = vec![0u64; n];
        let mut top = (0u64, usize::MAX);
        for &v in topo {
            if covered[v] {
                continue;
            }
            let before = (0..n)
                .filter(|&u| ancestors[v][u] && !covered[u])
                .map(|u| best[u])
                .max()
                .unwrap_or(0);
            best[v] = before + dag.wcet(v);
            if best[v] > top.0 {
                top = (best[v], v);
            }
        }
        // Walk the chain back and mark it.
        let (total, mut v) = top;
        let mut need = total;
        loop {
            covered[v] = true;
            need -= dag.wcet(v);
            if need == 0 {
                break;
            }
            v = (0..n)
                .filter(|&u| ancestors[v][u] && !covered[u] && best[u] == need)
                .max_by_key(|&u| topo.iter().position(|&t| t == u))
                .expect("chain predecessor exists");
        }
        chains.push(total);
    }
    chains.sort_unstable_by(|a, b| b.cmp(a));
    chains
}

impl CarryOutMemo {
    fn bounds(&self, task: &DagTask, delta: u64) -> (u64, u64) {
        let c = task.work();
        if delta == 0 {
            return (0, 0);
        }
        if delta >= task.span() {
            return (c, c);
        }
        {
            let inner = self.inner.read().expect("memo lock");
            if let Some(cover) = &inner.cover {
                return Self::infer(&inner.entries, cover, task, delta);
            }
        }
        let cover = chain_cover(task.dag());
        let mut inner = self.inner.write().expect("memo lock");
        let inner = &mut *inner;
        let cover = inner.cover.get_or_insert(cover);
        Self::infer(&inner.entries, cover, task, delta)
    }

    fn infer(entries: &BTreeMap<u64, (u64, u64)>, cover: &[u64], task: &DagTask, delta: u64) -> (u64, u64) {
        let width = cover.len() as u64;
        let mut ub = cover.iter().map(|&w| w.min(delta)).sum::<u64>().min(task.work());
        // The full-WCET schedule is one candidate.
        let dag = task.dag();
        let mut lb: u64 = task
            .wcet_start_times()
            .iter()
            .enumerate()
            .map(|(v, &s)| dag.wcet(v).min(delta.saturating_sub(s)))
            .sum();
        for (&d, &(elb, eub)) in entries.range(..=delta) {
            lb = lb.max(elb);
            ub = ub.min(eub.saturating_add(width * (delta - d)));
        }
        for (_, &(_, eub)) in entries.range(delta..) {
            ub = ub.min(eub);
        }
        (lb, ub.max(lb))
    }

    fn record(&self, delta: u64, lb: u64, ub: u64, nodes: usize) {
        let mut inner = self.inner.write().expect("memo lock");
        inner.solves += 1;
        inner.nodes += nodes as u64;
        let e = inner.entries.entry(delta).or_insert((lb, ub));
        e.0 = e.0.max(lb);
        e.1 = e.1.min(ub);
    }

    pub fn stats(&self) -> MemoStats {
        let inner = self.inner.read().expect("memo lock");
        MemoStats {
            entries: inner.entries.len(),
            solves: inner.solves,
            nodes: inner.nodes,
        }
    }
}

/// `min(OBJ, m·Δ)` for the task's carry-out model with window `delta`.
pub fn carry_out_bound(task: &DagTask, delta: u64, m: u64) -> Result<u64, CarryOutError> {
    Ok(carry_out_above(task, delta, m, None)?.expect("no threshold always yields a value"))
}

/// Cheap upper bound on [`carry_out_bound`] that never solves a model.
pub fn carry_out_upper(task: &DagTask, delta: u64, m: u64) -> u64 {
    let (_, ub) = task.memo().bounds(task, delta);
    ub.min(m.saturating_mul(delta))
}

/// [`carry_out_bound`] if it exceeds `threshold`, `None` if it provably does not.
pub fn carry_out_above(
    task: &DagTask,
    delta: u64,
    m: u64,
    threshold: Option<u64>,
) -> Result<Option<u64>, CarryOutError> {
    let memo = task.memo();
    let cap = task.work().min(m.saturating_mul(delta));
    let passes = |v: u64| threshold.is_none_or(|t| v > t);
    loop {
        let (lb, ub) = memo.bounds(task, delta);
        let (lbc, ubc) = (lb.min(cap), ub.min(cap));
        if !passes(ubc) {
            return Ok(None);
        }
        if lbc == ubc {
            return Ok(Some(lbc));
        }
        // Only assignments above `cutoff` matter: either the caller does not
        // care about smaller values or they are ruled out by `lb`.
        let mut cutoff = lb.checked_sub(1);
        if let Some(t) = threshold {
            cutoff = Some(cutoff.map_or(t, |c| c.max(t)));
        }
        let model = build_model(task.dag(), delta, ModelOptions::default())?;
        let r = solve_with(
            &model,
            SolveOptions {
                stop_at: Some(cap),
                cutoff,
            },
        )?;
        match r.outcome {
            Outcome::Optimal => memo.record(delta, r.objective, r.objective, r.stats.nodes),
            Outcome::AtLeast => memo.record(delta, r.objective, ub, r.stats.nodes),
            Outcome::AtMostCutoff => {
                if r.objective < lb {
                    return Err(CarryOutError::Verification(format!(
                        "model optimum below the known lower bound {lb} at window {delta}"
                    )));
                }
                memo.record(delta, lb, r.objective, r.stats.nodes)
            }
        }
    }
}

pub fn memo_stats(task: &DagTask) -> MemoStats {
    task.memo().stats()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carryout::solve::brute_force_oracle;

    fn fig_like() -> DagTask {
        let dag = Dag::new(
            &[2, 4, 2, 2, 1, 2],
            &[(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (4, 5)],
        )
        .unwrap();
        DagTask::new(dag, 20, 20).unwrap()
    }

    #[test]
    fn cover_of_fork() {
        let dag = Dag::new(&[1, 5, 3, 1], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(chain_cover(&dag), vec![7, 3]);
    }

    #[test]
    fn bound_matches_oracle_and_caps() {
        let task = fig_like();
        for delta in 0..=12 {
            for m in 1..=3 {
                let expect = brute_force_oracle(task.dag(), delta).unwrap().min(m * delta);
                assert_eq!(carry_out_bound(&task, delta, m).unwrap(), expect, "delta {delta} m {m}");
            }
        }
    }

    #[test]
    fn threshold_queries_agree_with_exact_values() {
        for delta in 0..=9 {
            for t in 0..=14 {
                let task = fig_like();
                let exact = brute_force_oracle(task.dag(), delta).unwrap().min(2 * delta);
                let got = carry_out_above(&task, delta, 2, Some(t)).unwrap();
                assert_eq!(got, (exact > t).then_some(exact), "delta {delta} t {t}");
            }
        }
    }

    #[test]
    fn fork_with_one_processor() {
        let task = DagTask::new(Dag::new(&[5, 5], &[]).unwrap(), 10, 10).unwrap();
        assert_eq!(carry_out_bound(&task, 3, 1).unwrap(), 3);
        assert_eq!(carry_out_bound(&task, 3, 2).unwrap(), 6);
    }

    #[test]
    fn window_covering_the_span_gives_the_work() {
        let task = fig_like();
        assert_eq!(carry_out_bound(&task, 8, 16).unwrap(), 13);
        assert_eq!(carry_out_bound(&task, 8, 1).unwrap(), 8);
        assert_eq!(memo_stats(&task).solves, 0);
    }
}
