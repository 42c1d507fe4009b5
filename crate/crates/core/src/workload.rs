//! Upper bounds on the workload an interfering task can execute inside a
//! problem window.
//!
//! The window of length `Δ` is covered by a carry-in job, a run of body
//! jobs and a carry-out job. With `y = Δ − L + R` (the interferer's span `L`
//! and response bound `R`), aligning the window with the carry-in job gives
//! `max(⌊y/T⌋ − 1, 0)` body jobs and a shared partial-job window of
//! `Γ = L + (y mod T)`. Sliding the window can trade a long carry-out
//! window for one more body job, so the bound takes the best over every job
//! count that fits, plus a single job running `Δ` units after release.

use serde::{Deserialize, Serialize};

use crate::carryout::{carry_out_above, carry_out_bound, carry_out_upper, CarryOutError};
use crate::task::DagTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSplit {
    pub ci_len: u64,
    pub co_len: u64,
}

/// `Δ − L + R`, signed.
fn offset(task: &DagTask, delta: u64, r: u64) -> i128 {
    delta as i128 - task.span() as i128 + r as i128
}

/// Workload of the jobs released and finished strictly inside the window.
pub fn body_workload(task: &DagTask, delta: u64, r: u64) -> u64 {
    let y = offset(task, delta, r);
    if y < 0 {
        return 0;
    }
    let jobs = (y as u64 / task.period()).saturating_sub(1);
    jobs * task.work()
}

/// Work of a carry-in job that can fall into a window of length `ci` at
/// the end of its full-WCET unrestricted ASAP schedule.
pub fn carry_in_workload(task: &DagTask, ci: u64) -> u64 {
    let l = task.span();
    let dag = task.dag();
    task.wcet_start_times()
        .iter()
        .enumerate()
        .map(|(v, &s)| dag.wcet(v).saturating_sub(l.saturating_sub(s + ci)))
        .sum()
}

/// The baseline bound: every job runs perfectly parallel on all `m`
/// processors, `⌊x/T⌋·C + min(C, m·(x mod T))` with `x = Δ + R − C/m`.
///
/// Scaling by `m` keeps everything integral: `m·x = mΔ + mR − C`.
pub fn mbb_workload(task: &DagTask, delta: u64, r: u64, m: u64) -> u64 {
    let (c, t) = (task.work() as i128, task.period() as i128);
    let m = m as i128;
    let mx = m * delta as i128 + m * r as i128 - c;
    if mx < 0 {
        return 0;
    }
    let q = mx / (m * t);
    let rem = mx - q * m * t;
    (q * c + rem.min(c)) as u64
}

/// Splits of the shared partial-job window, in sweep order: starting from
/// the longest carry-in window, moving one unit at a time to the carry-out
/// side. Empty when no partial-job pair fits the window.
pub fn window_splits(task: &DagTask, delta: u64, r: u64) -> Vec<WindowSplit> {
    let Some(gamma) = shared_window(task, delta, r) else {
        return Vec::new();
    };
    let l = task.span();
    let mut ci = gamma.min(l);
    let mut co = (gamma - ci).min(l);
    let mut out = vec![WindowSplit { ci_len: ci, co_len: co }];
    while co < gamma.min(l) && ci > 0 {
        ci -= 1;
        co += 1;
        out.push(WindowSplit { ci_len: ci, co_len: co });
    }
    out
}

/// Total length shared by the carry-in and carry-out windows, if both can
/// occur.
pub fn shared_window(task: &DagTask, delta: u64, r: u64) -> Option<u64> {
    let y = offset(task, delta, r);
    let t = task.period() as i128;
    if y < 0 {
        None
    } else if y < t {
        u64::try_from(delta as i128 + r as i128 - t).ok()
    } else {
        Some(task.span() + (y % t) as u64)
    }
}

/// Carry-in windows worth examining for a shared window `gamma`: beyond
/// `K = max(L, ⌈C/m⌉)` neither capped addend can grow, so only
/// `ci ∈ [Γ − K, K]` matters. `None` when `Γ > 2K`, where both jobs
/// contribute `C` in full.
fn split_range(task: &DagTask, gamma: u64, m: u64) -> Option<std::ops::RangeInclusive<u64>> {
    let k = task.span().max(task.work().div_ceil(m));
    if gamma > 2 * k {
        return None;
    }
    Some(gamma.saturating_sub(k)..=gamma.min(k))
}

/// Placements of the interfering jobs in a window, reduced to the values
/// that do not depend on the carry-out bound.
struct Candidates {
    /// Best value that needs no carry-out bound.
    fixed: u64,
    /// `(known part, carry-out window)` pairs; the value of a pair is the
    /// known part plus the capped carry-out bound.
    open: Vec<(u64, u64)>,
}

/// With `N ≥ 2` jobs overlapping the window at minimum separation, the
/// first and last share `Γ_N = Δ + R − (N − 1)·T` units and the `N − 2`
/// between them run in full. Every feasible `N` is a candidate, as is a
/// single job running `Δ` units from its release.
fn candidates(task: &DagTask, delta: u64, r: u64, m: u64) -> Candidates {
    let (c, t) = (task.work(), task.period());
    let cap = |len: u64| c.min(m.saturating_mul(len));
    let mut out = Candidates {
        fixed: 0,
        open: vec![(0, delta)],
    };
    let reach = delta + r;
    let n_top = reach / t + 1;
    for n in (2..=n_top).rev() {
        let gamma = reach - (n - 1) * t;
        let body = (n - 2) * c;
        match split_range(task, gamma, m) {
            None => {
                // Fewer jobs only lose whole bodies from here on.
                out.fixed = out.fixed.max(n * c);
                break;
            }
            Some(range) => {
                for ci in range {
                    out.open
                        .push((body + carry_in_workload(task, ci).min(cap(ci)), gamma - ci));
                }
            }
        }
    }
    out
}

/// Interfering workload for an arbitrary carry-out bound `carry_out(len)`,
/// evaluated over every candidate placement. Each partial job is capped at
/// `min(C, m·len)` and the total at `m·Δ`.
pub fn interfering_workload<E>(
    task: &DagTask,
    delta: u64,
    r: u64,
    m: u64,
    mut carry_out: impl FnMut(u64) -> Result<u64, E>,
) -> Result<u64, E> {
    if delta == 0 {
        return Ok(0);
    }
    let cap = |len: u64| task.work().min(m.saturating_mul(len));
    let cands = candidates(task, delta, r, m);
    let mut best = cands.fixed;
    for (known, co) in cands.open {
        best = best.max(known + carry_out(co)?.min(cap(co)));
    }
    Ok(best.min(m.saturating_mul(delta)))
}

/// [`interfering_workload`] with the integer-programming carry-out bound,
/// solving only the placements that can still improve on the best value
/// found.
pub fn dga_workload(task: &DagTask, delta: u64, r: u64, m: u64) -> Result<u64, CarryOutError> {
    if delta == 0 {
        return Ok(0);
    }
    let cap = |len: u64| task.work().min(m.saturating_mul(len));
    let target = m.saturating_mul(delta);
    let cands = candidates(task, delta, r, m);

    // (upper bound, known part, carry-out window)
    let mut open: Vec<(u64, u64, u64)> = cands
        .open
        .into_iter()
        .map(|(known, co)| (known + carry_out_upper(task, co, m).min(cap(co)), known, co))
        .collect();
    open.sort_by_key(|c| std::cmp::Reverse(c.0));

    let mut best = cands.fixed;
    for (ub, known, co) in open {
        if ub <= best || best >= target {
            break;
        }
        let value = match best.checked_sub(known) {
            None => Some(carry_out_bound(task, co, m)?),
            Some(t) => carry_out_above(task, co, m, Some(t))?,
        };
        if let Some(v) = value {
            best = best.max(known + v.min(cap(co)));
        }
    }
    Ok(best.min(target))
}
