mod common;

use common::{arb_task, reconstruction_task};
use dagrta::carryout::carry_out_bound;
use dagrta::workload::{
    body_workload, carry_in_workload, dga_workload, interfering_workload, mbb_workload, window_splits,
};
use dagrta::{Dag, DagTask};
use proptest::prelude::*;

/// Work done in `[L − ci, L)` by the full-WCET schedule with unlimited
/// processors, built directly from per-vertex finish times.
fn tail_work(task: &DagTask, ci: u64) -> u64 {
    let dag = task.dag();
    let n = dag.len();
    let mut finish = vec![0u64; n];
    for &v in dag.topological_order() {
        let start = dag.preds(v).iter().map(|&p| finish[p]).max().unwrap_or(0);
        finish[v] = start + dag.wcet(v);
    }
    let l = task.span();
    let from = l.saturating_sub(ci);
    (0..n)
        .map(|v| {
            let start = finish[v] - dag.wcet(v);
            finish[v].saturating_sub(start.max(from))
        })
        .sum()
}

/// Largest workload a one-vertex task (running back to back for `C` units
/// right after release) can put into `[0, delta)`, over every release
/// pattern with gaps of at least `T`.
fn rigid_placement_oracle(c: u64, t: u64, delta: u64) -> u64 {
    fn go(next_min: i64, c: i64, t: i64, delta: i64) -> u64 {
        let mut best = 0;
        for r in next_min.max(-c)..delta {
            let here = ((r + c).min(delta) - r.max(0)).max(0) as u64;
            best = best.max(here + go(r + t, c, t, delta));
        }
        best
    }
    go(-(c as i64), c as i64, t as i64, delta as i64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lazy_search_matches_exhaustive_sweep(task in arb_task(6, 4), delta in 0u64..=60, extra in 0u64..=6, m in 1u64..=4) {
        let r = task.span() + extra;
        let full = interfering_workload(&task, delta, r, m, |co| carry_out_bound(&task, co, m)).unwrap();
        prop_assert_eq!(dga_workload(&task, delta, r, m).unwrap(), full);
    }

    #[test]
    fn workloads_are_monotone_in_the_window(task in arb_task(6, 4), extra in 0u64..=6, m in 1u64..=4) {
        let r = task.span() + extra;
        let (mut prev_d, mut prev_m) = (0, 0);
        for delta in 0..=2 * task.period() + task.span() {
            let d = dga_workload(&task, delta, r, m).unwrap();
            let b = mbb_workload(&task, delta, r, m);
            prop_assert!(d >= prev_d, "DGA drops at {}", delta);
            prop_assert!(b >= prev_m, "MBB drops at {}", delta);
            prop_assert!(d <= m * delta);
            prev_d = d;
            prev_m = b;
        }
    }

    #[test]
    fn dga_never_exceeds_mbb(task in arb_task(6, 4), delta in 0u64..=80, extra in 0u64..=6, m in 1u64..=6) {
        prop_assume!(task.work() <= m * task.span());
        let r = task.span() + extra;
        prop_assert!(dga_workload(&task, delta, r, m).unwrap() <= mbb_workload(&task, delta, r, m));
    }

    #[test]
    fn carry_in_is_the_tail_of_the_asap_schedule(task in arb_task(8, 9), ci in 0u64..=40) {
        prop_assert_eq!(carry_in_workload(&task, ci), tail_work(&task, ci));
    }

    #[test]
    fn one_vertex_bound_covers_every_release_pattern(c in 1u64..=5, tslack in 0u64..=4, delta in 0u64..=14, m in 1u64..=2) {
        let t = c + tslack;
        let task = DagTask::new(Dag::new(&[c], &[]).unwrap(), t, t).unwrap();
        let w = dga_workload(&task, delta, c, m).unwrap();
        prop_assert!(w >= rigid_placement_oracle(c, t, delta));
    }
}

#[test]
fn single_vertex_example_is_tight() {
    let task = DagTask::new(Dag::new(&[5], &[]).unwrap(), 10, 10).unwrap();
    assert_eq!(rigid_placement_oracle(5, 10, 10), 5);
    assert_eq!(dga_workload(&task, 10, 5, 2).unwrap(), 5);
}

#[test]
fn formula_examples() {
    let t = reconstruction_task(20);
    assert_eq!(body_workload(&t, 20, 10), 0);
    assert_eq!(body_workload(&t, 50, 10), 13);
    assert_eq!(carry_in_workload(&t, 8), 13);
    assert_eq!(mbb_workload(&t, 20, 10, 2), 20);
    let chain = DagTask::new(Dag::new(&[3, 4], &[(0, 1)]).unwrap(), 10, 10).unwrap();
    assert_eq!(carry_in_workload(&chain, 5), 5);
    assert_eq!(window_splits(&t, 20, 10).len(), 7);
}

#[test]
fn empty_shared_window_contributes_nothing() {
    // Δ + R = T: the partial jobs share a zero-length window.
    let t = reconstruction_task(20);
    let splits = window_splits(&t, 10, 10);
    assert_eq!(splits.len(), 1);
    assert_eq!((splits[0].ci_len, splits[0].co_len), (0, 0));
}

#[test]
fn saturated_windows_count_whole_jobs() {
    let t = reconstruction_task(20);
    // y = 32, shared window 20 > 2L.
    let w = interfering_workload(&t, 30, 10, 2, |co| carry_out_bound(&t, co, 2)).unwrap();
    assert_eq!(w, body_workload(&t, 30, 10) + 2 * 13);
}
