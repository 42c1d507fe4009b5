#![allow(dead_code)]

use dagrta::{Dag, DagTask};
use proptest::prelude::*;

/// Random DAG on up to `max_n` vertices with WCETs in `wcets`, labeled by
/// a random permutation so edges are not always increasing.
pub fn arb_dag(max_n: usize, wcets: std::ops::RangeInclusive<u64>) -> impl Strategy<Value = Dag> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            let pairs = n * (n - 1) / 2;
            (
                proptest::collection::vec(wcets.clone(), n),
                proptest::collection::vec(any::<bool>(), pairs),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(w, bits, perm)| dag_from_bits(&w, &bits, &perm))
}

pub fn dag_from_bits(wcets: &[u64], bits: &[bool], perm: &[usize]) -> Dag {
    let n = wcets.len();
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k] {
                edges.push((perm[i], perm[j]));
            }
            k += 1;
        }
    }
    Dag::new(wcets, &edges).unwrap()
}

pub fn arb_task(max_n: usize, max_wcet: u64) -> impl Strategy<Value = DagTask> {
    (arb_dag(max_n, 1..=max_wcet), 0u64..=3, 0u64..=30).prop_map(|(dag, dslack, tslack)| {
        let d = dag.span() + dslack * dag.span() / 2;
        let t = d.max(dag.work()) + tslack;
        DagTask::new(dag, d, t).unwrap()
    })
}

pub fn reconstruction_task(period: u64) -> DagTask {
    DagTask::new(dagrta::instances::reconstruction_dag(), period, period).unwrap()
}
