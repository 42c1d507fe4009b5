//! Small hand-built instances used by tests, examples and the CLI.

use crate::dag::Dag;
use crate::task::{DagTask, TaskSet};

/// A six-subtask DAG with work 13 and span 8, built to match the published
/// aggregates of a worked example (the per-subtask WCETs are a
/// reconstruction).
///
/// ```text
///        ┌──> 1 (4) ─────────────┐
/// 0 (2) ─┤                       ├──> 5 (2)
///        └──> 2 (2) ─┬─> 3 (2) ──┤
///                    └─> 4 (1) ──┘
/// ```
///
/// With all WCETs the ASAP schedule leaves 4 units in the last 3; shrinking
/// subtask 0 to zero lets 7 units fall there.
pub fn reconstruction_dag() -> Dag {
    Dag::new(
        &[2, 4, 2, 2, 1, 2],
        &[(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (4, 5)],
    )
    .expect("static instance is valid")
}

/// Two processors, two interferers and the reconstruction DAG at lowest
/// priority, all released together at 0. The analyzed job finishes at 14
/// with critical chain `0, 2, 4, 5` and 7 units of critical interference.
pub fn interference_scenario() -> TaskSet {
    let wide = DagTask::new(Dag::new(&[2, 2], &[]).expect("valid"), 11, 11).expect("valid");
    let short = DagTask::new(Dag::new(&[1], &[]).expect("valid"), 4, 4).expect("valid");
    let analyzed = DagTask::new(reconstruction_dag(), 20, 20).expect("valid");
    TaskSet::new(vec![wide, short, analyzed], 2).expect("valid")
}
