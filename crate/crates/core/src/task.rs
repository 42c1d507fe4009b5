//! Sporadic DAG tasks and priority-ordered task sets.

use std::sync::Arc;

use thiserror::Error;

use crate::carryout::CarryOutMemo;
use crate::dag::Dag;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("deadline must be positive")]
    ZeroDeadline,
    #[error("deadline {deadline} exceeds period {period}")]
    DeadlineExceedsPeriod { deadline: u64, period: u64 },
    #[error("subtask {0} has zero WCET")]
    ZeroWcet(usize),
    #[error("a task set needs at least one processor")]
    NoProcessors,
}

/// A sporadic DAG task with a constrained deadline.
///
/// `span ≤ deadline` is deliberately not enforced: such a task is
/// representable and is rejected by the schedulability test instead.
#[derive(Debug, Clone)]
pub struct DagTask {
    dag: Dag,
    deadline: u64,
    period: u64,
    work: u64,
    span: u64,
    wcet_starts: Vec<u64>,
    memo: Arc<CarryOutMemo>,
}

impl PartialEq for DagTask {
    fn eq(&self, other: &Self) -> bool {
        self.dag == other.dag && self.deadline == other.deadline && self.period == other.period
    }
}

impl Eq for DagTask {}

impl DagTask {
    pub fn new(dag: Dag, deadline: u64, period: u64) -> Result<Self, TaskError> {
        if period == 0 {
            return Err(TaskError::ZeroPeriod);
        }
        if deadline == 0 {
            return Err(TaskError::ZeroDeadline);
        }
        if deadline > period {
            return Err(TaskError::DeadlineExceedsPeriod { deadline, period });
        }
        if let Some(v) = dag.vertices().iter().find(|v| v.wcet == 0) {
            return Err(TaskError::ZeroWcet(v.id));
        }
        let work = dag.work();
        let span = dag.span();
        let wcet_starts = dag.wcet_start_times();
        debug_assert_eq!((0..dag.len()).map(|v| wcet_starts[v] + dag.wcet(v)).max(), Some(span));
        Ok(Self {
            dag,
            deadline,
            period,
            work,
            span,
            wcet_starts,
            memo: Arc::new(CarryOutMemo::default()),
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn deadline(&self) -> u64 {
        self.deadline
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// `C`: total WCET.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// `L`: longest path length.
    pub fn span(&self) -> u64 {
        self.span
    }

    pub fn utilization(&self) -> f64 {
        self.work as f64 / self.period as f64
    }

    /// ASAP start times with every subtask at its WCET.
    pub fn wcet_start_times(&self) -> &[u64] {
        &self.wcet_starts
    }

    pub(crate) fn memo(&self) -> &CarryOutMemo {
        &self.memo
    }

    /// The same task with a different deadline and period.
    pub fn with_timing(&self, deadline: u64, period: u64) -> Result<Self, TaskError> {
        let mut t = DagTask::new(self.dag.clone(), deadline, period)?;
        // Carry-out bounds depend only on the graph.
        t.memo = Arc::clone(&self.memo);
        Ok(t)
    }
}

/// Tasks in priority order (index 0 is the highest priority) and a
/// processor count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSet {
    pub tasks: Vec<DagTask>,
    pub processors: u64,
}

impl TaskSet {
    pub fn new(tasks: Vec<DagTask>, processors: u64) -> Result<Self, TaskError> {
        if processors == 0 {
            return Err(TaskError::NoProcessors);
        }
        Ok(Self { tasks, processors })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn utilization(&self) -> f64 {
        self.tasks.iter().map(DagTask::utilization).sum()
    }

    /// Higher-priority tasks of task `k`.
    pub fn hp(&self, k: usize) -> &[DagTask] {
        &self.tasks[..k]
    }

    pub fn max_period(&self) -> u64 {
        self.tasks.iter().map(DagTask::period).max().unwrap_or(0)
    }
}
