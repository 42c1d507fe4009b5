//! Fixed-point response-time bounds and the priority-ordered
//! schedulability test.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};

use crate::carryout::{memo_stats, CarryOutError};
use crate::task::{DagTask, TaskSet};
use crate::workload::{dga_workload, mbb_workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Carry-out workload from the integer program.
    #[serde(rename = "DGA")]
    Dga,
    /// Every job perfectly parallel on all processors.
    #[serde(rename = "MBB")]
    Mbb,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Dga, Method::Mbb];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dga => "DGA",
            Method::Mbb => "MBB",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DGA" => Ok(Method::Dga),
            "MBB" => Ok(Method::Mbb),
            other => Err(format!("unknown method {other:?} (expected DGA or MBB)")),
        }
    }
}

/// Result of a fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Converged(u64),
    /// The iterate passed the deadline.
    Exceeded,
    /// Not reached because the test stopped at an earlier task.
    NotAnalyzed,
}

impl Bound {
    pub fn value(self) -> Option<u64> {
        match self {
            Bound::Converged(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Converged(v) => s.serialize_u64(*v),
            Bound::Exceeded => s.serialize_str("exceeded"),
            Bound::NotAnalyzed => s.serialize_str("not_analyzed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub work: u64,
    pub span: u64,
    pub deadline: u64,
    pub period: u64,
    pub seed: u64,
    pub bound: Bound,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub method: Method,
    pub processors: u64,
    pub schedulable: bool,
    /// First task whose bound exceeded its deadline.
    pub rejected_at: Option<usize>,
    /// True when the rejection happened at initialization.
    pub rejected_at_init: bool,
    pub tasks: Vec<TaskReport>,
    pub carry_out_solves: u64,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

/// Equality ignores wall-clock time.
impl PartialEq for AnalysisReport {
    fn eq(&self, o: &Self) -> bool {
        self.method == o.method
            && self.processors == o.processors
            && self.schedulable == o.schedulable
            && self.rejected_at == o.rejected_at
            && self.rejected_at_init == o.rejected_at_init
            && self.tasks == o.tasks
    }
}

impl AnalysisReport {
    pub const CSV_HEADER: &'static str = "method,processors,tasks,schedulable,rejected_at,bounds";

    /// One CSV line: bounds separated by `;`, `x` for exceeded, `-` for not
    /// analyzed.
    pub fn csv_row(&self) -> String {
        let bounds: Vec<String> = self
            .tasks
            .iter()
            .map(|t| match t.bound {
                Bound::Converged(v) => v.to_string(),
                Bound::Exceeded => "x".into(),
                Bound::NotAnalyzed => "-".into(),
            })
            .collect();
        format!(
            "{},{},{},{},{},{}",
            self.method,
            self.processors,
            self.tasks.len(),
            self.schedulable as u8,
            self.rejected_at.map_or("-".to_string(), |k| k.to_string()),
            bounds.join(";")
        )
    }

    pub fn bounds(&self) -> Vec<Option<u64>> {
        self.tasks.iter().map(|t| t.bound.value()).collect()
    }
}

/// `L + ⌈(C − L)/m⌉`, the bound without any interference.
pub fn seed_bound(task: &DagTask, m: u64) -> u64 {
    task.span() + (task.work() - task.span()).div_ceil(m)
}

/// Iterate `R ← L + ⌈(C − L + Σ_{i<k} W_i(R))/m⌉` from the seed until it
/// is stable or exceeds the deadline. `workload(i, window, r_i)` bounds
/// the interference of higher-priority task `i`.
pub fn response_time_bound<E>(
    k: usize,
    taskset: &TaskSet,
    prior: &[u64],
    mut workload: impl FnMut(usize, u64, u64) -> Result<u64, E>,
) -> Result<(Bound, usize), E> {
    let task = &taskset.tasks[k];
    let m = taskset.processors;
    let (c, l, d) = (task.work(), task.span(), task.deadline());
    let mut r = seed_bound(task, m);
    let mut iterations = 0;
    loop {
        if r > d {
            return Ok((Bound::Exceeded, iterations));
        }
        iterations += 1;
        let mut interference: u64 = 0;
        for (i, &ri) in prior.iter().enumerate().take(k) {
            interference += workload(i, r, ri)?;
        }
        let next = l + (c - l + interference).div_ceil(m);
        debug_assert!(next >= r, "response-time iterates must not decrease");
        if next == r {
            return Ok((Bound::Converged(r), iterations));
        }
        r = next;
    }
}

/// Interference bound of one higher-priority task for a method.
pub fn method_workload(method: Method, task: &DagTask, window: u64, r: u64, m: u64) -> Result<u64, CarryOutError> {
    match method {
        Method::Dga => dga_workload(task, window, r, m),
        Method::Mbb => Ok(mbb_workload(task, window, r, m)),
    }
}

/// Check every seed, then compute bounds in priority order, stopping at the
/// first task whose bound passes its deadline.
pub fn schedulability_test(taskset: &TaskSet, method: Method) -> Result<AnalysisReport, CarryOutError> {
    let started = Instant::now();
    let m = taskset.processors;
    let solves_before: u64 = taskset.tasks.iter().map(|t| memo_stats(t).solves).sum();
    let mut reports: Vec<TaskReport> = taskset
        .tasks
        .iter()
        .enumerate()
        .map(|(index, t)| TaskReport {
            index,
            work: t.work(),
            span: t.span(),
            deadline: t.deadline(),
            period: t.period(),
            seed: seed_bound(t, m),
            bound: Bound::NotAnalyzed,
            iterations: 0,
        })
        .collect();

    let mut rejected_at = None;
    let mut rejected_at_init = false;
    if let Some(k) = reports.iter().position(|r| r.seed > r.deadline) {
        rejected_at = Some(k);
        rejected_at_init = true;
        reports[k].bound = Bound::Exceeded;
    } else {
        let mut prior = Vec::with_capacity(taskset.len());
        for k in 0..taskset.len() {
            let (bound, iterations) = response_time_bound(k, taskset, &prior, |i, window, ri| {
                method_workload(method, &taskset.tasks[i], window, ri, m)
            })?;
            reports[k].bound = bound;
            reports[k].iterations = iterations;
            match bound {
                Bound::Converged(r) => prior.push(r),
                _ => {
                    rejected_at = Some(k);
                    break;
                }
            }
        }
    }
    let solves_after: u64 = taskset.tasks.iter().map(|t| memo_stats(t).solves).sum();
    Ok(AnalysisReport {
        method,
        processors: m,
        schedulable: rejected_at.is_none(),
        rejected_at,
        rejected_at_init,
        tasks: reports,
        carry_out_solves: solves_after - solves_before,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::Dag;

    fn task(wcets: &[u64], edges: &[(usize, usize)], d: u64, t: u64) -> DagTask {
        DagTask::new(Dag::new(wcets, edges).unwrap(), d, t).unwrap()
    }

    fn fig_like(d: u64) -> DagTask {
        task(
            &[2, 4, 2, 2, 1, 2],
            &[(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (4, 5)],
            d,
            d,
        )
    }

    #[test]
    fn highest_priority_task_gets_its_seed() {
        let ts = TaskSet::new(vec![fig_like(20)], 2).unwrap();
        for method in Method::ALL {
            let rep = schedulability_test(&ts, method).unwrap();
            assert_eq!(rep.tasks[0].bound, Bound::Converged(11));
            assert!(rep.schedulable);
        }
    }

    #[test]
    fn sequential_task_alone() {
        let ts = TaskSet::new(vec![task(&[3, 4], &[(0, 1)], 7, 9)], 4).unwrap();
        let rep = schedulability_test(&ts, Method::Dga).unwrap();
        assert_eq!(rep.tasks[0].bound, Bound::Converged(7));
    }

    #[test]
    fn span_beyond_deadline_fails_at_initialization() {
        let ts = TaskSet::new(vec![fig_like(20), task(&[3, 3], &[(0, 1)], 5, 10)], 2).unwrap();
        let rep = schedulability_test(&ts, Method::Dga).unwrap();
        assert!(!rep.schedulable);
        assert!(rep.rejected_at_init);
        assert_eq!(rep.rejected_at, Some(1));
        assert_eq!(rep.tasks[0].bound, Bound::NotAnalyzed);
    }

    #[test]
    fn empty_set_is_schedulable() {
        let ts = TaskSet::new(vec![], 2).unwrap();
        assert!(schedulability_test(&ts, Method::Mbb).unwrap().schedulable);
    }

    #[test]
    fn report_serializes_bounds() {
        let ts = TaskSet::new(vec![fig_like(20)], 2).unwrap();
        let rep = schedulability_test(&ts, Method::Dga).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["tasks"][0]["bound"], 11);
        assert_eq!(json["method"], "DGA");
        assert_eq!(rep.csv_row(), "DGA,2,1,1,-,11");
    }
}
