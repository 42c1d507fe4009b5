use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use super::model::{CarryOutModel, VarKind};
use crate::dag::{Dag, DagError};
use crate::lp::{MilpError, MilpOptions, MilpStatus, Rational};

/// Largest `Π (C_a + 1)` the brute-force oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CarryOutError {
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("solver returned an assignment that violates the model: {0}")]
    Verification(String),
    #[error("oracle search space {size} exceeds the limit {limit}")]
    OracleTooLarge { size: u128, limit: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VertexAssignment {
    pub x: u64,
    pub w: u64,
    pub s: u64,
    pub m: u64,
    pub a: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub pivots: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    /// The search stopped once an assignment reached `stop_at`.
    AtLeast,
    /// Every assignment is at or below the requested cutoff.
    AtMostCutoff,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub outcome: Outcome,
    /// The optimum for [`Outcome::Optimal`], a lower bound for
    /// [`Outcome::AtLeast`] and the cutoff for [`Outcome::AtMostCutoff`].
    pub objective: u64,
    /// Empty for [`Outcome::AtMostCutoff`].
    pub assignment: Vec<VertexAssignment>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub stop_at: Option<u64>,
    pub cutoff: Option<u64>,
}

/// Solve the model to proven optimality.
pub fn solve_exact(model: &CarryOutModel) -> Result<SolveResult, CarryOutError> {
    solve_with(model, SolveOptions::default())
}

pub fn solve_with(model: &CarryOutModel, opts: SolveOptions) -> Result<SolveResult, CarryOutError> {
    let milp_opts = MilpOptions {
        stop_at: opts.stop_at.map(Rational::from),
        cutoff: opts.cutoff.map(Rational::from),
        incumbent: Some(model.wcet_assignment()),
        integral_objective: true,
        ..MilpOptions::default()
    };
    let sol = model.milp().solve(&milp_opts)?;
    let stats = SolveStats {
        nodes: sol.stats.nodes,
        pivots: sol.stats.pivots,
        elapsed: sol.stats.elapsed,
    };
    let outcome = match sol.status {
        MilpStatus::Optimal => Outcome::Optimal,
        MilpStatus::ReachedTarget => Outcome::AtLeast,
        MilpStatus::NoneAboveCutoff => {
            return Ok(SolveResult {
                outcome: Outcome::AtMostCutoff,
                objective: opts.cutoff.expect("cutoff outcome requires a cutoff"),
                assignment: Vec::new(),
                stats,
            })
        }
    };
    let assignment = verify(model, &sol.x)?;
    let objective = assignment.iter().map(|v| v.w).sum();
    Ok(SolveResult {
        outcome,
        objective,
        assignment,
        stats,
    })
}

/// Check integrality and every constraint exactly, then decode.
fn verify(model: &CarryOutModel, x: &[Rational]) -> Result<Vec<VertexAssignment>, CarryOutError> {
    if !model.milp().lp.is_feasible(x) {
        return Err(CarryOutError::Verification("constraint violated".into()));
    }
    let get = |kind, a| -> Result<u64, CarryOutError> {
        let j = model.var(kind, a);
        x[j].to_i64().and_then(|v| u64::try_from(v).ok()).ok_or_else(|| {
            CarryOutError::Verification(format!("{} = {} is not a natural number", model.var_name(j), x[j]))
        })
    };
    (0..model.vertex_count())
        .map(|a| {
            Ok(VertexAssignment {
                x: get(VarKind::X, a)?,
                w: get(VarKind::W, a)?,
                s: get(VarKind::S, a)?,
                m: get(VarKind::M, a)?,
                a: get(VarKind::A, a)? == 1,
            })
        })
        .collect()
}

/// Workload inside `[0, delta)` of the unrestricted ASAP schedule with
/// execution times `exec`.
pub fn asap_window_workload(dag: &Dag, exec: &[u64], delta: u64) -> Result<u64, DagError> {
    let starts = dag.asap_start_times(exec)?;
    Ok(exec
        .iter()
        .zip(&starts)
        .map(|(&x, &s)| x.min(delta.saturating_sub(s)))
        .sum())
}

/// Maximum carry-out workload by enumerating every integer execution-time
/// vector.
pub fn brute_force_oracle(dag: &Dag, delta: u64) -> Result<u64, CarryOutError> {
    let wcets = dag.wcets();
    let size = wcets.iter().try_fold(1u128, |acc, &c| {
        acc.checked_mul(c as u128 + 1).filter(|&p| p <= ORACLE_LIMIT)
    });
    let Some(_) = size else {
        let size = wcets.iter().fold(1u128, |acc, &c| acc.saturating_mul(c as u128 + 1));
        return Err(CarryOutError::OracleTooLarge {
            size,
            limit: ORACLE_LIMIT,
        });
    };
    let mut exec = vec![0u64; wcets.len()];
    let mut best = 0;
    loop {
        best = best.max(asap_window_workload(dag, &exec, delta)?);
        // odometer
        let mut i = 0;
        loop {
            if i == exec.len() {
                return Ok(best);
            }
            if exec[i] < wcets[i] {
                exec[i] += 1;
                break;
            }
            exec[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carryout::model::{build_model, BigM, Formulation, ModelOptions};

    fn opt(dag: &Dag, delta: u64) -> u64 {
        let r = solve_exact(&build_model(dag, delta, ModelOptions::default()).unwrap()).unwrap();
        assert_eq!(r.outcome, Outcome::Optimal);
        r.objective
    }

    #[test]
    fn single_vertex() {
        let dag = Dag::new(&[5], &[]).unwrap();
        assert_eq!(opt(&dag, 3), 3);
        assert_eq!(brute_force_oracle(&dag, 3).unwrap(), 3);
    }

    #[test]
    fn chain() {
        let dag = Dag::new(&[3, 4], &[(0, 1)]).unwrap();
        assert_eq!(opt(&dag, 5), 5);
        assert_eq!(brute_force_oracle(&dag, 5).unwrap(), 5);
        assert_eq!(brute_force_oracle(&dag, 2).unwrap(), 2);
    }

    #[test]
    fn fork() {
        let dag = Dag::new(&[0, 5, 5, 0], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(opt(&dag, 3), 6);
        assert_eq!(brute_force_oracle(&dag, 3).unwrap(), 6);
    }

    #[test]
    fn zero_window() {
        let dag = Dag::new(&[2, 3, 1], &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(opt(&dag, 0), 0);
    }

    #[test]
    fn all_zero_wcets() {
        let dag = Dag::new(&[0, 0, 0], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(brute_force_oracle(&dag, 4).unwrap(), 0);
        assert_eq!(opt(&dag, 4), 0);
    }

    #[test]
    fn oracle_guard() {
        let dag = Dag::new(&[100, 100, 100, 100], &[]).unwrap();
        assert!(matches!(
            brute_force_oracle(&dag, 3),
            Err(CarryOutError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn shortening_a_subtask_can_raise_the_workload() {
        let dag = Dag::new(
            &[2, 4, 2, 2, 1, 2],
            &[(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (4, 5)],
        )
        .unwrap();
        assert_eq!(asap_window_workload(&dag, &dag.wcets(), 3).unwrap(), 4);
        assert_eq!(asap_window_workload(&dag, &[0, 4, 2, 2, 1, 2], 3).unwrap(), 7);
        assert_eq!(opt(&dag, 3), 7);
    }

    #[test]
    fn assignments_respect_the_window_switch() {
        let dag = Dag::new(
            &[2, 4, 2, 2, 1, 2],
            &[(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (4, 5)],
        )
        .unwrap();
        for big_m in [BigM::Span, BigM::PerVertex] {
            for delta in 0..=9 {
                let model = build_model(
                    &dag,
                    delta,
                    ModelOptions {
                        formulation: Formulation::EdgeRecursive,
                        big_m,
                    },
                )
                .unwrap();
                let r = solve_exact(&model).unwrap();
                for v in &r.assignment {
                    if v.a {
                        assert!(v.w + v.s <= delta);
                    } else {
                        assert_eq!(v.w, 0);
                    }
                }
            }
        }
    }
}
