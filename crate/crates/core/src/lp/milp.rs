//! Depth-first branch-and-bound for mixed-integer programs.
//!
//! The root relaxation is solved with the two-phase primal simplex; every
//! child node clones its parent's optimal tableau, tightens one bound and
//! re-optimizes with the dual simplex.

use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::rational::Rational;
use super::simplex::{DualEnd, LinearProgram, LpError, Status, Tableau, DEFAULT_PIVOT_LIMIT};

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Milp {
    pub lp: LinearProgram,
    pub integer: Vec<bool>,
    /// Integer variables examined first when choosing a branching variable,
    /// in the given order. Remaining integer variables follow by index.
    pub branch_order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: usize,
    pub pivot_limit: usize,
    /// Stop as soon as an incumbent reaches this objective value.
    pub stop_at: Option<Rational>,
    /// A feasible integer point used as the initial incumbent.
    pub incumbent: Option<Vec<Rational>>,
    /// Only solutions with an objective strictly above this value are
    /// sought. If none exists the result is [`MilpStatus::NoneAboveCutoff`].
    pub cutoff: Option<Rational>,
    /// Every integer-feasible point has an integral objective, so node
    /// bounds may be rounded down.
    pub integral_objective: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            node_limit: DEFAULT_NODE_LIMIT,
            pivot_limit: DEFAULT_PIVOT_LIMIT,
            stop_at: None,
            incumbent: None,
            cutoff: None,
            integral_objective: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MilpStats {
    pub nodes: usize,
    pub pivots: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// Search stopped early because the incumbent reached `stop_at`.
    ReachedTarget,
    /// No feasible point beats the cutoff; `objective` is the cutoff and
    /// `x` is empty.
    NoneAboveCutoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: Rational,
    pub x: Vec<Rational>,
    pub stats: MilpStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("branch-and-bound exceeded {0} nodes")]
    NodeLimit(usize),
    #[error("the problem has no integer-feasible point")]
    Infeasible,
    #[error("the relaxation is unbounded")]
    Unbounded,
    #[error("the supplied incumbent is not feasible")]
    BadIncumbent,
}

struct Node {
    parent: Rc<Tableau>,
    var: usize,
    lo: Rational,
    up: Option<Rational>,
}

impl Milp {
    pub fn solve(&self, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
        let started = Instant::now();
        let mut stats = MilpStats::default();

        let mut best: Option<(Rational, Vec<Rational>)> = None;
        if let Some(x) = &opts.incumbent {
            if !self.lp.is_feasible(x) || !self.is_integral(x) {
                return Err(MilpError::BadIncumbent);
            }
            best = Some((self.lp.objective_value(x), x.clone()));
        }
        let reached = |best: &Option<(Rational, Vec<Rational>)>| match (&opts.stop_at, best) {
            (Some(target), Some((obj, x))) => !x.is_empty() && obj >= target,
            _ => false,
        };

        if let Some(c) = &opts.cutoff {
            if best.as_ref().is_none_or(|(obj, _)| obj <= c) {
                best = Some((c.clone(), Vec::new()));
            }
        }
        let finish = |best: Option<(Rational, Vec<Rational>)>, status, mut stats: MilpStats| {
            stats.elapsed = started.elapsed();
            match best {
                Some((objective, x)) if x.is_empty() && self.lp.num_vars() > 0 => Ok(MilpSolution {
                    status: MilpStatus::NoneAboveCutoff,
                    objective,
                    x,
                    stats,
                }),
                Some((objective, x)) => Ok(MilpSolution {
                    status,
                    objective,
                    x,
                    stats,
                }),
                None => Err(MilpError::Infeasible),
            }
        };
        if reached(&best) {
            return finish(best, MilpStatus::ReachedTarget, stats);
        }

        stats.nodes = 1;
        let (status, root) = Tableau::solve(&self.lp, opts.pivot_limit)?;
        let root = match status {
            Status::Optimal => root.expect("optimal root has a tableau"),
            Status::Infeasible => return finish(best, MilpStatus::Optimal, stats),
            Status::Unbounded => return Err(MilpError::Unbounded),
        };
        stats.pivots += root.pivots;

        let mut stack: Vec<Node> = Vec::new();
        let mut current = Some(root);
        loop {
            if let Some(t) = current.take() {
                let bound = self.node_bound(&t.objective(), opts);
                let dominated = best.as_ref().is_some_and(|(obj, _)| bound <= *obj);
                if !dominated {
                    let x = t.values();
                    match self.branching_var(&x) {
                        None => {
                            best = Some((self.lp.objective_value(&x), x));
                            if reached(&best) {
                                return finish(best, MilpStatus::ReachedTarget, stats);
                            }
                        }
                        Some(j) => {
                            let parent = Rc::new(t);
                            let (lo, up) = parent.bounds(j);
                            let (lo, up) = (lo.clone(), up.cloned());
                            let down = x[j].floor();
                            let upv = x[j].ceil();
                            // Pushed last, explored first: the up branch.
                            stack.push(Node {
                                parent: Rc::clone(&parent),
                                var: j,
                                lo,
                                up: Some(down),
                            });
                            stack.push(Node {
                                parent,
                                var: j,
                                lo: upv,
                                up,
                            });
                        }
                    }
                }
            }

            let Some(node) = stack.pop() else {
                return finish(best, MilpStatus::Optimal, stats);
            };
            stats.nodes += 1;
            if stats.nodes > opts.node_limit {
                return Err(MilpError::NodeLimit(opts.node_limit));
            }
            let mut t = Rc::try_unwrap(node.parent).unwrap_or_else(|rc| (*rc).clone());
            let before = t.pivots;
            t.set_bounds(node.var, node.lo, node.up);
            // While dual feasible the objective bounds the node from above.
            let cutoff = best.as_ref().map(|(obj, _)| obj);
            let end = t.reoptimize(opts.pivot_limit, cutoff)?;
            stats.pivots += t.pivots - before;
            if end == DualEnd::Feasible {
                current = Some(t);
            }
        }
    }

    fn node_bound(&self, relaxation: &Rational, opts: &MilpOptions) -> Rational {
        if opts.integral_objective {
            relaxation.floor()
        } else {
            relaxation.clone()
        }
    }

    fn is_integral(&self, x: &[Rational]) -> bool {
        x.iter().zip(&self.integer).all(|(v, &int)| !int || v.is_integer())
    }

    fn branching_var(&self, x: &[Rational]) -> Option<usize> {
        self.branch_order
            .iter()
            .copied()
            .find(|&j| self.integer[j] && !x[j].is_integer())
            .or_else(|| (0..x.len()).find(|&j| self.integer[j] && !x[j].is_integer()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::simplex::Relation;

    fn r(v: i64) -> Rational {
        Rational::integer(v)
    }

    fn knapsack(values: &[i64], weights: &[i64], cap: i64) -> Milp {
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = values.iter().map(|&v| lp.add_var(r(0), Some(r(1)), r(v))).collect();
        lp.add_constraint(
            vars.iter().zip(weights).map(|(&j, &w)| (j, r(w))).collect(),
            Relation::Le,
            r(cap),
        );
        Milp {
            integer: vec![true; vars.len()],
            branch_order: vars,
            lp,
        }
    }

    fn brute_knapsack(values: &[i64], weights: &[i64], cap: i64) -> i64 {
        let n = values.len();
        (0u32..1 << n)
            .filter_map(|mask| {
                let (v, w) = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .fold((0, 0), |(v, w), i| (v + values[i], w + weights[i]));
                (w <= cap).then_some(v)
            })
            .max()
            .unwrap()
    }

    #[test]
    fn small_knapsack() {
        let (v, w) = ([10, 13, 7, 8], [5, 7, 4, 3]);
        let milp = knapsack(&v, &w, 10);
        let sol = milp.solve(&MilpOptions::default()).unwrap();
        assert_eq!(sol.objective, r(brute_knapsack(&v, &w, 10)));
        assert!(milp.lp.is_feasible(&sol.x));
    }

    #[test]
    fn stop_at_target_ends_early() {
        let (v, w) = ([10, 13, 7, 8], [5, 7, 4, 3]);
        let milp = knapsack(&v, &w, 10);
        let opts = MilpOptions {
            stop_at: Some(r(1)),
            ..MilpOptions::default()
        };
        let sol = milp.solve(&opts).unwrap();
        assert_eq!(sol.status, MilpStatus::ReachedTarget);
        assert!(sol.objective >= r(1));
    }

    #[test]
    fn cutoff_proves_upper_bound() {
        let (v, w) = ([10, 13, 7, 8], [5, 7, 4, 3]);
        let milp = knapsack(&v, &w, 10);
        let opt = brute_knapsack(&v, &w, 10);
        let above = |c: i64| MilpOptions {
            cutoff: Some(r(c)),
            integral_objective: true,
            ..MilpOptions::default()
        };
        let sol = milp.solve(&above(opt)).unwrap();
        assert_eq!(sol.status, MilpStatus::NoneAboveCutoff);
        let sol = milp.solve(&above(opt - 1)).unwrap();
        assert_eq!((sol.status, sol.objective), (MilpStatus::Optimal, r(opt)));
    }

    #[test]
    fn general_integer_variables() {
        // max x + y, 2x + 2y ≤ 7, x,y integer → 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), None, r(1));
        let y = lp.add_var(r(0), None, r(1));
        lp.add_constraint(vec![(x, r(2)), (y, r(2))], Relation::Le, r(7));
        let milp = Milp {
            lp,
            integer: vec![true, true],
            branch_order: vec![],
        };
        let sol = milp.solve(&MilpOptions::default()).unwrap();
        assert_eq!(sol.objective, r(3));
    }

    #[test]
    fn infeasible_integer_problem() {
        // 2x = 1 with x integer
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), Some(r(5)), r(1));
        lp.add_constraint(vec![(x, r(2))], Relation::Eq, r(1));
        let milp = Milp {
            lp,
            integer: vec![true],
            branch_order: vec![x],
        };
        assert_eq!(milp.solve(&MilpOptions::default()), Err(MilpError::Infeasible));
    }

    proptest::proptest! {
        #[test]
        fn knapsack_matches_enumeration(
            items in proptest::collection::vec((1i64..20, 1i64..15), 1..8),
            cap in 0i64..40,
        ) {
            let (v, w): (Vec<i64>, Vec<i64>) = items.into_iter().unzip();
            let milp = knapsack(&v, &w, cap);
            let opts = MilpOptions { integral_objective: true, ..MilpOptions::default() };
            let sol = milp.solve(&opts).unwrap();
            proptest::prop_assert_eq!(sol.objective, r(brute_knapsack(&v, &w, cap)));
        }
    }
}
