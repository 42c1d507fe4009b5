//! Bounded-variable simplex over exact rationals.
//!
//! The tableau keeps explicit lower/upper bounds per column so that
//! branch-and-bound can tighten a bound on a solved tableau and restore
//! optimality with a few dual simplex pivots instead of re-solving.
//! Both primal and dual pivoting use smallest-index rules.

use thiserror::Error;

use super::rational::Rational;

/// Pivot budget for a single call to the primal or dual loop.
pub const DEFAULT_PIVOT_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize objective·x` subject to the constraints and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub lower: Vec<Rational>,
    pub upper: Vec<Option<Rational>>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, objective: Rational },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Add a variable and return its index.
    pub fn add_var(&mut self, lower: Rational, upper: Option<Rational>, objective: Rational) -> usize {
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Coefficients are stored sorted by variable with repeats summed and
    /// zeros dropped.
    pub fn add_constraint(&mut self, mut coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars()));
        coeffs.sort_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        for (j, c) in coeffs {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc = &*acc + &c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        let coeffs = merged;
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(x)
            .fold(Rational::ZERO, |acc, (c, v)| &acc + &(c * v))
    }

    /// Exact feasibility check of a point.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        for (j, v) in x.iter().enumerate() {
            if v < &self.lower[j] {
                return false;
            }
            if let Some(u) = &self.upper[j] {
                if v > u {
                    return false;
                }
            }
        }
        self.constraints.iter().all(|c| {
            let lhs = c.coeffs.iter().fold(Rational::ZERO, |acc, (j, a)| &acc + &(a * &x[*j]));
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            }
        })
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        let (status, tableau) = Tableau::solve(self, DEFAULT_PIVOT_LIMIT)?;
        Ok(match status {
            Status::Optimal => {
                let t = tableau.expect("optimal status carries a tableau");
                LpOutcome::Optimal {
                    x: t.values(),
                    objective: t.objective(),
                }
            }
            Status::Infeasible => LpOutcome::Infeasible,
            Status::Unbounded => LpOutcome::Unbounded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DualEnd {
    Feasible,
    Infeasible,
    /// The dual bound fell to or below the cutoff.
    Cutoff,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    rows: Vec<Vec<Rational>>,
    beta: Vec<Rational>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    lo: Vec<Rational>,
    up: Vec<Option<Rational>>,
    at_upper: Vec<bool>,
    /// reduced costs
    d: Vec<Rational>,
    /// phase-2 objective per column
    cost: Vec<Rational>,
    structural: usize,
    pub pivots: usize,
}

impl Tableau {
    /// Two-phase primal simplex from the all-lower-bounds basis.
    pub(crate) fn solve(lp: &LinearProgram, limit: usize) -> Result<(Status, Option<Tableau>), LpError> {
        let n = lp.num_vars();
        for j in 0..n {
            if let Some(u) = &lp.upper[j] {
                if u < &lp.lower[j] {
                    return Ok((Status::Infeasible, None));
                }
            }
        }

        let slack_count = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let mut lo: Vec<Rational> = lp.lower.clone();
        let mut up: Vec<Option<Rational>> = lp.upper.clone();
        lo.extend(std::iter::repeat_n(Rational::ZERO, slack_count));
        up.extend(std::iter::repeat_n(None, slack_count));

        // Each row becomes a·x + s·slack = b' with b' ≥ 0 once shifted by
        // the starting point x = lower.
        struct Prepared {
            dense: Vec<Rational>,
            rhs: Rational,
            basic_slack: Option<usize>,
        }
        let base_cols = n + slack_count;
        let mut prepared = Vec::with_capacity(lp.constraints.len());
        let mut next_slack = n;
        for c in &lp.constraints {
            let mut dense = vec![Rational::ZERO; base_cols];
            let mut rhs = c.rhs.clone();
            for (j, a) in &c.coeffs {
                dense[*j] = &dense[*j] + a;
                rhs = rhs.sub_mul(a, &lp.lower[*j]);
            }
            let mut slack = None;
            match c.relation {
                Relation::Le => {
                    dense[next_slack] = Rational::ONE;
                    slack = Some(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    dense[next_slack] = -Rational::ONE;
                    slack = Some(next_slack);
                    next_slack += 1;
                }
                Relation::Eq => {}
            }
            if rhs.is_negative() {
                for v in dense.iter_mut() {
                    if !v.is_zero() {
                        *v = -&*v;
                    }
                }
                rhs = -rhs;
            }
            let basic_slack = slack.filter(|&s| dense[s] == Rational::ONE);
            prepared.push(Prepared {
                dense,
                rhs,
                basic_slack,
            });
        }

        let art_count = prepared.iter().filter(|p| p.basic_slack.is_none()).count();
        let total = base_cols + art_count;
        lo.extend(std::iter::repeat_n(Rational::ZERO, art_count));
        up.extend(std::iter::repeat_n(None, art_count));

        let mut rows = Vec::with_capacity(prepared.len());
        let mut beta = Vec::with_capacity(prepared.len());
        let mut basis = Vec::with_capacity(prepared.len());
        let mut next_art = base_cols;
        for mut p in prepared {
            p.dense.resize(total, Rational::ZERO);
            let b = match p.basic_slack {
                Some(s) => s,
                None => {
                    p.dense[next_art] = Rational::ONE;
                    next_art += 1;
                    next_art - 1
                }
            };
            rows.push(p.dense);
            beta.push(p.rhs);
            basis.push(b);
        }
        // beta holds shifted values so far; make them absolute (basic slacks
        // and artificials all have lower bound zero, so this is a no-op).
        let mut is_basic = vec![false; total];
        for &b in &basis {
            is_basic[b] = true;
        }

        let mut cost = lp.objective.clone();
        cost.resize(total, Rational::ZERO);
        let mut t = Tableau {
            rows,
            beta,
            basis,
            is_basic,
            lo,
            up,
            at_upper: vec![false; total],
            d: vec![Rational::ZERO; total],
            cost,
            structural: n,
            pivots: 0,
        };

        if art_count > 0 {
            let mut phase1 = vec![Rational::ZERO; total];
            for c in phase1.iter_mut().skip(base_cols) {
                *c = -Rational::ONE;
            }
            t.reset_reduced_costs(&phase1);
            if t.primal(limit)? == Status::Unbounded {
                unreachable!("phase one objective is bounded above by zero");
            }
            let infeasible = t
                .basis
                .iter()
                .zip(&t.beta)
                .any(|(&b, v)| b >= base_cols && v.is_positive());
            if infeasible {
                return Ok((Status::Infeasible, None));
            }
            t.drive_out_artificials(base_cols);
            t.truncate_columns(base_cols);
        }
        let cost = t.cost.clone();
        t.reset_reduced_costs(&cost);
        match t.primal(limit)? {
            Status::Optimal => Ok((Status::Optimal, Some(t))),
            other => Ok((other, None)),
        }
    }

    fn reset_reduced_costs(&mut self, c: &[Rational]) {
        let mut d = c.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                if !a.is_zero() {
                    *dj = dj.sub_mul(cb, a);
                }
            }
        }
        self.d = d;
    }

    fn drive_out_artificials(&mut self, base_cols: usize) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < base_cols {
                r += 1;
                continue;
            }
            let col = (0..base_cols).find(|&j| !self.is_basic[j] && !self.rows[r][j].is_zero());
            match col {
                Some(j) => {
                    // Degenerate exchange: the point does not move.
                    let value = self.nonbasic_value(j);
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.beta[r] = value;
                    self.at_upper[leaving] = false;
                    r += 1;
                }
                None => {
                    // Redundant row.
                    let leaving = self.basis[r];
                    self.is_basic[leaving] = false;
                    self.rows.remove(r);
                    self.beta.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }

    fn truncate_columns(&mut self, keep: usize) {
        for row in &mut self.rows {
            row.truncate(keep);
        }
        self.lo.truncate(keep);
        self.up.truncate(keep);
        self.at_upper.truncate(keep);
        self.is_basic.truncate(keep);
        self.d.truncate(keep);
        self.cost.truncate(keep);
    }

    fn nonbasic_value(&self, j: usize) -> Rational {
        if self.at_upper[j] {
            self.up[j].clone().expect("at_upper implies a finite upper bound")
        } else {
            self.lo[j].clone()
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.up[j].as_ref() == Some(&self.lo[j])
    }

    fn pivot(&mut self, r: usize, j: usize) {
        self.pivots += 1;
        let piv = self.rows[r][j].clone();
        let mut nz = Vec::new();
        {
            let row = &mut self.rows[r];
            for (k, v) in row.iter_mut().enumerate() {
                if !v.is_zero() {
                    if piv != Rational::ONE {
                        *v = &*v / &piv;
                    }
                    nz.push(k);
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j].clone();
            if f.is_zero() {
                continue;
            }
            for &k in &nz {
                row[k] = row[k].sub_mul(&f, &pivot_row[k]);
            }
        }
        let f = self.d[j].clone();
        if !f.is_zero() {
            for &k in &nz {
                self.d[k] = self.d[k].sub_mul(&f, &pivot_row[k]);
            }
        }
        self.rows[r] = pivot_row;
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Primal simplex (maximization) from a primal feasible basis.
    fn primal(&mut self, limit: usize) -> Result<Status, LpError> {
        let start = self.pivots;
        loop {
            if self.pivots - start > limit {
                return Err(LpError::PivotLimit(limit));
            }
            let entering = (0..self.d.len()).find(|&j| {
                !self.is_basic[j]
                    && !self.is_fixed(j)
                    && ((self.d[j].is_positive() && !self.at_upper[j]) || (self.d[j].is_negative() && self.at_upper[j]))
            });
            let Some(j) = entering else {
                return Ok(Status::Optimal);
            };
            let increasing = !self.at_upper[j];

            // (ratio, row or None for a bound flip, leaving hits its upper bound)
            let mut best: Option<(Rational, Option<usize>, bool)> =
                self.up[j].as_ref().map(|u| (u - &self.lo[j], None, false));
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if a.is_zero() {
                    continue;
                }
                let b = self.basis[i];
                // x_B moves by -rate per unit step of the entering variable.
                let decreasing = a.is_positive() == increasing;
                let rate = a.abs();
                let (limit_val, hits_upper) = if decreasing {
                    (&(&self.beta[i] - &self.lo[b]) / &rate, false)
                } else {
                    match &self.up[b] {
                        Some(u) => (&(u - &self.beta[i]) / &rate, true),
                        None => continue,
                    }
                };
                let better = match &best {
                    None => true,
                    Some((v, row, _)) => limit_val < *v || (limit_val == *v && row.is_some_and(|r| b < self.basis[r])),
                };
                if better {
                    best = Some((limit_val, Some(i), hits_upper));
                }
            }
            let Some((theta, row, hits_upper)) = best else {
                return Ok(Status::Unbounded);
            };

            let step = if increasing { theta.clone() } else { -&theta };
            if !step.is_zero() {
                for i in 0..self.rows.len() {
                    let a = &self.rows[i][j];
                    if !a.is_zero() {
                        self.beta[i] = self.beta[i].sub_mul(a, &step);
                    }
                }
            }
            match row {
                None => {
                    self.pivots += 1;
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some(r) => {
                    let entering_value = &self.nonbasic_value(j) + &step;
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                    self.at_upper[leaving] = hits_upper;
                    self.at_upper[j] = false;
                }
            }
        }
    }

    /// Dual simplex from a dual feasible basis until primal feasibility.
    ///
    /// With `cutoff`, stops as soon as the objective (an upper bound on the
    /// LP optimum while the basis is dual feasible) is at most the cutoff.
    pub(crate) fn dual(&mut self, limit: usize, cutoff: Option<&Rational>) -> Result<DualEnd, LpError> {
        let start = self.pivots;
        loop {
            if let Some(c) = cutoff {
                if &self.objective() <= c {
                    return Ok(DualEnd::Cutoff);
                }
            }
            if self.pivots - start > limit {
                return Err(LpError::PivotLimit(limit));
            }
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.rows.len() {
                let b = self.basis[i];
                let below = self.beta[i] < self.lo[b];
                let above = self.up[b].as_ref().is_some_and(|u| &self.beta[i] > u);
                if (below || above) && leave.is_none_or(|(r, _)| b < self.basis[r]) {
                    leave = Some((i, above));
                }
            }
            let Some((r, above)) = leave else {
                return Ok(DualEnd::Feasible);
            };
            let target = if above {
                self.up[self.basis[r]].clone().expect("above implies finite upper")
            } else {
                self.lo[self.basis[r]].clone()
            };

            let mut best: Option<(Rational, usize)> = None;
            for j in 0..self.d.len() {
                if self.is_basic[j] || self.is_fixed(j) {
                    continue;
                }
                let a = &self.rows[r][j];
                if a.is_zero() {
                    continue;
                }
                // x_B = beta - a·Δx_j; pick columns that move x_B toward target.
                let can_increase = !self.at_upper[j];
                let needed_increase = if above { a.is_positive() } else { a.is_negative() };
                if can_increase != needed_increase {
                    continue;
                }
                let ratio = &self.d[j].abs() / &a.abs();
                if best.as_ref().is_none_or(|(v, _)| ratio < *v) {
                    best = Some((ratio, j));
                }
            }
            let Some((_, j)) = best else {
                return Ok(DualEnd::Infeasible);
            };
            let step = &(&self.beta[r] - &target) / &self.rows[r][j];
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    self.beta[i] = self.beta[i].sub_mul(a, &step);
                }
            }
            let entering_value = &self.nonbasic_value(j) + &step;
            let leaving = self.basis[r];
            self.pivot(r, j);
            self.beta[r] = entering_value;
            self.at_upper[leaving] = above;
            self.at_upper[j] = false;
        }
    }

    /// Re-optimize after bound changes: dual simplex, then a primal pass.
    pub(crate) fn reoptimize(&mut self, limit: usize, cutoff: Option<&Rational>) -> Result<DualEnd, LpError> {
        match self.dual(limit, cutoff)? {
            DualEnd::Feasible => {}
            other => return Ok(other),
        }
        match self.primal(limit)? {
            Status::Optimal => Ok(DualEnd::Feasible),
            _ => unreachable!("a bounded LP stays bounded under tighter bounds"),
        }
    }

    /// Tighten the bounds of a structural column, keeping `beta` consistent.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: Rational, up: Option<Rational>) {
        if self.is_basic[j] {
            self.lo[j] = lo;
            self.up[j] = up;
            return;
        }
        let old = self.nonbasic_value(j);
        self.lo[j] = lo;
        self.up[j] = up;
        if self.at_upper[j] && self.up[j].is_none() {
            self.at_upper[j] = false;
        }
        let new = self.nonbasic_value(j);
        let delta = &new - &old;
        if !delta.is_zero() {
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    self.beta[i] = self.beta[i].sub_mul(a, &delta);
                }
            }
        }
    }

    pub(crate) fn bounds(&self, j: usize) -> (&Rational, Option<&Rational>) {
        (&self.lo[j], self.up[j].as_ref())
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut x: Vec<Rational> = (0..self.d.len())
            .map(|j| {
                if self.is_basic[j] {
                    Rational::ZERO
                } else {
                    self.nonbasic_value(j)
                }
            })
            .collect();
        for (b, v) in self.basis.iter().zip(&self.beta) {
            x[*b] = v.clone();
        }
        x
    }

    /// Values of the structural variables.
    pub(crate) fn values(&self) -> Vec<Rational> {
        let mut x = self.column_values();
        x.truncate(self.structural);
        x
    }

    pub(crate) fn objective(&self) -> Rational {
        self.column_values()
            .iter()
            .zip(&self.cost)
            .fold(
                Rational::ZERO,
                |acc, (v, c)| if c.is_zero() { acc } else { &acc + &(c * v) },
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        Rational::integer(v)
    }

    fn optimal(lp: &LinearProgram) -> (Vec<Rational>, Rational) {
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), None, r(3));
        let y = lp.add_var(r(0), None, r(5));
        lp.add_constraint(vec![(x, r(1))], Relation::Le, r(4));
        lp.add_constraint(vec![(y, r(2))], Relation::Le, r(12));
        lp.add_constraint(vec![(x, r(3)), (y, r(2))], Relation::Le, r(18));
        let (sol, obj) = optimal(&lp);
        assert_eq!(sol, vec![r(2), r(6)]);
        assert_eq!(obj, r(36));
    }

    #[test]
    fn fractional_optimum_is_exact() {
        // max x + y, 2x + y ≤ 4, x + 2y ≤ 4 → (4/3, 4/3)
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), None, r(1));
        let y = lp.add_var(r(0), None, r(1));
        lp.add_constraint(vec![(x, r(2)), (y, r(1))], Relation::Le, r(4));
        lp.add_constraint(vec![(x, r(1)), (y, r(2))], Relation::Le, r(4));
        let (sol, obj) = optimal(&lp);
        assert_eq!(sol, vec![Rational::new(4, 3), Rational::new(4, 3)]);
        assert_eq!(obj, Rational::new(8, 3));
    }

    #[test]
    fn phase_one_with_ge_and_eq_rows() {
        // max -x - y, x + y ≥ 3, x - y = 1, x ≤ 10 → (2, 1)
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), Some(r(10)), r(-1));
        let y = lp.add_var(r(0), None, r(-1));
        lp.add_constraint(vec![(x, r(1)), (y, r(1))], Relation::Ge, r(3));
        lp.add_constraint(vec![(x, r(1)), (y, r(-1))], Relation::Eq, r(1));
        let (sol, obj) = optimal(&lp);
        assert_eq!(sol, vec![r(2), r(1)]);
        assert_eq!(obj, r(-3));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), Some(r(1)), r(1));
        lp.add_constraint(vec![(x, r(1))], Relation::Ge, r(2));
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), None, r(1));
        let y = lp.add_var(r(0), None, r(0));
        lp.add_constraint(vec![(x, r(1)), (y, r(-1))], Relation::Le, r(1));
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn nonzero_lower_bounds_and_redundant_rows() {
        // max x + y, 2 ≤ x ≤ 3, 1 ≤ y ≤ 5, x + y = 6, 2x + 2y = 12
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(2), Some(r(3)), r(1));
        let y = lp.add_var(r(1), Some(r(5)), r(1));
        lp.add_constraint(vec![(x, r(1)), (y, r(1))], Relation::Eq, r(6));
        lp.add_constraint(vec![(x, r(2)), (y, r(2))], Relation::Eq, r(12));
        let (sol, obj) = optimal(&lp);
        assert_eq!(obj, r(6));
        assert!(lp.is_feasible(&sol));
    }

    #[test]
    fn warm_start_after_bound_change_matches_cold_solve() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(r(0), None, r(1));
        let y = lp.add_var(r(0), None, r(1));
        lp.add_constraint(vec![(x, r(2)), (y, r(1))], Relation::Le, r(4));
        lp.add_constraint(vec![(x, r(1)), (y, r(2))], Relation::Le, r(4));
        let (_, t) = Tableau::solve(&lp, DEFAULT_PIVOT_LIMIT).unwrap();
        let mut t = t.unwrap();
        t.set_bounds(x, r(0), Some(r(1)));
        assert_eq!(t.reoptimize(DEFAULT_PIVOT_LIMIT, None).unwrap(), DualEnd::Feasible);

        let mut cold = lp.clone();
        cold.upper[x] = Some(r(1));
        let (sol, obj) = optimal(&cold);
        assert_eq!(t.objective(), obj);
        assert_eq!(t.values(), sol);
    }
}
