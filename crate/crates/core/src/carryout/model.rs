//! The carry-out workload maximization as a mixed-integer linear program.
//!
//! For every vertex `a` of the (source/sink normalized) graph there are five
//! variables: execution time `X`, window workload `W`, start time `S`,
//! window headroom `M` and the binary `A` that is 1 when `a` may start
//! inside the window. The objective is `max Σ W`.

use crate::dag::{Dag, DagError, NormalizedDag, DEFAULT_PATH_CAP};
use crate::lp::{LinearProgram, Milp, Rational, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Formulation {
    /// `S_b ≥ S_a + X_a` for every edge `(a, b)`.
    #[default]
    EdgeRecursive,
    /// `S_a ≥ Σ_{v ∈ p, v ≠ a} X_v` for every source-to-`a` path `p`.
    PathEnumerated,
}

/// Constant used to switch off the window constraint when `A_a = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BigM {
    /// `B = L` for every vertex together with `S_a ≤ L`.
    Span,
    /// `B_a = max(Ŝ_a − Δ, 0)` together with `S_a ≤ Ŝ_a`, where `Ŝ_a` is the
    /// full-WCET ASAP start of `a`. `A_a` is fixed to 1 when `B_a = 0` and
    /// to 0 when `C_a = 0`.
    #[default]
    PerVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModelOptions {
    pub formulation: Formulation,
    pub big_m: BigM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    X,
    W,
    S,
    M,
    A,
}

impl VarKind {
    pub const ALL: [VarKind; 5] = [VarKind::X, VarKind::W, VarKind::S, VarKind::M, VarKind::A];

    fn offset(self) -> usize {
        match self {
            VarKind::X => 0,
            VarKind::W => 1,
            VarKind::S => 2,
            VarKind::M => 3,
            VarKind::A => 4,
        }
    }

    pub fn letter(self) -> char {
        match self {
            VarKind::X => 'X',
            VarKind::W => 'W',
            VarKind::S => 'S',
            VarKind::M => 'M',
            VarKind::A => 'A',
        }
    }
}

/// Row labels for export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RowTag {
    WleX(usize),
    WleM(usize),
    MleDeltaA(usize),
    Window(usize),
    Edge(usize, usize),
    Path(usize, usize),
}

impl RowTag {
    pub(crate) fn name(&self) -> String {
        match self {
            RowTag::WleX(a) => format!("wx{a}"),
            RowTag::WleM(a) => format!("wm{a}"),
            RowTag::MleDeltaA(a) => format!("ma{a}"),
            RowTag::Window(a) => format!("win{a}"),
            RowTag::Edge(a, b) => format!("e{a}_{b}"),
            RowTag::Path(a, k) => format!("p{a}_{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CarryOutModel {
    delta: u64,
    options: ModelOptions,
    normalized: NormalizedDag,
    span: u64,
    milp: Milp,
    pub(crate) row_tags: Vec<RowTag>,
}

/// Build the model for window length `delta`.
pub fn build_model(dag: &Dag, delta: u64, options: ModelOptions) -> Result<CarryOutModel, DagError> {
    let normalized = dag.normalize_source_sink();
    let g = &normalized.dag;
    let n = g.len();
    let span = g.span();
    let smax = g.wcet_start_times();
    let int = |v: u64| Rational::from(v);
    let big = |a: usize| match options.big_m {
        BigM::Span => span,
        BigM::PerVertex => smax[a].saturating_sub(delta),
    };

    let mut lp = LinearProgram::new();
    for a in 0..n {
        let c = g.wcet(a);
        let s_up = match options.big_m {
            BigM::Span => span,
            BigM::PerVertex => smax[a],
        };
        let s_up = if a == normalized.source { 0 } else { s_up };
        let (a_lo, a_up) = match options.big_m {
            BigM::PerVertex if c == 0 => (0, 0),
            BigM::PerVertex if big(a) == 0 => (1, 1),
            _ => (0, 1),
        };
        lp.add_var(int(0), Some(int(c)), Rational::ZERO); // X
        lp.add_var(int(0), Some(int(c)), Rational::ONE); // W
        lp.add_var(int(0), Some(int(s_up)), Rational::ZERO); // S
        lp.add_var(int(0), Some(int(delta)), Rational::ZERO); // M
        lp.add_var(int(a_lo), Some(int(a_up)), Rational::ZERO); // A
    }
    let var = |kind: VarKind, a: usize| 5 * a + kind.offset();
    let one = Rational::ONE;
    let neg = -Rational::ONE;

    let mut tags = Vec::new();
    for a in 0..n {
        lp.add_constraint(
            vec![(var(VarKind::W, a), one.clone()), (var(VarKind::X, a), neg.clone())],
            Relation::Le,
            Rational::ZERO,
        );
        tags.push(RowTag::WleX(a));
        lp.add_constraint(
            vec![(var(VarKind::W, a), one.clone()), (var(VarKind::M, a), neg.clone())],
            Relation::Le,
            Rational::ZERO,
        );
        tags.push(RowTag::WleM(a));
        lp.add_constraint(
            vec![(var(VarKind::M, a), one.clone()), (var(VarKind::A, a), -int(delta))],
            Relation::Le,
            Rational::ZERO,
        );
        tags.push(RowTag::MleDeltaA(a));
        // M + S + B·A ≤ Δ + B
        let b = big(a);
        let mut row = vec![(var(VarKind::M, a), one.clone()), (var(VarKind::S, a), one.clone())];
        if b > 0 {
            row.push((var(VarKind::A, a), int(b)));
        }
        lp.add_constraint(row, Relation::Le, int(delta + b));
        tags.push(RowTag::Window(a));
    }

    match options.formulation {
        Formulation::EdgeRecursive => {
            for &(a, b) in g.edges() {
                lp.add_constraint(
                    vec![
                        (var(VarKind::S, b), one.clone()),
                        (var(VarKind::S, a), neg.clone()),
                        (var(VarKind::X, a), neg.clone()),
                    ],
                    Relation::Ge,
                    Rational::ZERO,
                );
                tags.push(RowTag::Edge(a, b));
            }
        }
        Formulation::PathEnumerated => {
            for &a in g.topological_order() {
                if a == normalized.source {
                    continue;
                }
                for (k, path) in g.enumerate_paths(a, DEFAULT_PATH_CAP)?.iter().enumerate() {
                    let mut row = vec![(var(VarKind::S, a), one.clone())];
                    row.extend(
                        path[..path.len() - 1]
                            .iter()
                            .map(|&v| (var(VarKind::X, v), neg.clone())),
                    );
                    lp.add_constraint(row, Relation::Ge, Rational::ZERO);
                    tags.push(RowTag::Path(a, k));
                }
            }
        }
    }

    // A first, in topological order; then the remaining integers by index.
    let branch_order = g.topological_order().iter().map(|&a| var(VarKind::A, a)).collect();
    let milp = Milp {
        integer: vec![true; lp.num_vars()],
        branch_order,
        lp,
    };
    Ok(CarryOutModel {
        delta,
        options,
        normalized,
        span,
        milp,
        row_tags: tags,
    })
}

impl CarryOutModel {
    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    /// The normalized graph the model was built over.
    pub fn dag(&self) -> &Dag {
        &self.normalized.dag
    }

    pub fn normalized(&self) -> &NormalizedDag {
        &self.normalized
    }

    pub fn span(&self) -> u64 {
        self.span
    }

    pub fn vertex_count(&self) -> usize {
        self.normalized.dag.len()
    }

    pub fn milp(&self) -> &Milp {
        &self.milp
    }

    pub fn var(&self, kind: VarKind, vertex: usize) -> usize {
        5 * vertex + kind.offset()
    }

    pub fn var_name(&self, index: usize) -> String {
        format!("{}{}", VarKind::ALL[index % 5].letter(), index / 5)
    }

    pub fn num_vars(&self) -> usize {
        self.milp.lp.num_vars()
    }

    pub fn num_constraints(&self) -> usize {
        self.milp.lp.constraints.len()
    }

    /// A feasible point with every subtask at its WCET and ASAP start times.
    pub fn wcet_assignment(&self) -> Vec<Rational> {
        let g = &self.normalized.dag;
        let starts = g.wcet_start_times();
        let mut x = vec![Rational::ZERO; self.num_vars()];
        for a in 0..g.len() {
            let c = g.wcet(a);
            let s = starts[a];
            // A fixed to 1 implies s ≤ Δ.
            let fixed_off = self.milp.lp.upper[self.var(VarKind::A, a)] == Some(Rational::ZERO);
            let on = !fixed_off && s <= self.delta;
            let m = if on { self.delta - s.min(self.delta) } else { 0 };
            let w = if on { c.min(m) } else { 0 };
            x[self.var(VarKind::X, a)] = Rational::from(c);
            x[self.var(VarKind::W, a)] = Rational::from(w);
            x[self.var(VarKind::S, a)] = Rational::from(s);
            x[self.var(VarKind::M, a)] = Rational::from(m);
            x[self.var(VarKind::A, a)] = Rational::from(on as u64);
        }
        x
    }
}
