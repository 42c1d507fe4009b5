//! Carry-out workload bounds from an exactly solved integer program.

mod memo;
mod model;
mod solve;

pub use memo::{carry_out_above, carry_out_bound, carry_out_upper, chain_cover, memo_stats, CarryOutMemo, MemoStats};
pub use model::{build_model, BigM, CarryOutModel, Formulation, ModelOptions, VarKind};
pub use solve::{
    asap_window_workload, brute_force_oracle, solve_exact, solve_with, CarryOutError, Outcome, SolveOptions,
    SolveResult, SolveStats, VertexAssignment, ORACLE_LIMIT,
};

use crate::lp::format::{write_lp, write_mps, Names};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Lp,
    Mps,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(ExportFormat::Lp),
            "mps" => Ok(ExportFormat::Mps),
            other => Err(format!("unknown model format {other:?} (expected lp or mps)")),
        }
    }
}

/// Variable names of a model, `X0 W0 S0 M0 A0 X1 ...`.
pub fn variable_names(model: &CarryOutModel) -> Vec<String> {
    (0..model.num_vars()).map(|j| model.var_name(j)).collect()
}

pub fn row_names(model: &CarryOutModel) -> Vec<String> {
    model.row_tags.iter().map(|t| t.name()).collect()
}

pub fn export_model(model: &CarryOutModel, format: ExportFormat) -> String {
    let vars = variable_names(model);
    let rows = row_names(model);
    let names = Names {
        vars: &vars,
        rows: &rows,
    };
    let nd = model.normalized();
    match format {
        ExportFormat::Lp => {
            let comment = format!(
                "carry-out model: window {}, {} vertices (source {}, sink {}), {:?}, {:?}",
                model.delta(),
                model.vertex_count(),
                nd.source,
                nd.sink,
                model.options().formulation,
                model.options().big_m,
            );
            write_lp(model.milp(), &names, &comment)
        }
        ExportFormat::Mps => write_mps(model.milp(), &names, &format!("carryout_w{}", model.delta())),
    }
}
