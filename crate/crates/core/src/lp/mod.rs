//! Exact linear and mixed-integer programming.

pub mod format;
pub mod milp;
pub mod rational;
pub mod simplex;

pub use milp::{Milp, MilpError, MilpOptions, MilpSolution, MilpStats, MilpStatus};
pub use rational::Rational;
pub use simplex::{Constraint, LinearProgram, LpError, LpOutcome, Relation};
