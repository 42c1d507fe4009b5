//! Response-time analysis for sporadic DAG tasks under global fixed-priority
//! scheduling, with an integer-programming bound on carry-out workload.

#![allow(clippy::needless_range_loop)]

pub mod carryout;
pub mod dag;
pub mod experiment;
pub mod instances;
pub mod io;
pub mod lp;
pub mod rta;
pub mod sim;
pub mod task;
pub mod taskgen;
pub mod workload;

pub use dag::{Dag, DagError, Subtask};
pub use task::{DagTask, TaskError, TaskSet};
