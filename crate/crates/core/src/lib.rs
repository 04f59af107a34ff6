//! Local solvers for ℓ1-regularized personalized PageRank on sparse graphs,
//! with synthetic instance generators, optimality diagnostics and parameter
//! sweeps.

// Negated comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod objective;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod solver;
mod sparse;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{build_from_edges, parse_snap_edgelist, Adjacency, Graph, IngestedGraph, NodeSet};
pub use objective::{ProblemParams, SparseVector};
pub use solver::{solve, Method, Solution, SolveTrace, SolverConfig, TraceLevel};
