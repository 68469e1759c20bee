//! Optimal transmission switching under polyhedral wind uncertainty.
//!
//! The crate builds and solves four interchangeable formulations of the OTS
//! problem — deterministic MILP, sample-average approximation, primal
//! linear-decision-rule dualization and a dual-LDR lower bound — on top of a
//! self-contained bounded-variable simplex with branch and bound, and ships
//! the evaluation harnesses (out-of-sample replay, bound gaps, size/time
//! scaling) used to compare them.

pub mod error;
pub mod evaluation;
pub mod formulation;
pub mod ingest;
pub mod network;
pub mod program;
pub mod solver;
pub mod uncertainty;

pub use error::{Error, Result};
pub use program::{Block, LinExpr, MathProgram, ProgramMeta, Sense, VarKind};
pub use solver::{SolveReport, SolveStatus, SolverConfig};
