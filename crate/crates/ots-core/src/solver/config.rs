//! Centralized solver tolerances and limits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Primal feasibility tolerance (scaled space).
    pub feas_tol: f64,
    /// Dual feasibility / optimality tolerance.
    pub opt_tol: f64,
    /// Integrality tolerance on binary variables.
    pub int_tol: f64,
    /// Relative MILP incumbent/bound gap for termination.
    pub milp_gap: f64,
    /// Total simplex iteration cap per solve (all phases and nodes).
    pub iter_limit: u64,
    /// Branch-and-bound node cap.
    pub node_limit: u64,
    /// Pivots between basis refactorizations.
    pub refactor_every: usize,
    /// Record per-node best-bound history in MILP reports.
    pub record_bound_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-8,
            opt_tol: 1e-8,
            int_tol: 1e-9,
            milp_gap: 1e-6,
            iter_limit: 5_000_000,
            node_limit: 1_000_000,
            refactor_every: 100,
            record_bound_history: false,
        }
    }
}
