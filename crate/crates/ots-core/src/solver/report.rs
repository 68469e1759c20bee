//! Solve reports: status, solution slices, duals and search statistics.

use crate::program::{Block, MathProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective in program units (includes the program constant).
    pub objective: f64,
    /// Primal values for every program variable, program order.
    pub primal: Vec<f64>,
    /// Block layout copied from the program, for slicing `primal`.
    pub blocks: Vec<(String, Block)>,
    /// Row duals (LP solves only; empty for MILP).
    pub duals: Vec<f64>,
    /// Reduced costs per variable (LP solves only).
    pub reduced_costs: Vec<f64>,
    /// Dual objective, for the strong-duality audit (LP solves only).
    pub dual_objective: Option<f64>,
    /// Incumbent binary block values (rounded), empty when no binaries.
    pub z: Vec<f64>,
    /// Infeasibility certificate over rows: y with y^T b > sup_{bounds} y^T A x.
    pub farkas: Option<Vec<f64>>,
    pub node_count: u64,
    pub simplex_iters: u64,
    pub wall_seconds: f64,
    /// Best-bound sequence per processed node (only when requested).
    pub bound_history: Vec<f64>,
}

impl SolveReport {
    pub fn empty(status: SolveStatus) -> SolveReport {
        SolveReport {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            blocks: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            dual_objective: None,
            z: Vec::new(),
            farkas: None,
            node_count: 0,
            simplex_iters: 0,
            wall_seconds: 0.0,
            bound_history: Vec::new(),
        }
    }

    /// Slice of the primal solution for a named block.
    pub fn block_values(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| &self.primal[b.start..b.start + b.len])
    }

    /// Open line positions (1-based) given the program's z block and the
    /// full line count: entries fixed or solved at 0.
    pub fn open_lines(&self, switchable: &[usize]) -> Vec<usize> {
        let mut open = Vec::new();
        for (k, &line) in switchable.iter().enumerate() {
            if let Some(z) = self.z.get(k) {
                if *z < 0.5 {
                    open.push(line + 1);
                }
            }
        }
        open
    }

    /// Recomputed objective from the primal vector, for the audit that the
    /// reported value matches to 1e-9 relative.
    pub fn recompute_objective(&self, prog: &MathProgram) -> f64 {
        prog.objective_value(&self.primal)
    }
}

/// Lexicographic order on open-line sets: shorter prefix wins ties.
pub fn lex_less(a: &[usize], b: &[usize]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    a.len() < b.len()
}
