//! Program builders: deterministic OTS, scenario (SAA) form, primal LDR
//! dualization, dual-LDR lower bound and the exact vertex oracle.
//!
//! All builders share the first-stage switching block and emit programs in
//! per-unit with objective coefficients scaled by base MVA, so objective
//! values read directly in $/h.

mod ldr;
mod policy;
mod robust;
mod stochastic;

pub use ldr::{build_dual_ldr, build_primal_ldr};
pub use policy::{
    extract_policy, first_stage_from_report, policy_violation, AffinePolicy, FirstStage,
};
pub use robust::{relax_moments, robustify_le, split_equality, RobustRow};
pub use stochastic::{
    build_saa, exact_vertex_oracle, exact_vertex_oracle_program, saa_base_rows,
    saa_rows_per_scenario, ObjectiveWeighting,
};

use crate::network::{Grid, NetworkOperators};
use crate::program::{Block, LinExpr, MathProgram, Sense, VarKind, Variable};

/// Handles to the first-stage decision blocks of any OTS program.
#[derive(Debug, Clone)]
pub struct FirstStageBlocks {
    pub g: Block,
    pub theta: Block,
    pub f: Block,
    pub z: Block,
    /// Line index -> position inside the z block (switchable lines only).
    pub zpos: Vec<Option<usize>>,
}

/// Generation, angle, flow and switching variables plus the deterministic
/// constraint block: switched flow bounds, nodal balance with nominal wind,
/// the big-M flow-definition pair and the open-line budget.
pub(crate) fn add_first_stage(
    prog: &mut MathProgram,
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
) -> FirstStageBlocks {
    let n = grid.n_bus();
    let l = grid.n_line();

    let gvars: Vec<Variable> = grid
        .gens
        .iter()
        .enumerate()
        .map(|(i, gen)| Variable {
            name: format!("g{i}"),
            lb: gen.g_min,
            ub: gen.g_max,
            kind: VarKind::Continuous,
        })
        .collect();
    let g = prog.add_named_block("g", gvars);

    let tvars: Vec<Variable> = (0..n)
        .map(|i| {
            let (lb, ub) = if i == grid.ref_bus {
                (0.0, 0.0)
            } else {
                (grid.theta_min[i], grid.theta_max[i])
            };
            Variable { name: format!("th{i}"), lb, ub, kind: VarKind::Continuous }
        })
        .collect();
    let theta = prog.add_named_block("theta", tvars);

    let fvars: Vec<Variable> = grid
        .lines
        .iter()
        .enumerate()
        .map(|(e, line)| Variable {
            name: format!("f{e}"),
            lb: line.f_min,
            ub: line.f_max,
            kind: VarKind::Continuous,
        })
        .collect();
    let f = prog.add_named_block("f", fvars);

    let switchable = grid.switchable_lines();
    let zvars: Vec<Variable> = switchable
        .iter()
        .map(|&e| Variable { name: format!("z{e}"), lb: 0.0, ub: 1.0, kind: VarKind::Binary })
        .collect();
    let z = prog.add_named_block("z", zvars);
    let mut zpos = vec![None; l];
    for (pos, &e) in switchable.iter().enumerate() {
        zpos[e] = Some(pos);
    }

    // Switched flow bounds (open line -> zero flow).
    for (pos, &e) in switchable.iter().enumerate() {
        let line = &grid.lines[e];
        let mut lo = LinExpr::new();
        lo.add(f.var(e), 1.0).add(z.var(pos), -line.f_min);
        prog.add_row(format!("fsw_lo_{e}"), lo, Sense::Ge, 0.0);
        let mut hi = LinExpr::new();
        hi.add(f.var(e), 1.0).add(z.var(pos), -line.f_max);
        prog.add_row(format!("fsw_hi_{e}"), hi, Sense::Le, 0.0);
    }

    // Nodal balance with nominal wind folded into the net load.
    add_balance_rows(
        prog,
        grid,
        "bal",
        |e| LinExpr::term(f.var(e), 1.0),
        |i| LinExpr::term(g.var(i), 1.0),
        |_| 0.0,
    );

    // Flow definition through the big-M pair (switchable) or directly.
    for (e, line) in grid.lines.iter().enumerate() {
        let m = ops.m_diag[e];
        let mut base = LinExpr::new();
        base.add(theta.var(line.from), line.b);
        base.add(theta.var(line.to), -line.b);
        base.add(f.var(e), -1.0);
        match zpos[e] {
            Some(pos) => {
                let mut up = base.clone();
                up.add(z.var(pos), m);
                prog.add_row(format!("fdef_hi_{e}"), up, Sense::Le, m);
                let mut dn = base;
                dn.add(z.var(pos), -m);
                prog.add_row(format!("fdef_lo_{e}"), dn, Sense::Ge, -m);
            }
            None => {
                prog.add_row(format!("fdef_{e}"), base, Sense::Eq, 0.0);
            }
        }
    }

    // Open-line budget over the switchable set.
    if !switchable.is_empty() {
        let mut e = LinExpr::new();
        for pos in 0..switchable.len() {
            e.add(z.var(pos), 1.0);
        }
        let min_closed = switchable.len() as f64 - max_open as f64;
        prog.add_row("open_budget", e, Sense::Ge, min_closed);
    }

    FirstStageBlocks { g, theta, f, z, zpos }
}

/// Nodal balance rows: sum(flow terms) = sum(gen terms) - d + F xi_hat
/// + extra(bus). `flow_of` and `gen_of` yield the per-line / per-generator
/// expressions so scenario blocks can reuse this for recourse totals;
/// `extra` carries per-scenario wind deviations.
pub(crate) fn add_balance_rows(
    prog: &mut MathProgram,
    grid: &Grid,
    tag: &str,
    flow_of: impl Fn(usize) -> LinExpr,
    gen_of: impl Fn(usize) -> LinExpr,
    extra: impl Fn(usize) -> f64,
) {
    let n = grid.n_bus();
    let mut rows: Vec<LinExpr> = (0..n).map(|_| LinExpr::new()).collect();
    for (e, line) in grid.lines.iter().enumerate() {
        let fe = flow_of(e);
        rows[line.from].add_expr(&fe, 1.0);
        rows[line.to].add_expr(&fe, -1.0);
    }
    for (i, gen) in grid.gens.iter().enumerate() {
        rows[gen.bus].add_expr(&gen_of(i), -1.0);
    }
    for (bus, expr) in rows.into_iter().enumerate() {
        let mut rhs = -grid.load[bus] + extra(bus);
        for w in &grid.wind {
            if w.bus == bus {
                rhs += w.nominal;
            }
        }
        prog.add_row(format!("{tag}_{bus}"), expr, Sense::Eq, rhs);
    }
}

/// Generation cost in $/h: sum_i c_i * base_mva * g_i.
pub(crate) fn add_generation_cost(prog: &mut MathProgram, grid: &Grid, g: Block) {
    for (i, gen) in grid.gens.iter().enumerate() {
        prog.set_objective_term(g.var(i), gen.cost_c * grid.base_mva);
    }
}

/// Reserve cost in $/h with a common scalar multiplier on gamma
/// (either mean total deviation or 1^T mu).
pub(crate) fn add_reserve_cost(prog: &mut MathProgram, grid: &Grid, gamma: Block, scale: f64) {
    if scale == 0.0 {
        return;
    }
    for (i, gen) in grid.gens.iter().enumerate() {
        prog.set_objective_term(gamma.var(i), gen.cost_q * grid.base_mva * scale);
    }
}

/// AGC coefficient block: free on eligible generators, pinned to zero
/// otherwise.
pub(crate) fn add_gamma_block(prog: &mut MathProgram, grid: &Grid) -> Block {
    let vars: Vec<Variable> = grid
        .gens
        .iter()
        .enumerate()
        .map(|(i, gen)| {
            let (lb, ub) = if gen.agc {
                (-f64::INFINITY, f64::INFINITY)
            } else {
                (0.0, 0.0)
            };
            Variable { name: format!("gam{i}"), lb, ub, kind: VarKind::Continuous }
        })
        .collect();
    prog.add_named_block("gamma", vars)
}

/// Deterministic OTS MILP over (g, theta, f, z).
pub fn build_deterministic(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
) -> MathProgram {
    let mut prog = MathProgram::new("deterministic");
    let fs = add_first_stage(&mut prog, grid, ops, max_open);
    add_generation_cost(&mut prog, grid, fs.g);
    prog.seal();
    prog
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_operators;
    use crate::solver::{solve_milp, SolveStatus, SolverConfig};

    #[test]
    fn two_bus_forced_dispatch() {
        let case = test_cases::two_bus(0);
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let prog = build_deterministic(&grid, &ops, 0);
        prog.validate().unwrap();
        let r = solve_milp(&prog, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 10.0).abs() < 1e-8, "obj {}", r.objective);
        assert_eq!(r.z, vec![1.0]);
        let f = r.block_values("f").unwrap();
        assert!((f[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn opening_is_optional_under_budget() {
        // max_open = 1, but opening the only line makes the load unservable;
        // the budget row is a lower bound on closed lines, so z = 1 stays
        // feasible and optimal.
        let case = test_cases::two_bus(1);
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let prog = build_deterministic(&grid, &ops, 1);
        let r = solve_milp(&prog, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.z, vec![1.0]);
        assert!((r.objective - 10.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_row_count_formula() {
        // All-switchable grid: rows = 4L + N + 1 with bounds folded.
        let case = test_cases::two_bus(0);
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let prog = build_deterministic(&grid, &ops, 0);
        let (n, l) = (grid.n_bus(), grid.n_line());
        assert_eq!(prog.metadata.n_rows, 4 * l + n + 1);
        assert_eq!(prog.metadata.n_vars_bin, grid.switchable_lines().len());
    }
}
