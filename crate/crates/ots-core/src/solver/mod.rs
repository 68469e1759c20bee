//! Solver engine: LP via bounded revised simplex with exact duals, MILP via
//! best-first branch and bound over the `z` block, and an exhaustive
//! enumeration oracle for small line counts.

mod config;
pub mod lu;
mod milp;
mod report;
mod simplex;
mod standard;

pub use config::SolverConfig;
pub use milp::{enumerate_milp, solve_milp};
pub use report::{lex_less, SolveReport, SolveStatus};
pub use standard::StandardLp;

use crate::error::{Error, Result};
use crate::program::{MathProgram, VarKind};
use simplex::{LpOutcome, LpStatus, Simplex};
use std::time::Instant;

/// Solve a pure LP (no binary variables) and report primal/dual values.
pub fn solve_lp(prog: &MathProgram, cfg: &SolverConfig) -> Result<SolveReport> {
    if prog.vars().iter().any(|v| v.kind == VarKind::Binary) {
        return Err(Error::Program(
            "solve_lp requires a program without binaries".to_string(),
        ));
    }
    let start = Instant::now();
    let std = StandardLp::from_program(prog);
    let mut sx = Simplex::new(&std, cfg);
    let out = sx.solve_from_scratch().map_err(|m| Error::Numerical { message: m })?;
    let mut report = outcome_to_report(prog, &std, &mut sx, out, true);
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn outcome_to_report(
    prog: &MathProgram,
    std: &StandardLp,
    sx: &mut Simplex,
    out: LpOutcome,
    with_duals: bool,
) -> SolveReport {
    let mut report = SolveReport::empty(match out.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::Infeasible => SolveStatus::Infeasible,
        LpStatus::Unbounded => SolveStatus::Unbounded,
        LpStatus::IterLimit => SolveStatus::IterLimit,
    });
    report.simplex_iters = sx.iterations;
    report.node_count = 1;
    report.blocks = prog.blocks().map(|(n, b)| (n.to_string(), b)).collect();
    match out.status {
        LpStatus::Optimal => {
            let xs = sx.primal_values();
            report.primal = std.unscale_primal(&xs);
            report.objective = prog.objective_value(&report.primal);
            if with_duals {
                let ys = sx.duals();
                let ds = sx.reduced_costs(&ys);
                report.dual_objective = Some(sx.dual_objective() + prog.obj_constant);
                report.duals = std.unscale_duals(&ys);
                report.reduced_costs = (0..std.nstruct)
                    .map(|j| ds[j] / std.col_scale[j])
                    .collect();
            }
            if let Some(zb) = prog.block("z") {
                report.z = report.primal[zb.start..zb.start + zb.len]
                    .iter()
                    .map(|v| v.round())
                    .collect();
            }
        }
        LpStatus::Infeasible => {
            if let Some(cert) = out.farkas_rows {
                report.farkas = Some(std.unscale_duals(&cert));
            }
        }
        _ => {}
    }
    report
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LinExpr, MathProgram, Sense, VarKind};

    fn lp1() -> MathProgram {
        // min -x s.t. x <= 3, x >= 0
        let mut p = MathProgram::new("lp1");
        let x = p.add_block("x", 1, 0.0, f64::INFINITY, VarKind::Continuous);
        p.set_objective_term(x.var(0), -1.0);
        p.add_row("cap", LinExpr::term(x.var(0), 1.0), Sense::Le, 3.0);
        p.seal();
        p
    }

    #[test]
    fn trivial_bounded_lp() {
        let cfg = SolverConfig::default();
        let r = solve_lp(&lp1(), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-9);
        assert!((r.primal[0] - 3.0).abs() < 1e-9);
        // Dual on the single row is -1.
        assert!((r.duals[0] + 1.0).abs() < 1e-9, "dual {}", r.duals[0]);
        let dual_obj = r.dual_objective.unwrap();
        assert!((dual_obj - r.objective).abs() <= 1e-8 * (1.0 + r.objective.abs()));
    }

    #[test]
    fn infeasible_pair_has_farkas_certificate() {
        // x <= 0 and x >= 1.
        let mut p = MathProgram::new("inf");
        let x = p.add_block("x", 1, -f64::INFINITY, f64::INFINITY, VarKind::Continuous);
        p.set_objective_term(x.var(0), 1.0);
        p.add_row("up", LinExpr::term(x.var(0), 1.0), Sense::Le, 0.0);
        p.add_row("lo", LinExpr::term(x.var(0), 1.0), Sense::Ge, 1.0);
        p.seal();
        let r = solve_lp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        let y = r.farkas.expect("certificate");
        // Normalized sense convention: y_le >= 0, y_ge <= 0 after flipping,
        // aggregated row has zero structural coefficients and positive gap.
        let combo = y[0] * 1.0 + y[1] * 1.0;
        assert!(combo.abs() < 1e-7, "y^T A = {combo}");
        let gap = y[0] * 0.0 + y[1] * 1.0;
        assert!(gap.abs() > 1e-9, "certificate gap {gap}");
    }

    #[test]
    fn unbounded_detected() {
        let mut p = MathProgram::new("unb");
        let x = p.add_block("x", 1, 0.0, f64::INFINITY, VarKind::Continuous);
        p.set_objective_term(x.var(0), -1.0);
        p.add_row("lo", LinExpr::term(x.var(0), 1.0), Sense::Ge, 1.0);
        p.seal();
        let r = solve_lp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + y s.t. x + y = 2, x - y = 0 -> x = y = 1.
        let mut p = MathProgram::new("eqfree");
        let v = p.add_block("v", 2, -f64::INFINITY, f64::INFINITY, VarKind::Continuous);
        p.set_objective_term(v.var(0), 1.0);
        p.set_objective_term(v.var(1), 1.0);
        let mut e1 = LinExpr::new();
        e1.add(v.var(0), 1.0).add(v.var(1), 1.0);
        p.add_row("sum", e1, Sense::Eq, 2.0);
        let mut e2 = LinExpr::new();
        e2.add(v.var(0), 1.0).add(v.var(1), -1.0);
        p.add_row("diff", e2, Sense::Eq, 0.0);
        p.seal();
        let r = solve_lp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal[0] - 1.0).abs() < 1e-9);
        assert!((r.primal[1] - 1.0).abs() < 1e-9);
    }
}
