//! Scenario-based two-stage programs: the sample-average form and the exact
//! vertex oracle for box supports.

use crate::error::{Error, Result};
use crate::formulation::{
    add_balance_rows, add_first_stage, add_gamma_block, add_generation_cost, add_reserve_cost,
};
use crate::network::{Grid, NetworkOperators};
use crate::program::{LinExpr, MathProgram, Sense, VarKind, Variable};
use crate::solver::{solve_milp, SolveReport, SolverConfig};
use crate::uncertainty::UncertaintyPolytope;

/// How the reserve cost q . gamma is weighted in the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveWeighting {
    /// Average total deviation over the scenario set (SAA).
    ScenarioMean,
    /// Mean of the support distribution (exact/oracle form).
    SupportMean,
}

/// Two-stage program with one recourse block per scenario. Recourse angles
/// and flows are modeled as totals (theta + theta', f + f') so the box
/// constraints fold into variable bounds; reported recourse values are the
/// deltas.
pub fn build_scenario_program(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
    scenarios: &[Vec<f64>],
    weighting: ObjectiveWeighting,
    name: &str,
) -> Result<MathProgram> {
    if scenarios.is_empty() {
        return Err(Error::Program("scenario set must be non-empty".to_string()));
    }
    let uncertain = grid.uncertain_wind();
    for (s, xi) in scenarios.iter().enumerate() {
        if xi.len() != poly.dim() || xi.len() != uncertain.len() {
            return Err(Error::Program(format!(
                "scenario {s} has dimension {} but the support has {}",
                xi.len(),
                poly.dim()
            )));
        }
        if !poly.contains(xi, 1e-12) {
            let v = (0..poly.n_halfspaces())
                .map(|r| {
                    (0..poly.dim()).map(|c| poly.s[(r, c)] * xi[c]).sum::<f64>() - poly.t[r]
                })
                .fold(0.0f64, f64::max);
            return Err(Error::ScenarioOutsideSupport { index: s, violation: v });
        }
    }

    let mut prog = MathProgram::new(name);
    let fs = add_first_stage(&mut prog, grid, ops, max_open);
    let gamma = add_gamma_block(&mut prog, grid);

    let n = grid.n_bus();
    let l = grid.n_line();
    for (s, xi) in scenarios.iter().enumerate() {
        let u: f64 = xi.iter().sum();

        let tvars: Vec<Variable> = (0..n)
            .map(|i| {
                let (lb, ub) = if i == grid.ref_bus {
                    (0.0, 0.0)
                } else {
                    (grid.theta_min[i], grid.theta_max[i])
                };
                Variable { name: format!("tau{s}_{i}"), lb, ub, kind: VarKind::Continuous }
            })
            .collect();
        let tau = prog.add_named_block(&format!("tau{s}"), tvars);

        let fvars: Vec<Variable> = grid
            .lines
            .iter()
            .enumerate()
            .map(|(e, line)| Variable {
                name: format!("phi{s}_{e}"),
                lb: line.f_min,
                ub: line.f_max,
                kind: VarKind::Continuous,
            })
            .collect();
        let phi = prog.add_named_block(&format!("phi{s}"), fvars);

        // Reserve limits and adjusted generation bounds.
        for (i, gen) in grid.gens.iter().enumerate() {
            let mut lo = LinExpr::term(gamma.var(i), u);
            prog.add_row(format!("rsv_lo{s}_{i}"), lo.clone(), Sense::Ge, gen.r_minus);
            prog.add_row(format!("rsv_hi{s}_{i}"), std::mem::take(&mut lo), Sense::Le, gen.r_plus);

            let mut tot = LinExpr::new();
            tot.add(fs.g.var(i), 1.0).add(gamma.var(i), u);
            prog.add_row(format!("gadj_lo{s}_{i}"), tot.clone(), Sense::Ge, gen.g_min);
            prog.add_row(format!("gadj_hi{s}_{i}"), tot, Sense::Le, gen.g_max);
        }

        // Switched recourse flow bounds.
        for (e, line) in grid.lines.iter().enumerate() {
            if let Some(pos) = fs.zpos[e] {
                let mut lo = LinExpr::new();
                lo.add(phi.var(e), 1.0).add(fs.z.var(pos), -line.f_min);
                prog.add_row(format!("phisw_lo{s}_{e}"), lo, Sense::Ge, 0.0);
                let mut hi = LinExpr::new();
                hi.add(phi.var(e), 1.0).add(fs.z.var(pos), -line.f_max);
                prog.add_row(format!("phisw_hi{s}_{e}"), hi, Sense::Le, 0.0);
            }
        }

        // Recourse balance with the scenario's wind deviation.
        let mut extra = vec![0.0f64; n];
        for (kk, &w) in uncertain.iter().enumerate() {
            extra[grid.wind[w].bus] += xi[kk];
        }
        add_balance_rows(
            &mut prog,
            grid,
            &format!("rbal{s}"),
            |e| LinExpr::term(phi.var(e), 1.0),
            |i| {
                let mut ge = LinExpr::term(fs.g.var(i), 1.0);
                ge.add(gamma.var(i), u);
                ge
            },
            |bus| extra[bus],
        );

        // Recourse flow definition through the same big-M pair.
        for (e, line) in grid.lines.iter().enumerate() {
            let m = ops.m_diag[e];
            let mut base = LinExpr::new();
            base.add(tau.var(line.from), line.b);
            base.add(tau.var(line.to), -line.b);
            base.add(phi.var(e), -1.0);
            match fs.zpos[e] {
                Some(pos) => {
                    let mut up = base.clone();
                    up.add(fs.z.var(pos), m);
                    prog.add_row(format!("rfdef_hi{s}_{e}"), up, Sense::Le, m);
                    let mut dn = base;
                    dn.add(fs.z.var(pos), -m);
                    prog.add_row(format!("rfdef_lo{s}_{e}"), dn, Sense::Ge, -m);
                }
                None => {
                    prog.add_row(format!("rfdef{s}_{e}"), base, Sense::Eq, 0.0);
                }
            }
        }
        let _ = l;
    }

    add_generation_cost(&mut prog, grid, fs.g);
    let scale = match weighting {
        ObjectiveWeighting::ScenarioMean => {
            scenarios.iter().map(|xi| xi.iter().sum::<f64>()).sum::<f64>()
                / scenarios.len() as f64
        }
        ObjectiveWeighting::SupportMean => poly.mu.iter().sum(),
    };
    add_reserve_cost(&mut prog, grid, gamma, scale);

    prog.metadata.scenario_count = Some(scenarios.len());
    prog.seal();
    Ok(prog)
}

/// Sample-average approximation of the two-stage OTS problem.
pub fn build_saa(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
    scenarios: &[Vec<f64>],
) -> Result<MathProgram> {
    build_scenario_program(
        grid,
        ops,
        max_open,
        poly,
        scenarios,
        ObjectiveWeighting::ScenarioMean,
        "saa",
    )
}

/// Exact desk-scale solution of the two-stage problem under a box support:
/// recourse feasibility at every box vertex is equivalent to feasibility on
/// the whole box (the feasible-xi set is a polyhedral projection, hence
/// convex), and the objective only involves the support mean.
pub fn exact_vertex_oracle_program(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
) -> Result<MathProgram> {
    let vertices = poly.vertices()?;
    build_scenario_program(
        grid,
        ops,
        max_open,
        poly,
        &vertices,
        ObjectiveWeighting::SupportMean,
        "vertex_oracle",
    )
}

/// Solve the vertex oracle to optimality.
pub fn exact_vertex_oracle(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let prog = exact_vertex_oracle_program(grid, ops, max_open, poly)?;
    solve_milp(&prog, cfg)
}

/// Per-scenario constraint rows added by the builder; the scaling benchmark
/// checks the metadata against this closed form.
pub fn saa_rows_per_scenario(grid: &Grid) -> usize {
    let l_sw = grid.switchable_lines().len();
    let l_ns = grid.n_line() - l_sw;
    4 * grid.n_gen() + 2 * l_sw + grid.n_bus() + 2 * l_sw + l_ns
}

/// First-stage-only row count of the scenario form (deterministic block).
pub fn saa_base_rows(grid: &Grid) -> usize {
    let l_sw = grid.switchable_lines().len();
    let l_ns = grid.n_line() - l_sw;
    let budget = if l_sw > 0 { 1 } else { 0 };
    2 * l_sw + grid.n_bus() + 2 * l_sw + l_ns + budget
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_deterministic, test_cases};
    use crate::network::build_operators;
    use crate::solver::{SolveStatus, SolverConfig};

    #[test]
    fn zero_scenario_collapses_to_deterministic() {
        let case = test_cases::two_bus(0);
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let poly = UncertaintyPolytope::empty();
        let saa = build_saa(&grid, &ops, 0, &poly, &[vec![]]).unwrap();
        saa.validate().unwrap();
        let cfg = SolverConfig::default();
        let det = build_deterministic(&grid, &ops, 0);
        let r1 = solve_milp(&saa, &cfg).unwrap();
        let r2 = solve_milp(&det, &cfg).unwrap();
        assert_eq!(r1.status, SolveStatus::Optimal);
        assert!((r1.objective - r2.objective).abs() < 1e-9);
    }

    #[test]
    fn scenario_outside_support_rejected() {
        let mut case = test_cases::two_bus(0);
        case.wind.push(crate::ingest::case::WindSpec {
            bus: 1,
            nominal: 0.2,
            xi_min: -0.1,
            xi_max: 0.1,
        });
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let poly = UncertaintyPolytope::box_support(&[-0.1], &[0.1]).unwrap();
        match build_saa(&grid, &ops, 0, &poly, &[vec![0.2]]) {
            Err(Error::ScenarioOutsideSupport { index: 0, violation }) => {
                assert!(violation > 0.05);
            }
            other => panic!("expected support rejection, got {other:?}"),
        }
    }

    #[test]
    fn row_counts_affine_in_scenarios() {
        let mut case = test_cases::two_bus(0);
        case.wind.push(crate::ingest::case::WindSpec {
            bus: 1,
            nominal: 0.2,
            xi_min: -0.1,
            xi_max: 0.1,
        });
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let poly = UncertaintyPolytope::box_support(&[-0.1], &[0.1]).unwrap();
        let base = saa_base_rows(&grid);
        let slope = saa_rows_per_scenario(&grid);
        for s in [1usize, 3, 7] {
            let scen = poly.sample(s, 42).unwrap();
            let prog = build_saa(&grid, &ops, 0, &poly, &scen).unwrap();
            assert_eq!(prog.metadata.n_rows, base + s * slope, "s = {s}");
        }
    }

    #[test]
    fn symmetric_scenarios_with_zero_reserve_price() {
        // +/- v scenarios with q = 0: objective reduces to c^T g.
        let mut case = test_cases::two_bus(0);
        case.gens[0].q = 0.0;
        case.wind.push(crate::ingest::case::WindSpec {
            bus: 1,
            nominal: 0.3,
            xi_min: -0.2,
            xi_max: 0.2,
        });
        let grid = Grid::from_case(&case).unwrap();
        let ops = build_operators(&grid);
        let poly = UncertaintyPolytope::box_support(&[-0.2], &[0.2]).unwrap();
        let scen = vec![vec![-0.15], vec![0.15]];
        let prog = build_saa(&grid, &ops, 0, &poly, &scen).unwrap();
        let r = solve_milp(&prog, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        // Net load at bus 1 is 1.0 - 0.3 nominal; the AGC absorbs +/-0.15.
        let g = r.block_values("g").unwrap();
        let c = grid.gens[0].cost_c * grid.base_mva;
        assert!((r.objective - c * g[0]).abs() < 1e-9);
        // gamma must absorb the full imbalance: gamma = -1.
        let gam = r.block_values("gamma").unwrap();
        assert!((gam[0] + 1.0).abs() < 1e-7, "gamma {:?}", gam);
    }
}
