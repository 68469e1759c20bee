//! Dev probe: solve the pinned cases across methods and print decisions.

use ots_core::evaluation::bound_gap;
use ots_core::formulation::{build_deterministic, build_primal_ldr, build_saa};
use ots_core::ingest::parse_case;
use ots_core::network::{build_operators, Grid};
use ots_core::solver::{solve_milp, SolverConfig};
use ots_core::uncertainty::UncertaintyPolytope;
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("cases/case14_wind.json".into());
    let text = std::fs::read_to_string(&path).unwrap();
    let case = parse_case(&text).unwrap();
    let grid = Grid::from_case(&case).unwrap();
    let ops = build_operators(&grid);
    let cfg = SolverConfig::default();

    let uncertain = grid.uncertain_wind();
    let lo: Vec<f64> = uncertain.iter().map(|&w| grid.wind[w].xi_min).collect();
    let hi: Vec<f64> = uncertain.iter().map(|&w| grid.wind[w].xi_max).collect();
    let poly = UncertaintyPolytope::box_support(&lo, &hi).unwrap().with_mean(vec![0.0; lo.len()]);
    let sw = grid.switchable_lines();

    for max_open in 0..=4usize {
        let t = Instant::now();
        let det = solve_milp(&build_deterministic(&grid, &ops, max_open), &cfg).unwrap();
        println!(
            "det  Lo={max_open}: {:?} obj {:.1} open {:?} nodes {} iters {} {:.2}s",
            det.status, det.objective, det.open_lines(&sw), det.node_count, det.simplex_iters,
            t.elapsed().as_secs_f64()
        );
    }
    for max_open in 1..=4usize {
        let t = Instant::now();
        let prog = build_primal_ldr(&grid, &ops, max_open, &poly, &cfg).unwrap();
        let ldr = solve_milp(&prog, &cfg).unwrap();
        println!(
            "ldr  Lo={max_open}: {:?} obj {:.1} open {:?} nodes {} iters {} rows {} vars {} {:.2}s",
            ldr.status, ldr.objective, ldr.open_lines(&sw), ldr.node_count, ldr.simplex_iters,
            prog.metadata.n_rows, prog.metadata.n_vars_cont, t.elapsed().as_secs_f64()
        );
    }
    for max_open in 1..=2usize {
        let t = Instant::now();
        let scen = poly.sample(100, 20240501).unwrap();
        let prog = build_saa(&grid, &ops, max_open, &poly, &scen).unwrap();
        let saa = solve_milp(&prog, &cfg).unwrap();
        println!(
            "saa100 Lo={max_open}: {:?} obj {:.1} open {:?} nodes {} iters {} rows {} {:.2}s",
            saa.status, saa.objective, saa.open_lines(&sw), saa.node_count, saa.simplex_iters,
            prog.metadata.n_rows, t.elapsed().as_secs_f64()
        );
    }
    let t = Instant::now();
    let gap = bound_gap(&grid, &ops, 2, &poly, &cfg).unwrap();
    println!(
        "gap Lo=2: UB {:.2} LB {:.2} gap {:.3}% exact {:?} ({:.2}s)",
        gap.upper.objective,
        gap.lower.objective,
        gap.gap_percent,
        gap.exact.as_ref().map(|e| e.objective),
        t.elapsed().as_secs_f64()
    );
}
