//! End-to-end agreement of the four formulations on small wind cases:
//! the dual-LDR value never exceeds the exact two-stage optimum, which
//! never exceeds the primal-LDR value; the primal policy replays feasibly
//! across the support; zero-width uncertainty collapses everything onto the
//! deterministic optimum.

use ots_core::error::Error;
use ots_core::evaluation::{bound_gap, out_of_sample};
use ots_core::formulation::{
    build_deterministic, build_primal_ldr, build_saa, exact_vertex_oracle,
    extract_policy, first_stage_from_report, policy_violation,
};
use ots_core::ingest::parse_case;
use ots_core::network::{build_operators, Grid};
use ots_core::solver::{solve_milp, SolveStatus, SolverConfig};
use ots_core::uncertainty::UncertaintyPolytope;

/// Three buses in a triangle, one wind farm, every line switchable.
fn wind_triangle(rho: f64) -> (Grid, UncertaintyPolytope) {
    let doc = format!(
        r#"{{
        "base_mva": 100.0,
        "buses": [
            {{"id": 1, "theta_min": -0.5, "theta_max": 0.5, "load": 0.0}},
            {{"id": 2, "theta_min": -0.5, "theta_max": 0.5, "load": 80.0}},
            {{"id": 3, "theta_min": -0.5, "theta_max": 0.5, "load": 40.0}}
        ],
        "lines": [
            {{"from": 1, "to": 2, "b": 8.0, "f_min": -70.0, "f_max": 70.0, "dtheta_max": 0.6, "switchable": true}},
            {{"from": 2, "to": 3, "b": 6.0, "f_min": -50.0, "f_max": 50.0, "dtheta_max": 0.6, "switchable": true}},
            {{"from": 1, "to": 3, "b": 7.0, "f_min": -60.0, "f_max": 60.0, "dtheta_max": 0.6, "switchable": true}}
        ],
        "gens": [
            {{"bus": 1, "c": 18.0, "q": 4.0, "g_min": 0.0, "g_max": 150.0,
             "r_minus": -40.0, "r_plus": 40.0, "agc": true}},
            {{"bus": 3, "c": 32.0, "q": 6.0, "g_min": 0.0, "g_max": 60.0,
             "r_minus": -25.0, "r_plus": 25.0, "agc": true}}
        ],
        "wind": [
            {{"bus": 2, "nominal": 30.0, "xi_min": {lo}, "xi_max": {hi}}}
        ],
        "ref_bus": 1,
        "max_open": 1
    }}"#,
        lo = -rho * 30.0,
        hi = rho * 30.0,
    );
    let case = parse_case(&doc).unwrap();
    let grid = Grid::from_case(&case).unwrap();
    let hw = rho * 30.0 / 100.0;
    let poly = UncertaintyPolytope::box_support(&[-hw], &[hw]).unwrap();
    (grid, poly)
}

#[test]
fn sandwich_on_triangle() {
    let cfg = SolverConfig::default();
    for rho in [0.05, 0.15, 0.3] {
        let (grid, poly) = wind_triangle(rho);
        let ops = build_operators(&grid);
        for max_open in [0usize, 1] {
            let upper_prog = build_primal_ldr(&grid, &ops, max_open, &poly, &cfg).unwrap();
            upper_prog.validate().unwrap();
            let upper = solve_milp(&upper_prog, &cfg).unwrap();
            assert_eq!(upper.status, SolveStatus::Optimal, "rho={rho} lo={max_open}");

            let exact = exact_vertex_oracle(&grid, &ops, max_open, &poly, &cfg).unwrap();
            assert_eq!(exact.status, SolveStatus::Optimal);

            let gap = bound_gap(&grid, &ops, max_open, &poly, &cfg).unwrap();
            let lower = &gap.lower;
            assert_eq!(lower.status, SolveStatus::Optimal);

            assert!(
                lower.objective <= exact.objective + 1e-6,
                "rho={rho} lo={max_open}: dual {} > exact {}",
                lower.objective,
                exact.objective
            );
            assert!(
                exact.objective <= upper.objective + 1e-6,
                "rho={rho} lo={max_open}: exact {} > primal {}",
                exact.objective,
                upper.objective
            );
            assert!(gap.gap_percent >= -1e-4);
        }
    }
}

#[test]
fn primal_policy_feasible_across_support() {
    let cfg = SolverConfig::default();
    let (grid, poly) = wind_triangle(0.2);
    let ops = build_operators(&grid);
    let prog = build_primal_ldr(&grid, &ops, 1, &poly, &cfg).unwrap();
    let rep = solve_milp(&prog, &cfg).unwrap();
    assert_eq!(rep.status, SolveStatus::Optimal);

    let first = first_stage_from_report(&grid, &rep).unwrap();
    let policy = extract_policy(poly.dim(), &rep).unwrap();

    // Vertex feasibility.
    for v in poly.vertices().unwrap() {
        let viol = policy_violation(&grid, &ops, &first, &policy, &v);
        assert!(viol <= 1e-8, "vertex {v:?}: violation {viol}");
    }
    // Fresh uniform samples.
    for xi in poly.sample(500, 7).unwrap() {
        let viol = policy_violation(&grid, &ops, &first, &policy, &xi);
        assert!(viol <= 1e-8, "sample {xi:?}: violation {viol}");
    }

    // Balance holds identically in xi at the returned policy.
    for xi in poly.sample(100, 11).unwrap() {
        let viol = policy_violation(&grid, &ops, &first, &policy, &xi);
        assert!(viol <= 1e-9, "balance drift {viol} at {xi:?}");
    }

    // Out-of-sample replay of the LDR first stage never goes infeasible.
    let fresh = poly.sample(1000, 13).unwrap();
    let oos = out_of_sample(&grid, &ops, &first, &fresh, &cfg);
    assert_eq!(oos.infeasible, 0);
    assert_eq!(oos.evaluated, 1000);
    // Linearity: the replay cost is the in-sample objective shifted by the
    // reserve term at the realized sample mean (exactly, no other scenario
    // dependence).
    let mean_u: f64 =
        fresh.iter().map(|xi| xi.iter().sum::<f64>()).sum::<f64>() / fresh.len() as f64;
    let mut expected = rep.objective;
    for (i, gen) in grid.gens.iter().enumerate() {
        expected += gen.cost_q * grid.base_mva * first.gamma[i] * mean_u;
    }
    assert!(
        (oos.mean_cost - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
        "oos {} vs linear prediction {}",
        oos.mean_cost,
        expected
    );
}

#[test]
fn saa_value_between_means() {
    let cfg = SolverConfig::default();
    let (grid, poly) = wind_triangle(0.2);
    let ops = build_operators(&grid);
    let scen = poly.sample(60, 3).unwrap();
    let saa_prog = build_saa(&grid, &ops, 1, &poly, &scen).unwrap();
    let saa = solve_milp(&saa_prog, &cfg).unwrap();
    assert_eq!(saa.status, SolveStatus::Optimal);

    // The primal-LDR first stage and policy remain feasible for the sampled
    // program, so SAA cannot cost more than the LDR solution evaluated on
    // the same samples.
    let ldr_prog = build_primal_ldr(&grid, &ops, 1, &poly, &cfg).unwrap();
    let ldr = solve_milp(&ldr_prog, &cfg).unwrap();
    let first = first_stage_from_report(&grid, &ldr).unwrap();
    let mean_u: f64 =
        scen.iter().map(|xi| xi.iter().sum::<f64>()).sum::<f64>() / scen.len() as f64;
    let mut ldr_on_samples = 0.0;
    for (i, gen) in grid.gens.iter().enumerate() {
        ldr_on_samples += gen.cost_c * grid.base_mva * first.g[i];
        ldr_on_samples += gen.cost_q * grid.base_mva * first.gamma[i] * mean_u;
    }
    assert!(
        saa.objective <= ldr_on_samples + 1e-6,
        "saa {} vs ldr-on-samples {}",
        saa.objective,
        ldr_on_samples
    );
}

#[test]
fn zero_uncertainty_collapse() {
    let cfg = SolverConfig::default();
    // Zero-width wind: the farm still injects its nominal output but there
    // is no uncertain dimension left anywhere in the pipeline.
    let (grid, _) = wind_triangle(0.2);
    let mut case_grid = grid.clone();
    for w in &mut case_grid.wind {
        w.xi_min = 0.0;
        w.xi_max = 0.0;
    }
    let grid = case_grid;
    let ops = build_operators(&grid);
    let poly = UncertaintyPolytope::empty();

    let det = solve_milp(&build_deterministic(&grid, &ops, 1), &cfg).unwrap();
    let saa_prog = build_saa(&grid, &ops, 1, &poly, &[vec![], vec![]]).unwrap();
    let saa = solve_milp(&saa_prog, &cfg).unwrap();
    let ldr = solve_milp(&build_primal_ldr(&grid, &ops, 1, &poly, &cfg).unwrap(), &cfg).unwrap();
    let gap = bound_gap(&grid, &ops, 1, &poly, &cfg).unwrap();
    let exact = gap.exact.as_ref().unwrap();

    for (name, rep) in [
        ("saa", &saa),
        ("primal", &ldr),
        ("dual", &gap.lower),
        ("exact", exact),
    ] {
        assert_eq!(rep.status, SolveStatus::Optimal, "{name}");
        assert!(
            (rep.objective - det.objective).abs() <= 1e-8 * (1.0 + det.objective.abs()),
            "{name}: {} vs det {}",
            rep.objective,
            det.objective
        );
    }
    assert!((gap.gap_percent).abs() < 1e-6);
}

#[test]
fn shrinking_box_approaches_deterministic() {
    let cfg = SolverConfig::default();
    let (grid, _) = wind_triangle(0.2);
    let ops = build_operators(&grid);
    let det = solve_milp(&build_deterministic(&grid, &ops, 1), &cfg).unwrap();

    let eps = 1e-6;
    let tiny = UncertaintyPolytope::box_support(&[-eps], &[eps]).unwrap();
    let ldr = solve_milp(&build_primal_ldr(&grid, &ops, 1, &tiny, &cfg).unwrap(), &cfg).unwrap();
    assert_eq!(ldr.status, SolveStatus::Optimal);
    assert!(
        (ldr.objective - det.objective).abs() <= 1e-3 * (1.0 + det.objective.abs()),
        "ldr {} vs det {}",
        ldr.objective,
        det.objective
    );

    // A genuinely degenerate support is rejected up front.
    match UncertaintyPolytope::box_support(&[0.0], &[0.0]) {
        Err(Error::EmptyBox { .. }) => {}
        other => panic!("expected EmptyBox, got {other:?}"),
    }
}

#[test]
fn k1_oracle_equals_endpoint_scenarios() {
    // For a centered K=1 box the only vertices are the endpoints and the
    // scenario mean of 1^T xi is zero, equal to 1^T mu; the oracle and an
    // SAA built on exactly the endpoint scenarios coincide.
    let cfg = SolverConfig::default();
    let (grid, poly) = wind_triangle(0.2);
    let ops = build_operators(&grid);
    let oracle = exact_vertex_oracle(&grid, &ops, 1, &poly, &cfg).unwrap();
    let (lo, hi) = {
        let vs = poly.vertices().unwrap();
        (vs[0].clone(), vs[1].clone())
    };
    let saa_prog = build_saa(&grid, &ops, 1, &poly, &[lo, hi]).unwrap();
    let saa = solve_milp(&saa_prog, &cfg).unwrap();
    assert_eq!(oracle.status, SolveStatus::Optimal);
    assert_eq!(saa.status, SolveStatus::Optimal);
    assert!(
        (oracle.objective - saa.objective).abs() <= 1e-8 * (1.0 + saa.objective.abs()),
        "oracle {} vs endpoint saa {}",
        oracle.objective,
        saa.objective
    );
}
