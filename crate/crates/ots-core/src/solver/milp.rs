//! Branch and bound over the binary `z` block.
//!
//! Best-first node order on the parent LP bound, branching on the most
//! fractional binary, children warm-started from the parent basis via the
//! dual simplex. Ties between equally good incumbents go to the
//! lexicographically smallest open-line set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::program::{MathProgram, VarKind};
use crate::solver::report::{lex_less, SolveReport, SolveStatus};
use crate::solver::simplex::{BasisSnapshot, LpStatus, Simplex};
use crate::solver::standard::StandardLp;
use crate::solver::SolverConfig;

struct Node {
    bound: f64,
    seq: u64,
    /// Complete fix set along the path: (integer column, fixed-at-one).
    fixes: Vec<(usize, bool)>,
    parent_basis: Option<Arc<BasisSnapshot>>,
}

struct HeapKey {
    bound: f64,
    seq: u64,
}

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for smallest bound first,
        // then FIFO on insertion order.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    objective: f64,
    primal_scaled: Vec<f64>,
    open_set: Vec<usize>,
}

/// Solve a mixed-binary program. Programs without binaries collapse to a
/// single LP solve with node count 1.
pub fn solve_milp(prog: &MathProgram, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let std = StandardLp::from_program(prog);
    let int_cols = std.integer_cols.clone();
    let mut sx = Simplex::new(&std, cfg);

    // Root bounds of the integer columns (scaled), for re-applying per node.
    let root_bounds: Vec<(usize, (f64, f64))> =
        int_cols.iter().map(|&j| (j, sx.bounds(j))).collect();

    let apply_node = |sx: &mut Simplex, fixes: &[(usize, bool)]| {
        for &(j, b) in &root_bounds {
            sx.set_bounds(j, b.0, b.1);
        }
        for &(j, one) in fixes {
            let v = if one { 1.0 } else { 0.0 };
            let (lo, hi) = std.scale_bounds(j, v, v);
            sx.set_bounds(j, lo, hi);
        }
    };

    let frac_of = |xs: &[f64], j: usize| -> f64 {
        let v = xs[j] * std.col_scale[j];
        (v - v.round()).abs()
    };

    let mut report_base = SolveReport::empty(SolveStatus::Infeasible);
    report_base.blocks = prog.blocks().map(|(n, b)| (n.to_string(), b)).collect();

    // Root solve.
    let root_out = sx.solve_from_scratch().map_err(|m| Error::Numerical { message: m })?;
    let mut node_count: u64 = 1;
    let mut bound_history = Vec::new();
    match root_out.status {
        LpStatus::Infeasible => {
            let mut r = report_base;
            r.status = SolveStatus::Infeasible;
            r.simplex_iters = sx.iterations;
            r.node_count = node_count;
            r.wall_seconds = start.elapsed().as_secs_f64();
            if let Some(cert) = root_out.farkas_rows {
                r.farkas = Some(std.unscale_duals(&cert));
            }
            return Ok(r);
        }
        LpStatus::Unbounded => {
            let mut r = report_base;
            r.status = SolveStatus::Unbounded;
            r.simplex_iters = sx.iterations;
            r.node_count = node_count;
            r.wall_seconds = start.elapsed().as_secs_f64();
            return Ok(r);
        }
        LpStatus::IterLimit => {
            let mut r = report_base;
            r.status = SolveStatus::IterLimit;
            r.simplex_iters = sx.iterations;
            r.node_count = node_count;
            r.wall_seconds = start.elapsed().as_secs_f64();
            return Ok(r);
        }
        LpStatus::Optimal => {}
    }

    // Heap entries ordered by the key only.
    struct Entry(HeapKey, Node);
    impl PartialEq for Entry {
        fn eq(&self, other: &Self) -> bool {
            self.0 == other.0
        }
    }
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.0.cmp(&other.0))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0.cmp(&other.0)
        }
    }

    let mut incumbent: Option<Incumbent> = None;
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let mut seq: u64 = 0;

    let tie_tol = |obj: f64| -> f64 { 1e-9_f64.max(cfg.milp_gap * (1.0 + obj.abs())) };

    // Process the root immediately, then loop on the heap.
    let mut pending: Option<(Node, f64)> = Some((
        Node { bound: root_out.objective, seq: 0, fixes: Vec::new(), parent_basis: None },
        root_out.objective,
    ));
    let mut status = SolveStatus::Optimal;

    'search: loop {
        let (node, lp_obj, xs_opt): (Node, f64, Option<Vec<f64>>) = if let Some((n, obj)) =
            pending.take()
        {
            // Root already solved.
            (n, obj, None)
        } else if let Some(Entry(_, node)) = heap.pop() {
            if node_count >= cfg.node_limit {
                status = SolveStatus::NodeLimit;
                break 'search;
            }
            // Fathom against the incumbent before solving.
            if let Some(inc) = &incumbent {
                if node.bound >= inc.objective - tie_tol(inc.objective) {
                    continue 'search;
                }
            }
            apply_node(&mut sx, &node.fixes);
            let restored = match &node.parent_basis {
                Some(snap) => sx.restore(snap).is_ok(),
                None => false,
            };
            let out = if restored {
                match sx.reoptimize_dual() {
                    Ok(o) if o.status != LpStatus::IterLimit => o,
                    _ => sx
                        .solve_from_scratch()
                        .map_err(|m| Error::Numerical { message: m })?,
                }
            } else {
                sx.solve_from_scratch()
                    .map_err(|m| Error::Numerical { message: m })?
            };
            node_count += 1;
            match out.status {
                LpStatus::Infeasible => continue 'search,
                LpStatus::Unbounded => {
                    // Bound tightening cannot create unboundedness the root
                    // did not have; treat as numerical trouble.
                    return Err(Error::Numerical {
                        message: "unbounded node below bounded root".to_string(),
                    });
                }
                LpStatus::IterLimit => {
                    status = SolveStatus::IterLimit;
                    break 'search;
                }
                LpStatus::Optimal => {}
            }
            (node, out.objective, None)
        } else {
            break 'search;
        };

        if cfg.record_bound_history {
            bound_history.push(node.bound.min(lp_obj));
        }

        if let Some(inc) = &incumbent {
            if lp_obj >= inc.objective - tie_tol(inc.objective) {
                continue 'search;
            }
        }

        let xs = xs_opt.unwrap_or_else(|| sx.primal_values());

        // Integrality check.
        let mut worst: Option<(usize, f64)> = None;
        for &j in &int_cols {
            let f = frac_of(&xs, j);
            if f > cfg.int_tol {
                let dist = f.min(1.0 - f);
                if worst.map(|(_, w)| dist > w).unwrap_or(true) {
                    worst = Some((j, dist));
                }
            }
        }

        match worst {
            None => {
                // Integral: candidate incumbent.
                let obj = lp_obj;
                let open_set = open_set_of(prog, &std, &xs);
                let replace = match &incumbent {
                    None => true,
                    Some(inc) => {
                        if obj < inc.objective - tie_tol(inc.objective) {
                            true
                        } else if (obj - inc.objective).abs() <= tie_tol(inc.objective) {
                            lex_less(&open_set, &inc.open_set)
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    incumbent = Some(Incumbent { objective: obj, primal_scaled: xs, open_set });
                }
            }
            Some((jbr, _)) => {
                let snap = Arc::new(sx.snapshot());
                for one in [false, true] {
                    seq += 1;
                    let mut fixes = node.fixes.clone();
                    fixes.push((jbr, one));
                    heap.push(Entry(
                        HeapKey { bound: lp_obj, seq },
                        Node { bound: lp_obj, seq, fixes, parent_basis: Some(snap.clone()) },
                    ));
                }
            }
        }
    }

    let mut r = report_base;
    r.simplex_iters = sx.iterations;
    r.node_count = node_count;
    r.bound_history = bound_history;
    r.wall_seconds = start.elapsed().as_secs_f64();
    match incumbent {
        Some(inc) => {
            r.status = status;
            r.primal = std.unscale_primal(&inc.primal_scaled);
            // Snap binaries exactly.
            for &j in &int_cols {
                r.primal[j] = r.primal[j].round();
            }
            r.objective = prog.objective_value(&r.primal);
            if let Some(zb) = prog.block("z") {
                r.z = r.primal[zb.start..zb.start + zb.len].to_vec();
            }
        }
        None => {
            r.status = if status == SolveStatus::Optimal { SolveStatus::Infeasible } else { status };
        }
    }
    Ok(r)
}

fn open_set_of(prog: &MathProgram, std: &StandardLp, xs: &[f64]) -> Vec<usize> {
    match prog.block("z") {
        Some(zb) => zb
            .iter()
            .filter(|&j| (xs[j] * std.col_scale[j]).round() < 0.5)
            .map(|j| j - zb.start)
            .collect(),
        None => Vec::new(),
    }
}

/// Exhaustively enumerate all z patterns with at most `max_open` zeros and
/// return the certified optimum. Oracle-grade: every pattern is solved with
/// a cold start.
pub fn enumerate_milp(
    prog: &MathProgram,
    max_open: usize,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let zb = prog.block("z");
    let zcols: Vec<usize> = match zb {
        Some(b) => b
            .iter()
            .filter(|&j| {
                prog.var(j).kind == VarKind::Binary && prog.var(j).lb < prog.var(j).ub
            })
            .collect(),
        None => Vec::new(),
    };
    let n = zcols.len();
    let k_max = max_open.min(n);

    let mut count: u128 = 0;
    for k in 0..=k_max {
        count += binomial(n as u128, k as u128);
    }
    const LIMIT: u128 = 1_000_000;
    if count > LIMIT {
        return Err(Error::EnumerationTooLarge { count, limit: LIMIT });
    }

    let std = StandardLp::from_program(prog);
    let mut sx = Simplex::new(&std, cfg);

    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut lps: u64 = 0;
    let tie = |obj: f64| 1e-9_f64.max(1e-9 * obj.abs());

    for k in 0..=k_max {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            // Fix the pattern: combo entries open, rest closed.
            for (idx, &j) in zcols.iter().enumerate() {
                let v = if combo.contains(&idx) { 0.0 } else { 1.0 };
                let (lo, hi) = std.scale_bounds(j, v, v);
                sx.set_bounds(j, lo, hi);
            }
            let out = sx
                .solve_from_scratch()
                .map_err(|m| Error::Numerical { message: m })?;
            lps += 1;
            if out.status == LpStatus::Optimal {
                let obj = out.objective;
                let open: Vec<usize> = combo.clone();
                let replace = match &best {
                    None => true,
                    Some((bobj, _, bopen)) => {
                        if obj < bobj - tie(*bobj) {
                            true
                        } else if (obj - bobj).abs() <= tie(*bobj) {
                            lex_less(&open, bopen)
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    best = Some((obj, sx.primal_values(), open));
                }
            }

            if k == 0 || !next_combination(&mut combo, n) {
                break;
            }
        }
    }

    let mut r = SolveReport::empty(SolveStatus::Infeasible);
    r.blocks = prog.blocks().map(|(n, b)| (n.to_string(), b)).collect();
    r.node_count = lps;
    r.simplex_iters = sx.iterations;
    r.wall_seconds = start.elapsed().as_secs_f64();
    if let Some((_, xs, _)) = best {
        r.status = SolveStatus::Optimal;
        r.primal = std.unscale_primal(&xs);
        if let Some(b) = zb {
            for j in b.iter() {
                r.primal[j] = r.primal[j].round();
            }
            r.z = r.primal[b.start..b.start + b.len].to_vec();
        }
        r.objective = prog.objective_value(&r.primal);
    }
    Ok(r)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advance `combo` to the next k-combination of {0..n}; false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LinExpr, Sense};

    #[test]
    fn combinations_enumerate_in_lex_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![
            vec![0, 1], vec![0, 2], vec![0, 3],
            vec![1, 2], vec![1, 3], vec![2, 3]
        ]);
    }

    #[test]
    fn fixed_z_program_is_single_lp() {
        let mut p = MathProgram::new("fixedz");
        let x = p.add_block("x", 1, 0.0, 5.0, VarKind::Continuous);
        let z = p.add_block("z", 1, 1.0, 1.0, VarKind::Binary);
        p.set_objective_term(x.var(0), 1.0);
        let mut e = LinExpr::new();
        e.add(x.var(0), 1.0).add(z.var(0), -2.0);
        p.add_row("link", e, Sense::Ge, 0.0);
        p.seal();
        let r = solve_milp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.node_count, 1);
        assert!((r.objective - 2.0).abs() < 1e-8);
    }

    #[test]
    fn simple_knapsack_milp() {
        // min -3 z0 - 2 z1 s.t. z0 + z1 <= 1: pick z0.
        let mut p = MathProgram::new("knap");
        let z = p.add_block("z", 2, 0.0, 1.0, VarKind::Binary);
        p.set_objective_term(z.var(0), -3.0);
        p.set_objective_term(z.var(1), -2.0);
        let mut e = LinExpr::new();
        e.add(z.var(0), 1.0).add(z.var(1), 1.0);
        p.add_row("cap", e, Sense::Le, 1.0);
        p.seal();
        let r = solve_milp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-8);
        assert_eq!(r.z, vec![1.0, 0.0]);
    }
}
