//! Linear-decision-rule reformulations.
//!
//! The primal builder restricts the recourse maps to affine functions of the
//! wind deviation and dualizes every semi-infinite inequality over the
//! support polytope (ten multiplier groups), splitting the balance equality
//! into coefficient-wise identities. The dual builder keeps the same affine
//! recourse coefficients but relaxes the recourse-coupled rows to moment
//! conditions, which yields a lower bound on the two-stage optimum.

use crate::error::{Error, Result};
use crate::formulation::robust::{relax_moments, robustify_le, split_equality, RobustRow};
use crate::formulation::{
    add_first_stage, add_gamma_block, add_generation_cost, add_reserve_cost, FirstStageBlocks,
};
use crate::network::{Grid, NetworkOperators};
use crate::program::{Block, LinExpr, MathProgram, VarKind, Variable};
use crate::solver::SolverConfig;
use crate::uncertainty::UncertaintyPolytope;

/// Decision blocks shared by both LDR builders.
pub(crate) struct LdrBlocks {
    pub fs: FirstStageBlocks,
    pub gamma: Block,
    /// theta offset, length N.
    pub y_theta: Block,
    /// theta slope, N x K row-major.
    pub yy_theta: Block,
    /// flow offset, length L.
    pub y_f: Block,
    /// flow slope, L x K row-major.
    pub yy_f: Block,
    pub k: usize,
}

impl LdrBlocks {
    fn yth(&self, bus: usize, k: usize) -> usize {
        self.yy_theta.var(bus * self.k + k)
    }
    fn yf(&self, line: usize, k: usize) -> usize {
        self.yy_f.var(line * self.k + k)
    }
}

fn add_ldr_blocks(
    prog: &mut MathProgram,
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    k: usize,
) -> LdrBlocks {
    let fs = add_first_stage(prog, grid, ops, max_open);
    let gamma = add_gamma_block(prog, grid);
    let n = grid.n_bus();
    let l = grid.n_line();

    let free = (-f64::INFINITY, f64::INFINITY);
    let mk = |name: String, pin: bool| Variable {
        name,
        lb: if pin { 0.0 } else { free.0 },
        ub: if pin { 0.0 } else { free.1 },
        kind: VarKind::Continuous,
    };

    // The reference-bus anchor extends to the recourse map.
    let y_theta = prog.add_named_block(
        "y_theta",
        (0..n).map(|i| mk(format!("yth{i}"), i == grid.ref_bus)).collect(),
    );
    let yy_theta = prog.add_named_block(
        "Y_theta",
        (0..n)
            .flat_map(|i| (0..k).map(move |kk| (i, kk)))
            .map(|(i, kk)| mk(format!("Yth_{i}_{kk}"), i == grid.ref_bus))
            .collect(),
    );
    let y_f = prog.add_named_block(
        "y_f",
        (0..l).map(|e| mk(format!("yf{e}"), false)).collect(),
    );
    let yy_f = prog.add_named_block(
        "Y_f",
        (0..l)
            .flat_map(|e| (0..k).map(move |kk| (e, kk)))
            .map(|(e, kk)| mk(format!("Yf_{e}_{kk}"), false))
            .collect(),
    );

    LdrBlocks { fs, gamma, y_theta, yy_theta, y_f, yy_f, k }
}

/// The ten inequality groups plus the balance equality, every one as
/// `base(x) + coef(x) . xi <= 0` (or `= 0`).
struct LdrRows {
    /// Groups 1..=4: reserve and adjusted-generation boxes (gamma only).
    reserve: [Vec<RobustRow>; 4],
    /// Groups 5..=10: recourse-coupled rows (angles, flows, flow definition).
    recourse: [Vec<RobustRow>; 6],
    /// Flow definition on non-switchable lines: exact equalities.
    recourse_eq: Vec<RobustRow>,
    /// Balance equality rows.
    balance: Vec<RobustRow>,
}

fn ldr_rows(grid: &Grid, ops: &NetworkOperators, b: &LdrBlocks) -> LdrRows {
    let k = b.k;
    let n = grid.n_bus();
    let uncertain = grid.uncertain_wind();

    let mut g1 = Vec::new();
    let mut g2 = Vec::new();
    let mut g3 = Vec::new();
    let mut g4 = Vec::new();
    for (i, gen) in grid.gens.iter().enumerate() {
        let minus_gamma: Vec<LinExpr> =
            (0..k).map(|_| LinExpr::term(b.gamma.var(i), -1.0)).collect();
        let plus_gamma: Vec<LinExpr> =
            (0..k).map(|_| LinExpr::term(b.gamma.var(i), 1.0)).collect();
        g1.push(RobustRow::new(
            format!("rsvlo{i}"),
            LinExpr::constant(gen.r_minus),
            minus_gamma.clone(),
        ));
        g2.push(RobustRow::new(
            format!("rsvhi{i}"),
            LinExpr::constant(-gen.r_plus),
            plus_gamma.clone(),
        ));
        let mut lo = LinExpr::term(b.fs.g.var(i), -1.0);
        lo.constant = gen.g_min;
        g3.push(RobustRow::new(format!("glo{i}"), lo, minus_gamma));
        let mut hi = LinExpr::term(b.fs.g.var(i), 1.0);
        hi.constant = -gen.g_max;
        g4.push(RobustRow::new(format!("ghi{i}"), hi, plus_gamma));
    }

    let mut g5 = Vec::new();
    let mut g6 = Vec::new();
    for bus in 0..n {
        let slope_neg: Vec<LinExpr> =
            (0..k).map(|kk| LinExpr::term(b.yth(bus, kk), -1.0)).collect();
        let slope_pos: Vec<LinExpr> =
            (0..k).map(|kk| LinExpr::term(b.yth(bus, kk), 1.0)).collect();
        let mut lo = LinExpr::new();
        lo.add(b.fs.theta.var(bus), -1.0).add(b.y_theta.var(bus), -1.0);
        lo.constant = grid.theta_min[bus];
        g5.push(RobustRow::new(format!("thlo{bus}"), lo, slope_neg));
        let mut hi = LinExpr::new();
        hi.add(b.fs.theta.var(bus), 1.0).add(b.y_theta.var(bus), 1.0);
        hi.constant = -grid.theta_max[bus];
        g6.push(RobustRow::new(format!("thhi{bus}"), hi, slope_pos));
    }

    let mut g7 = Vec::new();
    let mut g8 = Vec::new();
    for (e, line) in grid.lines.iter().enumerate() {
        let slope_neg: Vec<LinExpr> = (0..k).map(|kk| LinExpr::term(b.yf(e, kk), -1.0)).collect();
        let slope_pos: Vec<LinExpr> = (0..k).map(|kk| LinExpr::term(b.yf(e, kk), 1.0)).collect();
        let mut lo = LinExpr::new();
        lo.add(b.fs.f.var(e), -1.0).add(b.y_f.var(e), -1.0);
        match b.fs.zpos[e] {
            Some(pos) => {
                lo.add(b.fs.z.var(pos), line.f_min);
            }
            None => lo.constant += line.f_min,
        }
        g7.push(RobustRow::new(format!("flo{e}"), lo, slope_neg));
        let mut hi = LinExpr::new();
        hi.add(b.fs.f.var(e), 1.0).add(b.y_f.var(e), 1.0);
        match b.fs.zpos[e] {
            Some(pos) => {
                hi.add(b.fs.z.var(pos), -line.f_max);
            }
            None => hi.constant -= line.f_max,
        }
        g8.push(RobustRow::new(format!("fhi{e}"), hi, slope_pos));
    }

    let mut g9 = Vec::new();
    let mut g10 = Vec::new();
    let mut eq = Vec::new();
    for (e, line) in grid.lines.iter().enumerate() {
        let m = ops.m_diag[e];
        // K_e (theta + y) - f - y_f, and its xi slope K_e Y_theta - Y_f.
        let mut kdiff = LinExpr::new();
        kdiff
            .add(b.fs.theta.var(line.from), line.b)
            .add(b.fs.theta.var(line.to), -line.b)
            .add(b.y_theta.var(line.from), line.b)
            .add(b.y_theta.var(line.to), -line.b)
            .add(b.fs.f.var(e), -1.0)
            .add(b.y_f.var(e), -1.0);
        let slope: Vec<LinExpr> = (0..k)
            .map(|kk| {
                let mut s = LinExpr::new();
                s.add(b.yth(line.from, kk), line.b)
                    .add(b.yth(line.to, kk), -line.b)
                    .add(b.yf(e, kk), -1.0);
                s
            })
            .collect();
        match b.fs.zpos[e] {
            Some(pos) => {
                // (8i): K(...) >= -M(1-z)  ->  -K(...) - M + M z <= 0.
                let mut lo = LinExpr::new();
                lo.add_expr(&kdiff, -1.0);
                lo.add(b.fs.z.var(pos), m);
                lo.constant -= m;
                let slope_neg: Vec<LinExpr> = slope
                    .iter()
                    .map(|s| {
                        let mut out = LinExpr::new();
                        out.add_expr(s, -1.0);
                        out
                    })
                    .collect();
                g9.push(RobustRow::new(format!("kflo{e}"), lo, slope_neg));
                // (8j): K(...) <= M(1-z)  ->  K(...) - M + M z <= 0.
                let mut hi = kdiff.clone();
                hi.add(b.fs.z.var(pos), m);
                hi.constant -= m;
                g10.push(RobustRow::new(format!("kfhi{e}"), hi, slope.clone()));
            }
            None => {
                eq.push(RobustRow::new(format!("kfeq{e}"), kdiff, slope));
            }
        }
    }

    // Balance: A(f + Y_f xi + y_f) = G(g + gamma u) - d + F xi_hat + F_u xi.
    let mut balance = Vec::new();
    for bus in 0..n {
        let mut base = LinExpr::new();
        let mut coef: Vec<LinExpr> = (0..k).map(|_| LinExpr::new()).collect();
        for (e, line) in grid.lines.iter().enumerate() {
            let sign = if line.from == bus {
                1.0
            } else if line.to == bus {
                -1.0
            } else {
                continue;
            };
            base.add(b.fs.f.var(e), sign).add(b.y_f.var(e), sign);
            for (kk, c) in coef.iter_mut().enumerate() {
                c.add(b.yf(e, kk), sign);
            }
        }
        for (i, gen) in grid.gens.iter().enumerate() {
            if gen.bus == bus {
                base.add(b.fs.g.var(i), -1.0);
                for c in coef.iter_mut() {
                    c.add(b.gamma.var(i), -1.0);
                }
            }
        }
        let mut rhs = -grid.load[bus];
        for w in &grid.wind {
            if w.bus == bus {
                rhs += w.nominal;
            }
        }
        base.constant = -rhs;
        for (kk, &w) in uncertain.iter().enumerate() {
            if grid.wind[w].bus == bus {
                coef[kk].constant -= 1.0;
            }
        }
        balance.push(RobustRow::new(format!("bal{bus}"), base, coef));
    }

    LdrRows {
        reserve: [g1, g2, g3, g4],
        recourse: [g5, g6, g7, g8, g9, g10],
        recourse_eq: eq,
        balance,
    }
}

/// Primal LDR: full dualized MILP with multiplier groups a1..a10. The
/// optimal value is an upper bound on the two-stage optimum and the policy
/// is feasible for every xi in the support.
pub fn build_primal_ldr(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
    cfg: &SolverConfig,
) -> Result<MathProgram> {
    let full = poly.is_full_dimensional(cfg)?;
    if !full {
        return Err(Error::NotFullDimensional);
    }
    let mut prog = MathProgram::new("primal_ldr");
    let b = add_ldr_blocks(&mut prog, grid, ops, max_open, poly.dim());
    let rows = ldr_rows(grid, ops, &b);

    for (idx, group) in rows.reserve.iter().enumerate() {
        robustify_le(&mut prog, group, poly, &format!("a{}", idx + 1));
    }
    for (idx, group) in rows.recourse.iter().enumerate() {
        robustify_le(&mut prog, group, poly, &format!("a{}", idx + 5));
    }
    split_equality(&mut prog, &rows.recourse_eq, poly, full, "kfeq")?;
    split_equality(&mut prog, &rows.balance, poly, full, "bal")?;

    add_generation_cost(&mut prog, grid, b.fs.g);
    add_reserve_cost(&mut prog, grid, b.gamma, poly.mu.iter().sum());
    prog.seal();
    Ok(prog)
}

/// Dual LDR: affine recourse coefficients with the recourse-coupled groups
/// relaxed to first-moment cone conditions. Every solution of the true
/// two-stage problem induces a feasible point here with the same objective,
/// so the optimal value is a lower bound; the first-stage-only groups stay
/// pointwise-robust, which only tightens the bound.
pub fn build_dual_ldr(
    grid: &Grid,
    ops: &NetworkOperators,
    max_open: usize,
    poly: &UncertaintyPolytope,
    cfg: &SolverConfig,
) -> Result<MathProgram> {
    let q = poly.second_moment.as_ref().ok_or(Error::MissingMoments)?;
    if poly.dim() > 0 {
        let cov = q - &poly.mu * poly.mu.transpose();
        let sym = 0.5 * (&cov + cov.transpose());
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 {
            return Err(Error::NotPsd { min_eig });
        }
    }
    let full = poly.is_full_dimensional(cfg)?;
    if !full {
        return Err(Error::NotFullDimensional);
    }

    let mut prog = MathProgram::new("dual_ldr");
    let b = add_ldr_blocks(&mut prog, grid, ops, max_open, poly.dim());
    let rows = ldr_rows(grid, ops, &b);

    for (idx, group) in rows.reserve.iter().enumerate() {
        robustify_le(&mut prog, group, poly, &format!("a{}", idx + 1));
    }
    for (idx, group) in rows.recourse.iter().enumerate() {
        relax_moments(&mut prog, group, poly, &format!("m{}", idx + 5))?;
    }
    split_equality(&mut prog, &rows.recourse_eq, poly, full, "kfeq")?;
    split_equality(&mut prog, &rows.balance, poly, full, "bal")?;

    add_generation_cost(&mut prog, grid, b.fs.g);
    add_reserve_cost(&mut prog, grid, b.gamma, poly.mu.iter().sum());
    prog.seal();
    Ok(prog)
}
