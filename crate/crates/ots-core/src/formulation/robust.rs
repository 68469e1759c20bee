//! Robust-counterpart machinery: dualization of semi-infinite inequality
//! rows over the support polytope, and the equality-splitting rule for
//! full-dimensional supports.

use crate::error::{Error, Result};
use crate::program::{Block, LinExpr, MathProgram, Sense, VarKind, Variable};
use crate::uncertainty::UncertaintyPolytope;

/// One semi-infinite row `base(x) + sum_k coef_k(x) * xi_k <= 0` for all xi
/// in the support; `base` and each `coef_k` are affine in the decisions.
#[derive(Debug, Clone)]
pub struct RobustRow {
    pub label: String,
    pub base: LinExpr,
    pub coef: Vec<LinExpr>,
}

impl RobustRow {
    pub fn new(label: impl Into<String>, base: LinExpr, coef: Vec<LinExpr>) -> RobustRow {
        RobustRow { label: label.into(), base, coef }
    }
}

/// Dualize the rows: for each one, a fresh nonnegative multiplier block
/// `alpha` (one variable per polytope halfspace) with
///   sum_r alpha_r S[r,k] = coef_k(x)  for every k, and
///   base(x) + alpha . t <= 0.
/// Returns the combined alpha block.
pub fn robustify_le(
    prog: &mut MathProgram,
    rows: &[RobustRow],
    poly: &UncertaintyPolytope,
    group: &str,
) -> Block {
    let m = poly.n_halfspaces();
    let k = poly.dim();
    let vars: Vec<Variable> = rows
        .iter()
        .enumerate()
        .flat_map(|(r, _)| {
            (0..m).map(move |h| Variable {
                name: format!("{group}_{r}_{h}"),
                lb: 0.0,
                ub: f64::INFINITY,
                kind: VarKind::Continuous,
            })
        })
        .collect();
    let alpha = prog.add_named_block(group, vars);

    for (r, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.coef.len(), k);
        // alpha_row . S == coef_k(x), one equality per uncertainty dim.
        for dim in 0..k {
            let mut e = LinExpr::new();
            for h in 0..m {
                e.add(alpha.var(r * m + h), poly.s[(h, dim)]);
            }
            e.add_expr(&row.coef[dim], -1.0);
            prog.add_row(format!("{group}_S_{}_{dim}", row.label), e, Sense::Eq, 0.0);
        }
        // base(x) + alpha . t <= 0.
        let mut e = row.base.clone();
        for h in 0..m {
            e.add(alpha.var(r * m + h), poly.t[h]);
        }
        prog.add_row(format!("{group}_t_{}", row.label), e, Sense::Le, 0.0);
    }
    alpha
}

/// Semi-infinite equality `base(x) + sum_k coef_k(x) xi_k = 0` for all xi in
/// a full-dimensional support holds iff every coefficient and the base are
/// zero; emits those finitely many equalities.
pub fn split_equality(
    prog: &mut MathProgram,
    rows: &[RobustRow],
    poly: &UncertaintyPolytope,
    full_dimensional: bool,
    group: &str,
) -> Result<()> {
    if !full_dimensional {
        return Err(Error::NotFullDimensional);
    }
    let k = poly.dim();
    for row in rows {
        debug_assert_eq!(row.coef.len(), k);
        for (dim, coef) in row.coef.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            prog.add_row(
                format!("{group}_xi_{}_{dim}", row.label),
                coef.clone(),
                Sense::Eq,
                0.0,
            );
        }
        prog.add_row(format!("{group}_c_{}", row.label), row.base.clone(), Sense::Eq, 0.0);
    }
    Ok(())
}

/// Moment relaxation of the same semi-infinite rows, used by the dual-LDR
/// bound: with slack s(xi) = -(base + coef . xi), require the slack moment
/// vector (E[xi s], E[s]) to lie in the cone spanned by {(xi, 1) : xi in
/// support}, i.e. E[s] >= 0 and S E[xi s] <= E[s] t. Linear in the
/// decisions; uses the support's mean and second moment.
pub fn relax_moments(
    prog: &mut MathProgram,
    rows: &[RobustRow],
    poly: &UncertaintyPolytope,
    group: &str,
) -> Result<()> {
    let q = poly.second_moment.as_ref().ok_or(Error::MissingMoments)?;
    let m = poly.n_halfspaces();
    let k = poly.dim();

    for row in rows {
        // p0 = E[s] = -(base + coef . mu) >= 0  <=>  base + coef . mu <= 0.
        let mut p0_neg = row.base.clone(); // this is -p0
        for dim in 0..k {
            p0_neg.add_expr(&row.coef[dim], poly.mu[dim]);
        }
        prog.add_row(format!("{group}_m0_{}", row.label), p0_neg.clone(), Sense::Le, 0.0);

        // p_d = E[xi_d s] = -(mu_d base + sum_l Q[d,l] coef_l);
        // rows: S p <= p0 t  <=>  sum_d S[h,d] p_d - t_h p0 <= 0.
        let mut p: Vec<LinExpr> = Vec::with_capacity(k);
        for d in 0..k {
            let mut pd = LinExpr::new();
            pd.add_expr(&row.base, -poly.mu[d]);
            for l in 0..k {
                pd.add_expr(&row.coef[l], -q[(d, l)]);
            }
            p.push(pd);
        }
        for h in 0..m {
            let mut e = LinExpr::new();
            for d in 0..k {
                e.add_expr(&p[d], poly.s[(h, d)]);
            }
            // - t_h p0 = + t_h * p0_neg
            e.add_expr(&p0_neg, poly.t[h]);
            prog.add_row(format!("{group}_mS_{}_{h}", row.label), e, Sense::Le, 0.0);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::MathProgram;
    use crate::solver::{solve_lp, SolveStatus, SolverConfig};

    /// Worst case of -2 xi1 + 3 xi2 over the unit box is 5: the dualized
    /// feasibility threshold sits exactly there, and the minimal multiplier
    /// weight alpha . t equals 5.
    #[test]
    fn box_dualization_matches_analytic_worst_case() {
        let poly = UncertaintyPolytope::box_support(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let cfg = SolverConfig::default();

        let build = |b: f64, minimize_weight: bool| {
            let mut p = MathProgram::new("rob");
            let row = RobustRow::new(
                "r",
                LinExpr::constant(-b),
                vec![LinExpr::constant(-2.0), LinExpr::constant(3.0)],
            );
            let alpha = robustify_le(&mut p, &[row], &poly, "a");
            if minimize_weight {
                for h in 0..poly.n_halfspaces() {
                    p.set_objective_term(alpha.var(h), poly.t[h]);
                }
            }
            p.seal();
            p
        };

        // Feasible iff b >= 5.
        let r = solve_lp(&build(5.0, false), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let r = solve_lp(&build(5.0 - 1e-6, false), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);

        // Dual optimum alpha = (0, 3, 2, 0), alpha . t = 5.
        let r = solve_lp(&build(10.0, true), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 5.0).abs() < 1e-8);
        let a = r.block_values("a").unwrap();
        let expect = [0.0, 3.0, 2.0, 0.0];
        for (v, e) in a.iter().zip(expect) {
            assert!((v - e).abs() < 1e-7, "alpha {a:?}");
        }
    }

    #[test]
    fn zero_xi_coefficients_reduce_to_deterministic() {
        let poly = UncertaintyPolytope::box_support(&[-1.0], &[1.0]).unwrap();
        let cfg = SolverConfig::default();
        let mut p = MathProgram::new("rob0");
        let x = p.add_block("x", 1, 0.0, 10.0, VarKind::Continuous);
        // x - 4 <= 0 for all xi (no xi dependence): alpha = 0 feasible.
        let mut base = LinExpr::term(x.var(0), 1.0);
        base.constant = -4.0;
        robustify_le(&mut p, &[RobustRow::new("r", base, vec![LinExpr::new()])], &poly, "a");
        p.set_objective_term(x.var(0), -1.0);
        p.seal();
        let r = solve_lp(&p, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn split_requires_full_dimensionality() {
        let poly = UncertaintyPolytope::box_support(&[-1.0], &[1.0]).unwrap();
        let mut p = MathProgram::new("sp");
        let row = RobustRow::new("r", LinExpr::new(), vec![LinExpr::new()]);
        assert!(split_equality(&mut p, &[row.clone()], &poly, false, "e").is_err());
        split_equality(&mut p, &[row], &poly, true, "e").unwrap();
        // H = 0, h = 0: only the trivial base row is emitted.
        assert_eq!(p.n_rows(), 1);
    }
}
