//! Computational form: equality rows with one bounded slack per row,
//! geometric row/column equilibration applied up front.

use crate::program::{MathProgram, Sense, VarKind};
use crate::solver::lu::SparseCol;

pub const INF: f64 = f64::INFINITY;

/// Scaled equality-form LP `A x = b`, `l <= x <= u`, min `c . x`.
/// Columns `0..nstruct` are the program variables, `nstruct..ncols` the row
/// slacks. Scale factors are powers of two so unscaling is exact.
pub struct StandardLp {
    pub nrows: usize,
    pub nstruct: usize,
    pub ncols: usize,
    pub cols: Vec<SparseCol>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub obj: Vec<f64>,
    pub rhs: Vec<f64>,
    pub senses: Vec<Sense>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub integer_cols: Vec<usize>,
}

fn pow2_near(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return 1.0;
    }
    let e = x.log2().round();
    e.exp2()
}

impl StandardLp {
    pub fn from_program(prog: &MathProgram) -> StandardLp {
        let nrows = prog.n_rows();
        let nstruct = prog.n_vars();
        let ncols = nstruct + nrows;

        // Structural matrix in CSC, built from the row-wise program.
        let mut counts = vec![0usize; nstruct];
        for row in prog.rows() {
            for &(j, _) in &row.terms {
                counts[j] += 1;
            }
        }
        let mut cols: Vec<SparseCol> = counts
            .iter()
            .map(|&c| SparseCol { idx: Vec::with_capacity(c), val: Vec::with_capacity(c) })
            .collect();
        for (r, row) in prog.rows().iter().enumerate() {
            for &(j, v) in &row.terms {
                cols[j].idx.push(r as u32);
                cols[j].val.push(v);
            }
        }

        // Geometric equilibration (two sweeps), rounded to powers of two.
        let mut row_scale = vec![1.0f64; nrows];
        let mut col_scale = vec![1.0f64; nstruct + nrows];
        for _ in 0..2 {
            let mut row_min = vec![INF; nrows];
            let mut row_max = vec![0.0f64; nrows];
            for (j, col) in cols.iter().enumerate() {
                for (&i, &v) in col.idx.iter().zip(&col.val) {
                    let a = (v * row_scale[i as usize] * col_scale[j]).abs();
                    if a > 0.0 {
                        let i = i as usize;
                        row_min[i] = row_min[i].min(a);
                        row_max[i] = row_max[i].max(a);
                    }
                }
            }
            for i in 0..nrows {
                if row_max[i] > 0.0 {
                    row_scale[i] *= pow2_near(1.0 / (row_min[i] * row_max[i]).sqrt());
                }
            }
            let mut col_min = vec![INF; nstruct];
            let mut col_max = vec![0.0f64; nstruct];
            for (j, col) in cols.iter().enumerate() {
                for (&i, &v) in col.idx.iter().zip(&col.val) {
                    let a = (v * row_scale[i as usize] * col_scale[j]).abs();
                    if a > 0.0 {
                        col_min[j] = col_min[j].min(a);
                        col_max[j] = col_max[j].max(a);
                    }
                }
            }
            for j in 0..nstruct {
                if col_max[j] > 0.0 {
                    col_scale[j] *= pow2_near(1.0 / (col_min[j] * col_max[j]).sqrt());
                }
            }
        }

        // Apply scales to the structural columns.
        for (j, col) in cols.iter_mut().enumerate() {
            for (k, &i) in col.idx.iter().enumerate() {
                col.val[k] *= row_scale[i as usize] * col_scale[j];
            }
        }

        // Slack columns: coefficient exactly 1 after scaling.
        let mut lb = Vec::with_capacity(ncols);
        let mut ub = Vec::with_capacity(ncols);
        let mut obj = vec![0.0f64; ncols];
        let mut integer_cols = Vec::new();
        for (j, v) in prog.vars().iter().enumerate() {
            let cs = col_scale[j];
            lb.push(if v.lb.is_finite() { v.lb / cs } else { -INF });
            ub.push(if v.ub.is_finite() { v.ub / cs } else { INF });
            if v.kind == VarKind::Binary {
                integer_cols.push(j);
            }
        }
        for &(j, c) in prog.objective() {
            obj[j] += c * col_scale[j];
        }

        let mut senses = Vec::with_capacity(nrows);
        let mut rhs = Vec::with_capacity(nrows);
        for (i, row) in prog.rows().iter().enumerate() {
            senses.push(row.sense);
            rhs.push(row.rhs * row_scale[i]);
            cols.push(SparseCol::unit(i));
            col_scale[nstruct + i] = 1.0 / row_scale[i];
            match row.sense {
                Sense::Le => {
                    lb.push(0.0);
                    ub.push(INF);
                }
                Sense::Ge => {
                    lb.push(-INF);
                    ub.push(0.0);
                }
                Sense::Eq => {
                    lb.push(0.0);
                    ub.push(0.0);
                }
            }
        }

        StandardLp {
            nrows,
            nstruct,
            ncols,
            cols,
            lb,
            ub,
            obj,
            rhs,
            senses,
            row_scale,
            col_scale,
            integer_cols,
        }
    }

    /// Map a scaled solution back to program units.
    pub fn unscale_primal(&self, x_scaled: &[f64]) -> Vec<f64> {
        (0..self.nstruct)
            .map(|j| x_scaled[j] * self.col_scale[j])
            .collect()
    }

    /// Row duals in program units.
    pub fn unscale_duals(&self, y_scaled: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| y_scaled[i] * self.row_scale[i])
            .collect()
    }

    /// Scaled bounds for one structural column given program-unit bounds.
    pub fn scale_bounds(&self, j: usize, lb: f64, ub: f64) -> (f64, f64) {
        let cs = self.col_scale[j];
        (
            if lb.is_finite() { lb / cs } else { -INF },
            if ub.is_finite() { ub / cs } else { INF },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LinExpr, MathProgram, Sense, VarKind};

    #[test]
    fn slack_bounds_follow_senses() {
        let mut p = MathProgram::new("t");
        let x = p.add_block("x", 1, 0.0, 10.0, VarKind::Continuous);
        p.add_row("le", LinExpr::term(x.var(0), 1.0), Sense::Le, 5.0);
        p.add_row("ge", LinExpr::term(x.var(0), 1.0), Sense::Ge, 1.0);
        p.add_row("eq", LinExpr::term(x.var(0), 2.0), Sense::Eq, 4.0);
        p.seal();
        let s = StandardLp::from_program(&p);
        assert_eq!(s.ncols, 4);
        assert_eq!((s.lb[1], s.ub[1]), (0.0, INF));
        assert_eq!((s.lb[2], s.ub[2]), (-INF, 0.0));
        assert_eq!((s.lb[3], s.ub[3]), (0.0, 0.0));
    }

    #[test]
    fn scaling_is_exact_powers_of_two() {
        let mut p = MathProgram::new("t");
        let x = p.add_block("x", 2, 0.0, 1.0, VarKind::Continuous);
        let mut e = LinExpr::new();
        e.add(x.var(0), 1024.0).add(x.var(1), 0.001);
        p.add_row("r", e, Sense::Le, 3.0);
        p.seal();
        let s = StandardLp::from_program(&p);
        for &sc in s.row_scale.iter().chain(&s.col_scale) {
            assert_eq!(sc.log2().fract(), 0.0, "scale {sc} not a power of two");
        }
    }
}
