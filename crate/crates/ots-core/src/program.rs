//! Sparse linear programs with named variable blocks.
//!
//! `MathProgram` is the exchange format between the formulation builders, the
//! solver engine and the MPS exporter. Variables live in named blocks so that
//! reports can slice a solution back into domain quantities (`g`, `theta`,
//! `z`, LDR coefficients, dual multipliers).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    /// Sorted by column index, no duplicates.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Contiguous range of variables registered under one block name.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn var(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        self.start + i
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A linear expression `terms . x + constant`, used when assembling rows.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(var: usize, coeff: f64) -> Self {
        Self { terms: vec![(var, coeff)], constant: 0.0 }
    }

    pub fn add(&mut self, var: usize, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        if scale != 0.0 {
            self.constant += scale * other.constant;
            for &(v, c) in &other.terms {
                self.add(v, scale * c);
            }
        }
        self
    }

    /// Merge duplicate columns and drop exact zeros.
    pub fn compress(mut self) -> Self {
        self.terms.sort_unstable_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|&(_, c)| c == 0.0)
    }
}

/// Dimension counts carried alongside a program; the scaling benchmark
/// asserts on these without re-counting.
#[derive(Debug, Clone, Default)]
pub struct ProgramMeta {
    pub builder: String,
    pub n_vars_cont: usize,
    pub n_vars_bin: usize,
    pub n_rows: usize,
    pub scenario_count: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct MathProgram {
    pub name: String,
    vars: Vec<Variable>,
    blocks: Vec<(String, Block)>,
    rows: Vec<Row>,
    objective: Vec<(usize, f64)>,
    pub obj_constant: f64,
    pub metadata: ProgramMeta,
}

impl MathProgram {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        Self {
            metadata: ProgramMeta { builder: name.clone(), ..Default::default() },
            name,
            ..Default::default()
        }
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, j: usize) -> &Variable {
        &self.vars[j]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    /// Register `len` variables under `name` with shared bounds and kind.
    pub fn add_block(
        &mut self,
        name: &str,
        len: usize,
        lb: f64,
        ub: f64,
        kind: VarKind,
    ) -> Block {
        let start = self.vars.len();
        for i in 0..len {
            self.vars.push(Variable {
                name: format!("{name}{i}"),
                lb,
                ub,
                kind,
            });
        }
        let block = Block { start, len };
        self.blocks.push((name.to_string(), block));
        block
    }

    /// Register a block with per-variable names and bounds.
    pub fn add_named_block(
        &mut self,
        name: &str,
        vars: Vec<Variable>,
    ) -> Block {
        let start = self.vars.len();
        let len = vars.len();
        self.vars.extend(vars);
        let block = Block { start, len };
        self.blocks.push((name.to_string(), block));
        block
    }

    pub fn block(&self, name: &str) -> Option<Block> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, b)| b)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&str, Block)> {
        self.blocks.iter().map(|(n, b)| (n.as_str(), *b))
    }

    pub fn set_bounds(&mut self, var: usize, lb: f64, ub: f64) {
        self.vars[var].lb = lb;
        self.vars[var].ub = ub;
    }

    pub fn set_objective_term(&mut self, var: usize, coeff: f64) {
        self.objective.push((var, coeff));
    }

    pub fn finish_objective(&mut self) {
        let expr = LinExpr { terms: std::mem::take(&mut self.objective), constant: 0.0 }.compress();
        self.objective = expr.terms;
    }

    pub fn add_row(&mut self, name: impl Into<String>, expr: LinExpr, sense: Sense, rhs: f64) {
        let expr = expr.compress();
        self.rows.push(Row {
            name: name.into(),
            terms: expr.terms,
            sense,
            rhs: rhs - expr.constant,
        });
    }

    /// Objective value at a full primal point, including the constant.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Row activity `a_r . x`.
    pub fn row_activity(&self, r: usize, x: &[f64]) -> f64 {
        self.rows[r].terms.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Worst bound/row violation of a point, for feasibility audits.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in self.vars.iter().enumerate() {
            worst = worst.max(v.lb - x[j]).max(x[j] - v.ub);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(r, x);
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Refresh metadata counts from the actual contents.
    pub fn seal(&mut self) {
        self.finish_objective();
        self.metadata.n_rows = self.rows.len();
        self.metadata.n_vars_bin = self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count();
        self.metadata.n_vars_cont = self.vars.len() - self.metadata.n_vars_bin;
    }

    /// Check the structural invariants: term indices in range, binaries only
    /// in the `z` block, metadata counts in sync.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        for row in &self.rows {
            for &(j, c) in &row.terms {
                if j >= n {
                    return Err(Error::Program(format!(
                        "row `{}` references undeclared variable {j}",
                        row.name
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::Program(format!(
                        "row `{}` has non-finite coefficient on column {j}",
                        row.name
                    )));
                }
            }
            if !row.rhs.is_finite() {
                return Err(Error::Program(format!("row `{}` has non-finite rhs", row.name)));
            }
        }
        for &(j, _) in &self.objective {
            if j >= n {
                return Err(Error::Program(format!(
                    "objective references undeclared variable {j}"
                )));
            }
        }
        let z = self.block("z");
        for (j, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Binary {
                let inside_z = z.map(|b| j >= b.start && j < b.start + b.len).unwrap_or(false);
                if !inside_z {
                    return Err(Error::Program(format!(
                        "binary variable `{}` outside the z block",
                        v.name
                    )));
                }
            }
            if v.lb > v.ub {
                return Err(Error::Program(format!(
                    "variable `{}` has crossed bounds [{}, {}]",
                    v.name, v.lb, v.ub
                )));
            }
        }
        if self.metadata.n_rows != self.rows.len()
            || self.metadata.n_vars_bin + self.metadata.n_vars_cont != self.vars.len()
        {
            return Err(Error::Program(
                "metadata dimension counts out of sync".to_string(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linexpr_compress_merges_and_drops_zeros() {
        let mut e = LinExpr::new();
        e.add(3, 1.0).add(1, 2.0).add(3, -1.0).add(0, 0.5);
        let e = e.compress();
        assert_eq!(e.terms, vec![(0, 0.5), (1, 2.0)]);
    }

    #[test]
    fn binary_outside_z_block_is_rejected() {
        let mut p = MathProgram::new("t");
        p.add_block("w", 1, 0.0, 1.0, VarKind::Binary);
        p.seal();
        assert!(p.validate().is_err());

        let mut p = MathProgram::new("t");
        p.add_block("z", 2, 0.0, 1.0, VarKind::Binary);
        p.seal();
        assert!(p.validate().is_ok());
    }

    #[test]
    fn row_rhs_absorbs_expression_constant() {
        let mut p = MathProgram::new("t");
        let b = p.add_block("x", 1, 0.0, 10.0, VarKind::Continuous);
        let mut e = LinExpr::new();
        e.add(b.var(0), 1.0);
        e.constant = 2.5;
        p.add_row("r0", e, Sense::Le, 4.0);
        assert_eq!(p.rows()[0].rhs, 1.5);
    }
}
