//! Bounded-variable revised simplex, primal and dual.
//!
//! The primal method runs two phases: phase 1 drives artificial columns to
//! zero from a slack basis, phase 2 optimizes the real costs. The dual
//! method reoptimizes after bound changes (branch-and-bound children), where
//! the parent basis stays dual feasible. Pricing is Dantzig over a rotating
//! window with a Bland fallback when the objective stalls; ratio tests are
//! two-pass Harris.

use std::collections::HashMap;

use crate::solver::config::SolverConfig;
use crate::solver::lu::{Factorization, SparseCol};
use crate::solver::standard::{StandardLp, INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VStat {
    Basic(u32),
    AtLower,
    AtUpper,
    FreeNb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Scaling is value-preserving, so this equals the program-units value.
    pub objective: f64,
    /// Row aggregation certifying infeasibility, scaled space.
    pub farkas_rows: Option<Vec<f64>>,
}

/// Basis state captured for warm starts. Artificial columns created after
/// the snapshot default to nonbasic-fixed on restore.
#[derive(Debug, Clone)]
pub struct BasisSnapshot {
    basis: Vec<usize>,
    vstat: Vec<VStat>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum Ratio {
    BoundFlip(f64),
    Pivot { pos: usize, t: f64, to_upper: bool },
    Unbounded,
}

pub struct Simplex {
    m: usize,
    nstruct: usize,
    /// Columns below this bound are structural+slack; beyond are artificials.
    first_art: usize,
    /// Artificial pool: (row, positive sign) -> column id.
    art_pool: HashMap<(usize, bool), usize>,
    cols: Vec<SparseCol>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    obj: Vec<f64>,
    rhs: Vec<f64>,

    basis: Vec<usize>,
    vstat: Vec<VStat>,
    xb: Vec<f64>,
    factor: Option<Factorization>,

    pub iterations: u64,
    bland: bool,
    stall: u32,
    price_cursor: usize,

    w: Vec<f64>,
    y: Vec<f64>,
    scratch: Vec<f64>,

    pub cfg: SolverConfig,
}

impl Simplex {
    pub fn new(std: &StandardLp, cfg: &SolverConfig) -> Simplex {
        Simplex {
            m: std.nrows,
            nstruct: std.nstruct,
            first_art: std.ncols,
            art_pool: HashMap::new(),
            cols: std.cols.clone(),
            lb: std.lb.clone(),
            ub: std.ub.clone(),
            obj: std.obj.clone(),
            rhs: std.rhs.clone(),
            basis: Vec::new(),
            vstat: Vec::new(),
            xb: Vec::new(),
            factor: None,
            iterations: 0,
            bland: false,
            stall: 0,
            price_cursor: 0,
            w: Vec::new(),
            y: Vec::new(),
            scratch: Vec::new(),
            cfg: cfg.clone(),
        }
    }

    pub fn set_bounds(&mut self, col: usize, lb: f64, ub: f64) {
        self.lb[col] = lb;
        self.ub[col] = ub;
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        (self.lb[col], self.ub[col])
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot { basis: self.basis.clone(), vstat: self.vstat.clone() }
    }

    pub fn restore(&mut self, snap: &BasisSnapshot) -> Result<(), String> {
        self.basis = snap.basis.clone();
        self.vstat = snap.vstat.clone();
        // Artificials created after the snapshot: nonbasic, pinned at zero.
        while self.vstat.len() < self.cols.len() {
            self.vstat.push(VStat::AtLower);
        }
        self.renormalize_statuses();
        self.refactorize()
    }

    /// Scaled primal value of every column.
    pub fn primal_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols.len()];
        for (j, &st) in self.vstat.iter().enumerate() {
            x[j] = match st {
                VStat::Basic(p) => self.xb[p as usize],
                _ => self.nb_value(j),
            };
        }
        x
    }

    /// Scaled duals y = B^-T c_B for the real costs.
    pub fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            y[p] = self.cost(Phase::Two, j);
        }
        let mut scratch = Vec::new();
        self.factor.as_ref().unwrap().btran(&mut y, &mut scratch);
        y
    }

    pub fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.first_art)
            .map(|j| self.obj[j] - self.cols[j].dot_dense(y))
            .collect()
    }

    /// Lagrangian dual value at the current basis: y^T b plus the nonbasic
    /// bound terms. Scaling is value-preserving, so this is in program units.
    pub fn dual_objective(&self) -> f64 {
        let y = self.duals();
        let mut v: f64 = y.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        for j in 0..self.first_art {
            if matches!(self.vstat[j], VStat::Basic(_)) {
                continue;
            }
            let d = self.cost(Phase::Two, j) - self.cols[j].dot_dense(&y);
            if d != 0.0 {
                let x = self.nb_value(j);
                if x != 0.0 {
                    v += d * x;
                }
            }
        }
        v
    }

    pub fn objective_value(&self) -> f64 {
        let mut v = 0.0;
        for (p, &j) in self.basis.iter().enumerate() {
            v += self.cost(Phase::Two, j) * self.xb[p];
        }
        for (j, &st) in self.vstat.iter().enumerate() {
            if !matches!(st, VStat::Basic(_)) {
                let c = self.cost(Phase::Two, j);
                if c != 0.0 {
                    v += c * self.nb_value(j);
                }
            }
        }
        v
    }

    /// Worst scaled bound violation among basic variables.
    pub fn primal_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (p, &j) in self.basis.iter().enumerate() {
            worst = worst.max(self.lb[j] - self.xb[p]).max(self.xb[p] - self.ub[j]);
        }
        worst.max(0.0)
    }

    fn cost(&self, phase: Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.first_art {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.first_art {
                    0.0
                } else {
                    self.obj[j]
                }
            }
        }
    }

    fn nb_value(&self, j: usize) -> f64 {
        match self.vstat[j] {
            VStat::AtLower => self.lb[j],
            VStat::AtUpper => self.ub[j],
            VStat::FreeNb => 0.0,
            VStat::Basic(_) => unreachable!("nb_value on basic column"),
        }
    }

    fn default_nb_stat(&self, j: usize) -> VStat {
        if self.lb[j].is_finite() {
            VStat::AtLower
        } else if self.ub[j].is_finite() {
            VStat::AtUpper
        } else {
            VStat::FreeNb
        }
    }

    fn renormalize_statuses(&mut self) {
        for j in 0..self.vstat.len() {
            match self.vstat[j] {
                VStat::AtLower if !self.lb[j].is_finite() => {
                    self.vstat[j] =
                        if self.ub[j].is_finite() { VStat::AtUpper } else { VStat::FreeNb };
                }
                VStat::AtUpper if !self.ub[j].is_finite() => {
                    self.vstat[j] =
                        if self.lb[j].is_finite() { VStat::AtLower } else { VStat::FreeNb };
                }
                VStat::FreeNb if self.lb[j].is_finite() || self.ub[j].is_finite() => {
                    self.vstat[j] = self.default_nb_stat(j);
                }
                _ => {}
            }
        }
    }

    fn slack_col_of_row(&self, row: usize) -> usize {
        self.nstruct + row
    }

    fn art_col(&mut self, row: usize, positive: bool) -> usize {
        if let Some(&j) = self.art_pool.get(&(row, positive)) {
            return j;
        }
        let j = self.cols.len();
        self.cols.push(SparseCol {
            idx: vec![row as u32],
            val: vec![if positive { 1.0 } else { -1.0 }],
        });
        self.lb.push(0.0);
        self.ub.push(0.0);
        self.obj.push(0.0);
        self.vstat.push(VStat::AtLower);
        self.art_pool.insert((row, positive), j);
        j
    }

    fn factorize(&mut self) -> Result<(), String> {
        for _attempt in 0..4 {
            let refs: Vec<&SparseCol> = self.basis.iter().map(|&j| &self.cols[j]).collect();
            let (f, def) = Factorization::factorize(&refs, self.m, 1e-11);
            if def.positions.is_empty() {
                self.factor = Some(f);
                return Ok(());
            }
            for (&pos, &row) in def.positions.iter().zip(def.rows.iter()) {
                let evicted = self.basis[pos];
                self.vstat[evicted] = self.default_nb_stat(evicted);
                let slack = self.slack_col_of_row(row);
                if let VStat::Basic(_) = self.vstat[slack] {
                    return Err(format!(
                        "basis repair failed: slack of row {row} already basic"
                    ));
                }
                self.basis[pos] = slack;
                self.vstat[slack] = VStat::Basic(pos as u32);
            }
        }
        Err("basis repeatedly singular after repair".to_string())
    }

    fn compute_xb(&mut self) {
        let mut rhs_eff = self.rhs.clone();
        for (j, &st) in self.vstat.iter().enumerate() {
            if matches!(st, VStat::Basic(_)) {
                continue;
            }
            let v = self.nb_value(j);
            if v != 0.0 {
                let col = &self.cols[j];
                for (&i, &a) in col.idx.iter().zip(&col.val) {
                    rhs_eff[i as usize] -= a * v;
                }
            }
        }
        self.factor.as_ref().unwrap().ftran(&mut rhs_eff, &mut self.scratch);
        self.xb = rhs_eff;
    }

    fn refactorize(&mut self) -> Result<(), String> {
        self.factorize()?;
        self.compute_xb();
        Ok(())
    }

    fn ftran_col(&mut self, j: usize) {
        self.w.clear();
        self.w.resize(self.m, 0.0);
        self.cols[j].scatter_into(&mut self.w);
        let f = self.factor.as_ref().unwrap();
        let mut w = std::mem::take(&mut self.w);
        f.ftran(&mut w, &mut self.scratch);
        self.w = w;
    }

    /// Cold start: slack basis, structural variables at bounds, artificials
    /// absorbing residuals the slacks cannot hold.
    pub fn solve_from_scratch(&mut self) -> Result<LpOutcome, String> {
        // Pin the whole artificial pool.
        for j in self.first_art..self.cols.len() {
            self.lb[j] = 0.0;
            self.ub[j] = 0.0;
        }
        self.vstat = (0..self.cols.len())
            .map(|j| {
                if j >= self.first_art {
                    VStat::AtLower
                } else {
                    self.default_nb_stat(j)
                }
            })
            .collect();
        self.basis = (0..self.m).map(|i| self.slack_col_of_row(i)).collect();
        for i in 0..self.m {
            let s = self.slack_col_of_row(i);
            self.vstat[s] = VStat::Basic(i as u32);
        }
        self.factorize()?;
        self.compute_xb();

        let mut need_phase1 = false;
        for i in 0..self.m {
            let j = self.basis[i];
            let (lo, hi) = (self.lb[j], self.ub[j]);
            let x = self.xb[i];
            if x < lo - self.cfg.feas_tol || x > hi + self.cfg.feas_tol {
                let clamped = x.clamp(lo, hi);
                let clamped = if clamped.is_finite() { clamped } else { 0.0 };
                let resid = x - clamped;
                let art = self.art_col(i, resid > 0.0);
                self.lb[art] = 0.0;
                self.ub[art] = INF;
                self.vstat[j] = if clamped <= lo { VStat::AtLower } else { VStat::AtUpper };
                self.vstat[art] = VStat::Basic(i as u32);
                self.basis[i] = art;
                self.xb[i] = resid.abs();
                need_phase1 = true;
            }
        }

        if need_phase1 {
            self.factorize()?;
            self.compute_xb();
            let out = self.primal_loop(Phase::One)?;
            match out.status {
                LpStatus::IterLimit => return Ok(out),
                LpStatus::Unbounded => return Err("phase 1 unbounded".into()),
                _ => {}
            }
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &j)| j >= self.first_art)
                .map(|(p, _)| self.xb[p].abs())
                .sum();
            if infeas > self.cfg.feas_tol * 10.0 {
                let farkas = self.phase1_farkas();
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    objective: infeas,
                    farkas_rows: Some(farkas),
                });
            }
            for j in self.first_art..self.cols.len() {
                self.lb[j] = 0.0;
                self.ub[j] = 0.0;
            }
        }
        self.primal_loop(Phase::Two)
    }

    fn phase1_farkas(&mut self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            y[p] = self.cost(Phase::One, j);
        }
        let f = self.factor.as_ref().unwrap();
        let mut scratch = Vec::new();
        f.btran(&mut y, &mut scratch);
        // Flipped so the certificate satisfies y^T b > sup_x y^T A x.
        y.iter_mut().for_each(|v| *v = -*v);
        y
    }

    fn primal_loop(&mut self, phase: Phase) -> Result<LpOutcome, String> {
        let mut progress_ref = 1.0f64;
        loop {
            if self.iterations >= self.cfg.iter_limit {
                return Ok(LpOutcome {
                    status: LpStatus::IterLimit,
                    objective: self.phase_objective(phase),
                    farkas_rows: None,
                });
            }
            self.iterations += 1;

            self.y.clear();
            self.y.resize(self.m, 0.0);
            for (p, &j) in self.basis.iter().enumerate() {
                self.y[p] = self.cost(phase, j);
            }
            {
                let f = self.factor.as_ref().unwrap();
                let mut y = std::mem::take(&mut self.y);
                f.btran(&mut y, &mut self.scratch);
                self.y = y;
            }
            let Some((jin, dir, dabs)) = self.price(phase) else {
                return Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    objective: self.phase_objective(phase),
                    farkas_rows: None,
                });
            };

            self.ftran_col(jin);

            let step;
            match self.ratio_test(jin, dir) {
                Ratio::Unbounded => {
                    if phase == Phase::One {
                        return Err("phase-1 ratio test unbounded".into());
                    }
                    return Ok(LpOutcome {
                        status: LpStatus::Unbounded,
                        objective: -INF,
                        farkas_rows: None,
                    });
                }
                Ratio::BoundFlip(t) => {
                    step = t;
                    for i in 0..self.m {
                        let wi = self.w[i];
                        if wi != 0.0 {
                            self.xb[i] -= t * dir * wi;
                        }
                    }
                    self.vstat[jin] = match self.vstat[jin] {
                        VStat::AtLower => VStat::AtUpper,
                        VStat::AtUpper => VStat::AtLower,
                        s => s,
                    };
                }
                Ratio::Pivot { pos, t, to_upper } => {
                    step = t;
                    let jout = self.basis[pos];
                    for i in 0..self.m {
                        let wi = self.w[i];
                        if wi != 0.0 {
                            self.xb[i] -= t * dir * wi;
                        }
                    }
                    let new_val = self.nb_value(jin) + dir * t;
                    self.vstat[jout] = if to_upper { VStat::AtUpper } else { VStat::AtLower };
                    if phase == Phase::One && jout >= self.first_art {
                        // Artificials never re-enter.
                        self.lb[jout] = 0.0;
                        self.ub[jout] = 0.0;
                        self.vstat[jout] = VStat::AtLower;
                    }
                    self.vstat[jin] = VStat::Basic(pos as u32);
                    self.basis[pos] = jin;
                    self.xb[pos] = new_val;
                    let w = std::mem::take(&mut self.w);
                    self.factor.as_mut().unwrap().push_eta(pos, &w, 1e-14);
                    self.w = w;

                    let f = self.factor.as_ref().unwrap();
                    if f.eta_count() >= self.cfg.refactor_every
                        || f.eta_nnz() > 4 * self.m + 1000
                    {
                        self.refactorize()?;
                    }
                }
            }

            // Stall detection via the guaranteed decrease |d| * step.
            let gain = dabs * step;
            progress_ref = progress_ref.max(gain);
            if gain > 1e-12 * progress_ref {
                self.stall = 0;
                self.bland = false;
            } else {
                self.stall += 1;
                if self.stall > 1000 {
                    self.bland = true;
                }
            }
        }
    }

    fn phase_objective(&self, phase: Phase) -> f64 {
        match phase {
            Phase::One => self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &j)| j >= self.first_art)
                .map(|(p, _)| self.xb[p])
                .sum(),
            Phase::Two => self.objective_value(),
        }
    }

    fn price(&mut self, phase: Phase) -> Option<(usize, f64, f64)> {
        let ncols = self.cols.len();
        let tol = self.cfg.opt_tol;

        let eligible = |s: &Simplex, j: usize| -> Option<(f64, f64)> {
            if s.lb[j] == s.ub[j] {
                return None;
            }
            match s.vstat[j] {
                VStat::Basic(_) => None,
                VStat::AtLower => {
                    let d = s.cost(phase, j) - s.cols[j].dot_dense(&s.y);
                    (d < -tol).then_some((d.abs(), 1.0))
                }
                VStat::AtUpper => {
                    let d = s.cost(phase, j) - s.cols[j].dot_dense(&s.y);
                    (d > tol).then_some((d.abs(), -1.0))
                }
                VStat::FreeNb => {
                    let d = s.cost(phase, j) - s.cols[j].dot_dense(&s.y);
                    (d.abs() > tol).then_some((d.abs(), if d < 0.0 { 1.0 } else { -1.0 }))
                }
            }
        };

        if self.bland {
            for j in 0..ncols {
                if let Some((dabs, dir)) = eligible(self, j) {
                    return Some((j, dir, dabs));
                }
            }
            return None;
        }

        let window = (ncols / 8).max(2000);
        let mut scanned = 0;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut j = self.price_cursor % ncols;
        while scanned < ncols {
            if let Some((score, dir)) = eligible(self, j) {
                if best.map(|(b, bj, _)| score > b || (score == b && j < bj)).unwrap_or(true) {
                    best = Some((score, j, dir));
                }
            }
            scanned += 1;
            j += 1;
            if j == ncols {
                j = 0;
            }
            if best.is_some() && scanned >= window {
                break;
            }
        }
        self.price_cursor = j;
        best.map(|(dabs, j, dir)| (j, dir, dabs))
    }

    fn ratio_test(&self, jin: usize, dir: f64) -> Ratio {
        let delta = self.cfg.feas_tol;
        let piv_tol = 1e-9;

        let own_range = if self.lb[jin].is_finite() && self.ub[jin].is_finite() {
            self.ub[jin] - self.lb[jin]
        } else {
            INF
        };

        // Pass 1: maximum step with bounds relaxed by delta.
        let mut t_max = own_range + delta;
        for i in 0..self.m {
            let wi = dir * self.w[i];
            if wi.abs() <= piv_tol {
                continue;
            }
            let j = self.basis[i];
            let t = if wi > 0.0 {
                if self.lb[j].is_finite() {
                    (self.xb[i] - self.lb[j] + delta) / wi
                } else {
                    continue;
                }
            } else if self.ub[j].is_finite() {
                (self.xb[i] - self.ub[j] - delta) / wi
            } else {
                continue;
            };
            if t < t_max {
                t_max = t;
            }
        }
        if !t_max.is_finite() {
            return Ratio::Unbounded;
        }

        // Pass 2: largest pivot among blockers within the relaxed step.
        let mut best: Option<(usize, f64, bool, f64)> = None;
        for i in 0..self.m {
            let wi = dir * self.w[i];
            if wi.abs() <= piv_tol {
                continue;
            }
            let j = self.basis[i];
            let (t, to_upper) = if wi > 0.0 {
                if !self.lb[j].is_finite() {
                    continue;
                }
                ((self.xb[i] - self.lb[j]) / wi, false)
            } else {
                if !self.ub[j].is_finite() {
                    continue;
                }
                ((self.xb[i] - self.ub[j]) / wi, true)
            };
            if t <= t_max {
                let wabs = self.w[i].abs();
                let better = match best {
                    None => true,
                    Some((bpos, _, _, bw)) => {
                        if self.bland {
                            self.basis[i] < self.basis[bpos]
                        } else {
                            wabs > bw
                        }
                    }
                };
                if better {
                    best = Some((i, t.max(0.0), to_upper, wabs));
                }
            }
        }

        match best {
            Some((pos, t, to_upper, _)) if t <= own_range => Ratio::Pivot { pos, t, to_upper },
            Some(_) => Ratio::BoundFlip(own_range),
            None => {
                if own_range.is_finite() {
                    Ratio::BoundFlip(own_range)
                } else {
                    Ratio::Unbounded
                }
            }
        }
    }

    /// Dual simplex from the current (dual-feasible) basis.
    pub fn reoptimize_dual(&mut self) -> Result<LpOutcome, String> {
        self.renormalize_statuses();
        self.refactorize()?;

        let mut d = self.fresh_reduced_costs();
        let feas_tol = self.cfg.feas_tol;
        let dual_tol = self.cfg.opt_tol;
        let tol_piv = 1e-9;
        let mut since_refresh = 0usize;
        let mut alpha = vec![0.0f64; self.cols.len()];

        loop {
            if self.iterations >= self.cfg.iter_limit {
                return Ok(LpOutcome {
                    status: LpStatus::IterLimit,
                    objective: self.objective_value(),
                    farkas_rows: None,
                });
            }
            self.iterations += 1;

            let mut rbest: Option<(usize, f64, f64)> = None;
            for p in 0..self.m {
                let j = self.basis[p];
                let x = self.xb[p];
                let below = self.lb[j] - x;
                let above = x - self.ub[j];
                if below > feas_tol {
                    if rbest.map(|(_, v, _)| below > v).unwrap_or(true) {
                        rbest = Some((p, below, 1.0));
                    }
                } else if above > feas_tol && rbest.map(|(_, v, _)| above > v).unwrap_or(true) {
                    rbest = Some((p, above, -1.0));
                }
            }
            let Some((rpos, _viol, sigma)) = rbest else {
                return Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    objective: self.objective_value(),
                    farkas_rows: None,
                });
            };

            let mut rho = vec![0.0; self.m];
            rho[rpos] = 1.0;
            self.factor.as_ref().unwrap().btran(&mut rho, &mut self.scratch);

            // One pass: alpha_j for all nonbasic columns, ratio pass 1.
            let mut tmax = INF;
            let mut any = false;
            for j in 0..self.cols.len() {
                if matches!(self.vstat[j], VStat::Basic(_)) || self.lb[j] == self.ub[j] {
                    alpha[j] = 0.0;
                    continue;
                }
                let a = self.cols[j].dot_dense(&rho);
                alpha[j] = a;
                let sa = sigma * a;
                let ok = match self.vstat[j] {
                    VStat::AtLower => sa < -tol_piv,
                    VStat::AtUpper => sa > tol_piv,
                    VStat::FreeNb => sa.abs() > tol_piv,
                    VStat::Basic(_) => false,
                };
                if ok {
                    any = true;
                    let ratio = (d[j].abs() + dual_tol) / sa.abs();
                    if ratio < tmax {
                        tmax = ratio;
                    }
                }
            }
            if !any {
                let cert: Vec<f64> = rho.iter().map(|&v| sigma * v).collect();
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    objective: INF,
                    farkas_rows: Some(cert),
                });
            }

            let mut ebest: Option<(usize, f64)> = None; // j, |alpha|
            for j in 0..self.cols.len() {
                if matches!(self.vstat[j], VStat::Basic(_)) || self.lb[j] == self.ub[j] {
                    continue;
                }
                let sa = sigma * alpha[j];
                let ok = match self.vstat[j] {
                    VStat::AtLower => sa < -tol_piv,
                    VStat::AtUpper => sa > tol_piv,
                    VStat::FreeNb => sa.abs() > tol_piv,
                    VStat::Basic(_) => false,
                };
                if !ok {
                    continue;
                }
                if d[j].abs() / sa.abs() <= tmax {
                    let better = match ebest {
                        None => true,
                        Some((bj, bw)) => {
                            if self.bland {
                                j < bj
                            } else {
                                sa.abs() > bw
                            }
                        }
                    };
                    if better {
                        ebest = Some((j, sa.abs()));
                    }
                }
            }
            let (jin, _) = ebest.unwrap();

            self.ftran_col(jin);
            let wr = self.w[rpos];
            if wr.abs() < 1e-9 {
                self.refactorize()?;
                d = self.fresh_reduced_costs();
                since_refresh = 0;
                continue;
            }

            let jout = self.basis[rpos];
            let target = if sigma > 0.0 { self.lb[jout] } else { self.ub[jout] };
            let step = (self.xb[rpos] - target) / wr;
            for i in 0..self.m {
                let wi = self.w[i];
                if wi != 0.0 {
                    self.xb[i] -= step * wi;
                }
            }
            let new_val = self.nb_value(jin) + step;
            self.vstat[jout] = if sigma > 0.0 { VStat::AtLower } else { VStat::AtUpper };
            self.vstat[jin] = VStat::Basic(rpos as u32);
            self.basis[rpos] = jin;
            self.xb[rpos] = new_val;

            // Incremental dual update from the cached pivot row.
            let theta = d[jin] / alpha[jin];
            for j in 0..self.cols.len() {
                if alpha[j] != 0.0 && !matches!(self.vstat[j], VStat::Basic(_)) {
                    d[j] -= theta * alpha[j];
                }
            }
            d[jin] = 0.0;
            d[jout] = -theta;

            let w = std::mem::take(&mut self.w);
            self.factor.as_mut().unwrap().push_eta(rpos, &w, 1e-14);
            self.w = w;
            since_refresh += 1;
            if self.factor.as_ref().unwrap().eta_count() >= self.cfg.refactor_every
                || since_refresh >= self.cfg.refactor_every
            {
                self.refactorize()?;
                d = self.fresh_reduced_costs();
                since_refresh = 0;
            }
        }
    }

    fn fresh_reduced_costs(&mut self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            y[p] = self.cost(Phase::Two, j);
        }
        self.factor.as_ref().unwrap().btran(&mut y, &mut self.scratch);
        (0..self.cols.len())
            .map(|j| {
                if matches!(self.vstat[j], VStat::Basic(_)) {
                    0.0
                } else {
                    self.cost(Phase::Two, j) - self.cols[j].dot_dense(&y)
                }
            })
            .collect()
    }
}
