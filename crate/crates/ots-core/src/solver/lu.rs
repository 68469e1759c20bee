//! Sparse LU factorization of simplex bases.
//!
//! Left-looking Gilbert-Peierls factorization with partial pivoting, plus a
//! product-form eta file so bases are refactorized only every few dozen
//! pivots. All solves are column-oriented and skip structural zeros, which
//! keeps FTRAN/BTRAN near O(nnz) on the block-structured bases produced by
//! the scenario formulations.

/// One column, row indices strictly increasing.
#[derive(Debug, Clone, Default)]
pub struct SparseCol {
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseCol {
    pub fn unit(row: usize) -> Self {
        SparseCol { idx: vec![row as u32], val: vec![1.0] }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn dot_dense(&self, v: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &a)| a * v[i as usize])
            .sum()
    }

    pub fn scatter_into(&self, v: &mut [f64]) {
        for (&i, &a) in self.idx.iter().zip(&self.val) {
            v[i as usize] = a;
        }
    }
}

/// Eta vector from one pivot: replaces basis position `pos` with a column
/// whose FTRAN image was `col` (pivot entry included).
#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Entries at positions != pos.
    idx: Vec<u32>,
    val: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct LuFactors {
    m: usize,
    /// Unit lower factor, column k holds entries below the diagonal (step space).
    l_cols: Vec<Vec<(u32, f64)>>,
    /// Upper factor, column k holds entries above the diagonal (step space).
    u_cols: Vec<Vec<(u32, f64)>>,
    u_diag: Vec<f64>,
    /// rowp[k] = original row pivotal at step k.
    rowp: Vec<u32>,
    /// colp[k] = basis position eliminated at step k.
    colp: Vec<u32>,
}

pub struct Factorization {
    pub m: usize,
    lu: LuFactors,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

/// Outcome of a factorization attempt: deficient basis positions paired with
/// the rows left without a pivot (both empty on success).
pub struct Deficiency {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl Factorization {
    /// Factorize the basis given by `cols` (one sparse column per basis
    /// position). Columns are eliminated in ascending-nnz order; dependent
    /// columns are reported for repair rather than treated as fatal.
    pub fn factorize(cols: &[&SparseCol], m: usize, pivot_tol: f64) -> (Factorization, Deficiency) {
        assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].nnz(), p));

        let mut pinv: Vec<i64> = vec![-1; m]; // original row -> step
        let mut rowp: Vec<u32> = Vec::with_capacity(m);
        let mut colp: Vec<u32> = Vec::with_capacity(m);
        // During elimination, L columns carry original row indices.
        let mut l_orig: Vec<Vec<(u32, f64)>> = Vec::with_capacity(m);
        let mut u_cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(m);
        let mut u_diag: Vec<f64> = Vec::with_capacity(m);

        let mut x = vec![0.0f64; m];
        let mut mark = vec![false; m];
        let mut touched: Vec<u32> = Vec::new();
        let mut stack: Vec<(u32, usize)> = Vec::new();
        let mut topo: Vec<u32> = Vec::new();

        let mut deficient_positions = Vec::new();

        for &pos in &order {
            let col = cols[pos];
            // Symbolic: reach set of the column pattern through L.
            topo.clear();
            for &i0 in &col.idx {
                if mark[i0 as usize] {
                    continue;
                }
                stack.push((i0, 0));
                mark[i0 as usize] = true;
                while let Some(&mut (i, ref mut next)) = stack.last_mut() {
                    let step = pinv[i as usize];
                    let deps: &[(u32, f64)] = if step >= 0 { &l_orig[step as usize] } else { &[] };
                    if *next < deps.len() {
                        let j = deps[*next].0;
                        *next += 1;
                        if !mark[j as usize] {
                            mark[j as usize] = true;
                            stack.push((j, 0));
                        }
                    } else {
                        stack.pop();
                        topo.push(i);
                    }
                }
            }
            // Numeric sparse lower solve in topological order.
            col.scatter_into(&mut x);
            for &i in topo.iter().rev() {
                let step = pinv[i as usize];
                if step >= 0 {
                    let xi = x[i as usize];
                    if xi != 0.0 {
                        for &(j, v) in &l_orig[step as usize] {
                            x[j as usize] -= v * xi;
                        }
                    }
                }
            }
            touched.extend_from_slice(&topo);

            // Pivot: largest magnitude among rows not yet pivotal.
            let mut piv_row: Option<u32> = None;
            let mut piv_abs = 0.0f64;
            for &i in &topo {
                if pinv[i as usize] < 0 {
                    let a = x[i as usize].abs();
                    if a > piv_abs {
                        piv_abs = a;
                        piv_row = Some(i);
                    }
                }
            }

            if piv_abs <= pivot_tol {
                deficient_positions.push(pos);
            } else {
                let p = piv_row.unwrap();
                let k = rowp.len();
                let piv = x[p as usize];
                let mut ucol: Vec<(u32, f64)> = Vec::new();
                let mut lcol: Vec<(u32, f64)> = Vec::new();
                for &i in &topo {
                    let v = x[i as usize];
                    if v == 0.0 || i == p {
                        continue;
                    }
                    let step = pinv[i as usize];
                    if step >= 0 {
                        ucol.push((step as u32, v));
                    } else {
                        lcol.push((i, v / piv));
                    }
                }
                pinv[p as usize] = k as i64;
                rowp.push(p);
                colp.push(pos as u32);
                u_diag.push(piv);
                u_cols.push(ucol);
                l_orig.push(lcol);
            }

            for &i in &touched {
                x[i as usize] = 0.0;
                mark[i as usize] = false;
            }
            touched.clear();
        }

        let rows_unpivoted: Vec<usize> =
            (0..m).filter(|&i| pinv[i] < 0).collect();

        // Re-index L into step space for the triangular solves.
        let mut l_cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(l_orig.len());
        for lc in &l_orig {
            let col: Vec<(u32, f64)> = lc
                .iter()
                .filter(|&&(i, _)| pinv[i as usize] >= 0)
                .map(|&(i, v)| (pinv[i as usize] as u32, v))
                .collect();
            l_cols.push(col);
        }

        let lu = LuFactors { m, l_cols, u_cols, u_diag, rowp, colp };
        (
            Factorization { m, lu, etas: Vec::new(), eta_nnz: 0 },
            Deficiency { positions: deficient_positions, rows: rows_unpivoted },
        )
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    /// Record a pivot: basis position `pos` was replaced; `w` is the FTRAN
    /// image of the entering column (position space, dense).
    pub fn push_eta(&mut self, pos: usize, w: &[f64], drop_tol: f64) {
        let pivot = w[pos];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &v) in w.iter().enumerate() {
            if i != pos && v.abs() > drop_tol {
                idx.push(i as u32);
                val.push(v);
            }
        }
        self.eta_nnz += idx.len() + 1;
        self.etas.push(Eta { pos, pivot, idx, val });
    }

    /// Solve B w = rhs in place (`rhs` indexed by original row, result by
    /// basis position).
    pub fn ftran(&self, rhs: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let m = self.m;
        let lu = &self.lu;
        scratch.clear();
        scratch.resize(m, 0.0);
        // Permute into step space.
        for k in 0..m {
            scratch[k] = rhs[lu.rowp[k] as usize];
        }
        // L solve.
        for k in 0..m {
            let xk = scratch[k];
            if xk != 0.0 {
                for &(i, v) in &lu.l_cols[k] {
                    scratch[i as usize] -= v * xk;
                }
            }
        }
        // U solve.
        for k in (0..m).rev() {
            let xk = scratch[k];
            if xk != 0.0 {
                let xk = xk / lu.u_diag[k];
                scratch[k] = xk;
                for &(i, v) in &lu.u_cols[k] {
                    scratch[i as usize] -= v * xk;
                }
            }
        }
        // Un-permute columns: position colp[k] receives component k.
        for v in rhs.iter_mut() {
            *v = 0.0;
        }
        for k in 0..m {
            rhs[lu.colp[k] as usize] = scratch[k];
        }
        // Apply eta file in order.
        for eta in &self.etas {
            let xp = rhs[eta.pos] / eta.pivot;
            if xp != 0.0 || rhs[eta.pos] != 0.0 {
                rhs[eta.pos] = xp;
                for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                    rhs[i as usize] -= v * xp;
                }
            }
        }
    }

    /// Solve B^T y = c in place (`c` indexed by basis position, result by
    /// original row).
    pub fn btran(&self, c: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let m = self.m;
        // Eta transposes in reverse order.
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                acc -= v * c[i as usize];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        let lu = &self.lu;
        scratch.clear();
        scratch.resize(m, 0.0);
        for k in 0..m {
            scratch[k] = c[lu.colp[k] as usize];
        }
        // U^T solve (forward).
        for k in 0..m {
            let mut acc = scratch[k];
            for &(i, v) in &lu.u_cols[k] {
                acc -= v * scratch[i as usize];
            }
            scratch[k] = acc / lu.u_diag[k];
        }
        // L^T solve (backward).
        for k in (0..m).rev() {
            let mut acc = scratch[k];
            for &(i, v) in &lu.l_cols[k] {
                acc -= v * scratch[i as usize];
            }
            scratch[k] = acc;
        }
        for v in c.iter_mut() {
            *v = 0.0;
        }
        for k in 0..m {
            c[lu.rowp[k] as usize] = scratch[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(entries: &[(usize, f64)]) -> SparseCol {
        let mut e: Vec<_> = entries.to_vec();
        e.sort_by_key(|&(i, _)| i);
        SparseCol {
            idx: e.iter().map(|&(i, _)| i as u32).collect(),
            val: e.iter().map(|&(_, v)| v).collect(),
        }
    }

    #[test]
    fn factorize_and_solve_small_dense() {
        // B = [[2,1,0],[1,3,1],[0,1,4]]
        let cols = vec![
            col(&[(0, 2.0), (1, 1.0)]),
            col(&[(0, 1.0), (1, 3.0), (2, 1.0)]),
            col(&[(1, 1.0), (2, 4.0)]),
        ];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let (f, d) = Factorization::factorize(&refs, 3, 1e-12);
        assert!(d.positions.is_empty());

        let mut rhs = vec![5.0, 10.0, 13.0];
        let mut scratch = Vec::new();
        f.ftran(&mut rhs, &mut scratch);
        // Check B w = b.
        let w = rhs;
        let b_rows = [
            [2.0, 1.0, 0.0],
            [1.0, 3.0, 1.0],
            [0.0, 1.0, 4.0],
        ];
        for (i, row) in b_rows.iter().enumerate() {
            let acc: f64 = row.iter().zip(&w).map(|(a, x)| a * x).sum();
            let b = [5.0, 10.0, 13.0][i];
            assert!((acc - b).abs() < 1e-12, "row {i}: {acc} vs {b}");
        }

        let mut c = vec![1.0, 2.0, 3.0];
        f.btran(&mut c, &mut scratch);
        for (j, colv) in b_rows.iter().enumerate() {
            // (B^T y)_j = sum_i B[i][j] y[i]
            let acc: f64 = (0..3).map(|i| b_rows[i][j] * c[i]).sum();
            let _ = colv;
            assert!((acc - [1.0, 2.0, 3.0][j]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_reports_deficiency() {
        let cols = vec![
            col(&[(0, 1.0), (1, 1.0)]),
            col(&[(0, 2.0), (1, 2.0)]),
        ];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let (_, d) = Factorization::factorize(&refs, 2, 1e-10);
        assert_eq!(d.positions.len(), 1);
        assert_eq!(d.rows.len(), 1);
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let cols = vec![col(&[(0, 1.0)]), col(&[(1, 1.0)])];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let (mut f, d) = Factorization::factorize(&refs, 2, 1e-12);
        assert!(d.positions.is_empty());

        // Replace basis position 0 with column [3, 1]^T.
        let newcol = col(&[(0, 3.0), (1, 1.0)]);
        let mut w = vec![0.0; 2];
        newcol.scatter_into(&mut w);
        let mut scratch = Vec::new();
        f.ftran(&mut w, &mut scratch);
        f.push_eta(0, &w, 0.0);

        // New basis is [[3,0],[1,1]]; solve against it.
        let mut rhs = vec![6.0, 5.0];
        f.ftran(&mut rhs, &mut scratch);
        assert!((rhs[0] - 2.0).abs() < 1e-12);
        assert!((rhs[1] - 3.0).abs() < 1e-12);

        let mut c = vec![1.0, 1.0];
        f.btran(&mut c, &mut scratch);
        // B^T y = c with B = [[3,0],[1,1]] -> 3 y0 + 1 y1 = 1, y1 = 1.
        assert!((3.0 * c[0] + c[1] - 1.0).abs() < 1e-12);
        assert!((c[1] - 1.0).abs() < 1e-12);
    }
}
