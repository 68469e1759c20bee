//! Wind-uncertainty support polytope: halfspace form, moments, sampling and
//! vertex enumeration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::program::{LinExpr, MathProgram, Sense, VarKind};
use crate::solver::{solve_lp, SolveStatus, SolverConfig};

/// RNG algorithm identifier recorded in reports.
pub const RNG_ALGO: &str = "chacha20";

/// Support set { xi : S xi <= t } with first and second moments of xi.
#[derive(Debug, Clone)]
pub struct UncertaintyPolytope {
    pub s: DMatrix<f64>,
    pub t: DVector<f64>,
    pub mu: DVector<f64>,
    /// E[xi xi^T]; required by the dual-LDR builder.
    pub second_moment: Option<DMatrix<f64>>,
    /// Present when the polytope is an axis-aligned box.
    pub box_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl UncertaintyPolytope {
    pub fn dim(&self) -> usize {
        self.s.ncols()
    }

    pub fn n_halfspaces(&self) -> usize {
        self.s.nrows()
    }

    /// Box support with uniform-distribution moments: S = [I; -I],
    /// t = [xi_max; -xi_min], mean at the center, E[xi_k^2] = mu_k^2 +
    /// width_k^2 / 12, off-diagonal products independent.
    pub fn box_support(xi_min: &[f64], xi_max: &[f64]) -> Result<UncertaintyPolytope> {
        assert_eq!(xi_min.len(), xi_max.len());
        let k = xi_min.len();
        for i in 0..k {
            if xi_min[i] >= xi_max[i] {
                return Err(Error::EmptyBox { component: i, lo: xi_min[i], hi: xi_max[i] });
            }
        }
        Ok(Self::box_support_unchecked(xi_min, xi_max))
    }

    /// Box construction without the strict-width precondition; degenerate
    /// components are allowed (used for the deterministic reduction).
    pub fn box_support_unchecked(xi_min: &[f64], xi_max: &[f64]) -> UncertaintyPolytope {
        let k = xi_min.len();
        let mut s = DMatrix::zeros(2 * k, k);
        let mut t = DVector::zeros(2 * k);
        for i in 0..k {
            s[(i, i)] = 1.0;
            t[i] = xi_max[i];
            s[(k + i, i)] = -1.0;
            t[k + i] = -xi_min[i];
        }
        let mu = DVector::from_fn(k, |i, _| 0.5 * (xi_min[i] + xi_max[i]));
        let mut q = &mu * mu.transpose();
        for i in 0..k {
            let width = xi_max[i] - xi_min[i];
            q[(i, i)] = mu[i] * mu[i] + width * width / 12.0;
        }
        UncertaintyPolytope {
            s,
            t,
            mu,
            second_moment: Some(q),
            box_bounds: Some((xi_min.to_vec(), xi_max.to_vec())),
        }
    }

    /// Zero-dimensional support (no uncertain wind).
    pub fn empty() -> UncertaintyPolytope {
        UncertaintyPolytope {
            s: DMatrix::zeros(0, 0),
            t: DVector::zeros(0),
            mu: DVector::zeros(0),
            second_moment: Some(DMatrix::zeros(0, 0)),
            box_bounds: Some((Vec::new(), Vec::new())),
        }
    }

    /// Override the mean (must still lie in the support; checked by
    /// `validate`). Second moments are shifted to keep the covariance.
    pub fn with_mean(mut self, mu: Vec<f64>) -> UncertaintyPolytope {
        let new_mu = DVector::from_vec(mu);
        if let Some(q) = self.second_moment.take() {
            let cov = &q - &self.mu * self.mu.transpose();
            self.second_moment = Some(cov + &new_mu * new_mu.transpose());
        }
        self.mu = new_mu;
        self
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        let v = DVector::from_column_slice(xi);
        let lhs = &self.s * v;
        (0..self.n_halfspaces()).all(|r| lhs[r] <= self.t[r] + tol)
    }

    /// Analytic support function for boxes: max_{S xi <= t} a . xi.
    pub fn support_max_box(&self, a: &[f64]) -> Option<f64> {
        let (lo, hi) = self.box_bounds.as_ref()?;
        let mut v = 0.0;
        for i in 0..a.len() {
            let c = 0.5 * (lo[i] + hi[i]);
            let hw = 0.5 * (hi[i] - lo[i]);
            v += a[i] * c + a[i].abs() * hw;
        }
        Some(v)
    }

    /// LP support function over the halfspace form.
    pub fn support_max_lp(&self, a: &[f64], cfg: &SolverConfig) -> Result<f64> {
        let k = self.dim();
        if k == 0 {
            return Ok(0.0);
        }
        let mut p = MathProgram::new("support");
        let xi = p.add_block("xi", k, -f64::INFINITY, f64::INFINITY, VarKind::Continuous);
        for (i, &c) in a.iter().enumerate() {
            p.set_objective_term(xi.var(i), -c); // maximize
        }
        for r in 0..self.n_halfspaces() {
            let mut e = LinExpr::new();
            for c in 0..k {
                e.add(xi.var(c), self.s[(r, c)]);
            }
            p.add_row(format!("h{r}"), e, Sense::Le, self.t[r]);
        }
        p.seal();
        let rep = solve_lp(&p, cfg)?;
        match rep.status {
            SolveStatus::Optimal => Ok(-rep.objective),
            SolveStatus::Unbounded => Ok(f64::INFINITY),
            s => Err(Error::Numerical { message: format!("support LP status {s:?}") }),
        }
    }

    /// Chebyshev-style interior test: is there a point with S xi <= t - eps?
    pub fn is_full_dimensional(&self, cfg: &SolverConfig) -> Result<bool> {
        let k = self.dim();
        if k == 0 {
            return Ok(true);
        }
        if let Some((lo, hi)) = &self.box_bounds {
            return Ok(lo.iter().zip(hi).all(|(a, b)| b > a));
        }
        // max r s.t. S xi + ||S_row|| r <= t, r >= 0; interior iff r* > 0.
        let mut p = MathProgram::new("chebyshev");
        let xi = p.add_block("xi", k, -f64::INFINITY, f64::INFINITY, VarKind::Continuous);
        let r = p.add_block("r", 1, 0.0, 1e6, VarKind::Continuous);
        p.set_objective_term(r.var(0), -1.0);
        for row in 0..self.n_halfspaces() {
            let norm: f64 = (0..k).map(|c| self.s[(row, c)].powi(2)).sum::<f64>().sqrt();
            let mut e = LinExpr::new();
            for c in 0..k {
                e.add(xi.var(c), self.s[(row, c)]);
            }
            e.add(r.var(0), norm);
            p.add_row(format!("h{row}"), e, Sense::Le, self.t[row]);
        }
        p.seal();
        let rep = solve_lp(&p, cfg)?;
        Ok(rep.status == SolveStatus::Optimal && -rep.objective > 1e-9)
    }

    /// Structural invariants: bounded and non-empty support (2K support
    /// LPs), interior point, mean inside, PSD covariance.
    pub fn validate(&self, cfg: &SolverConfig) -> Result<()> {
        let k = self.dim();
        for i in 0..k {
            let mut a = vec![0.0; k];
            a[i] = 1.0;
            let up = self.support_max_lp(&a, cfg)?;
            a[i] = -1.0;
            let dn = self.support_max_lp(&a, cfg)?;
            if !up.is_finite() || !dn.is_finite() {
                return Err(Error::Validation {
                    path: format!("polytope dim {i}"),
                    message: "support set is unbounded".to_string(),
                });
            }
        }
        if !self.is_full_dimensional(cfg)? {
            return Err(Error::NotFullDimensional);
        }
        let mu: Vec<f64> = self.mu.iter().copied().collect();
        if !self.contains(&mu, 1e-9) {
            return Err(Error::Validation {
                path: "polytope.mu".to_string(),
                message: "mean lies outside the support".to_string(),
            });
        }
        if let Some(q) = &self.second_moment {
            if k > 0 {
                let cov = q - &self.mu * self.mu.transpose();
                let sym = 0.5 * (&cov + cov.transpose());
                let eig = sym.symmetric_eigenvalues();
                let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
                if min_eig < -1e-9 {
                    return Err(Error::NotPsd { min_eig });
                }
            }
        }
        Ok(())
    }

    /// I.i.d. uniform draws from a box support, componentwise independent;
    /// deterministic for a fixed seed.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = self.box_bounds.as_ref().ok_or(Error::UnsupportedSupport)?;
        let k = self.dim();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut xi = Vec::with_capacity(k);
            for i in 0..k {
                if hi[i] > lo[i] {
                    xi.push(rng.gen_range(lo[i]..hi[i]));
                } else {
                    xi.push(lo[i]);
                }
            }
            out.push(xi);
        }
        Ok(out)
    }

    /// All 2^K box corners in lexicographic order.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        const LIMIT: usize = 20;
        let (lo, hi) = self.box_bounds.as_ref().ok_or(Error::UnsupportedSupport)?;
        let k = self.dim();
        if k > LIMIT {
            return Err(Error::DimensionTooLarge { dim: k, limit: LIMIT });
        }
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let mut v = Vec::with_capacity(k);
            for i in 0..k {
                // Coordinate 0 is the most significant bit: lex order.
                let take_max = mask >> (k - 1 - i) & 1 == 1;
                v.push(if take_max { hi[i] } else { lo[i] });
            }
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_moments() {
        let p = UncertaintyPolytope::box_support(&[-1.0], &[1.0]).unwrap();
        assert_eq!(p.n_halfspaces(), 2);
        assert_eq!(p.mu[0], 0.0);
        let q = p.second_moment.as_ref().unwrap();
        assert!((q[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn square_box_has_interior() {
        let p = UncertaintyPolytope::box_support(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(p.n_halfspaces(), 4);
        let cfg = SolverConfig::default();
        assert!(p.is_full_dimensional(&cfg).unwrap());
        p.validate(&cfg).unwrap();
        assert!(p.contains(&[0.0, 0.0], 0.0));
    }

    #[test]
    fn empty_box_rejected() {
        match UncertaintyPolytope::box_support(&[0.0], &[0.0]) {
            Err(Error::EmptyBox { component: 0, .. }) => {}
            other => panic!("expected EmptyBox, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        let p = UncertaintyPolytope::box_support(&[-1.0, -0.5], &[1.0, 0.5]).unwrap();
        let a = p.sample(100, 42).unwrap();
        let b = p.sample(100, 42).unwrap();
        assert_eq!(a, b);
        for xi in &a {
            assert!(p.contains(xi, 1e-12));
        }
        let c = p.sample(100, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_box_samples_constant() {
        let p = UncertaintyPolytope::box_support_unchecked(&[0.0, 0.0], &[0.0, 0.0]);
        let s = p.sample(5, 7).unwrap();
        assert!(s.iter().all(|v| v == &vec![0.0, 0.0]));
    }

    #[test]
    fn sample_mean_law_of_large_numbers() {
        // Uniform on [-1, 1]: sigma^2 = 1/3; mean of 1e5 draws within
        // 4 sigma / sqrt(n) of zero.
        let p = UncertaintyPolytope::box_support(&[-1.0], &[1.0]).unwrap();
        let n = 100_000;
        let s = p.sample(n, 12345).unwrap();
        let mean: f64 = s.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let bound = 4.0 * (1.0f64 / 3.0).sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} vs bound {bound}");
    }

    #[test]
    fn vertices_lexicographic() {
        let p = UncertaintyPolytope::box_support(&[-1.0, -2.0], &[1.0, 2.0]).unwrap();
        let v = p.vertices().unwrap();
        assert_eq!(v, vec![
            vec![-1.0, -2.0],
            vec![-1.0, 2.0],
            vec![1.0, -2.0],
            vec![1.0, 2.0],
        ]);
    }

    #[test]
    fn five_dim_box_vertices_tight() {
        let lo = vec![-1.0; 5];
        let hi = vec![1.0; 5];
        let p = UncertaintyPolytope::box_support(&lo, &hi).unwrap();
        let vs = p.vertices().unwrap();
        assert_eq!(vs.len(), 32);
        for v in &vs {
            assert!(p.contains(v, 1e-12));
            // Each vertex meets exactly K of the 2K halfspaces with equality.
            let tight = (0..p.n_halfspaces())
                .filter(|&r| {
                    let lhs: f64 = (0..5).map(|c| p.s[(r, c)] * v[c]).sum();
                    (lhs - p.t[r]).abs() < 1e-12
                })
                .count();
            assert_eq!(tight, 5);
        }
    }

    #[test]
    fn dimension_guard() {
        let lo = vec![-1.0; 21];
        let hi = vec![1.0; 21];
        let p = UncertaintyPolytope::box_support(&lo, &hi).unwrap();
        assert!(matches!(p.vertices(), Err(Error::DimensionTooLarge { dim: 21, .. })));
    }

    #[test]
    fn lp_support_matches_analytic_box() {
        let p = UncertaintyPolytope::box_support(&[-2.0, -0.5, -1.0], &[1.0, 0.5, 3.0]).unwrap();
        let cfg = SolverConfig::default();
        for a in [[1.0, 2.0, -1.0], [-3.0, 0.0, 0.25], [0.7, -0.7, 0.7]] {
            let lp = p.support_max_lp(&a, &cfg).unwrap();
            let analytic = p.support_max_box(&a).unwrap();
            assert!((lp - analytic).abs() < 1e-9, "{lp} vs {analytic}");
        }
    }
}
