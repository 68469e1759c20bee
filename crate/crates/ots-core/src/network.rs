//! Index-dense grid model and the linear DC-network operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::CaseFile;

#[derive(Debug, Clone)]
pub struct GridLine {
    pub from: usize,
    pub to: usize,
    /// Susceptance, p.u.
    pub b: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub dtheta_max: f64,
    pub switchable: bool,
}

#[derive(Debug, Clone)]
pub struct GridGen {
    pub bus: usize,
    /// $/MWh on the MW quantity; objective coefficients fold in base_mva.
    pub cost_c: f64,
    pub cost_q: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub agc: bool,
}

#[derive(Debug, Clone)]
pub struct GridWind {
    pub bus: usize,
    pub nominal: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

/// Normalized form of a `CaseFile`: dense indices, per-unit quantities.
#[derive(Debug, Clone)]
pub struct Grid {
    pub base_mva: f64,
    pub bus_ids: Vec<i64>,
    pub theta_min: Vec<f64>,
    pub theta_max: Vec<f64>,
    /// Per-bus load, p.u.
    pub load: Vec<f64>,
    pub lines: Vec<GridLine>,
    pub gens: Vec<GridGen>,
    pub wind: Vec<GridWind>,
    pub ref_bus: usize,
    pub max_open: usize,
}

impl Grid {
    pub fn from_case(case: &CaseFile) -> Result<Grid> {
        case.validate()?;
        let base = case.base_mva;
        let index_of = |id: i64| -> usize {
            case.buses.iter().position(|b| b.id == id).expect("validated id")
        };
        let pu = |mw: f64, path: &str| -> Result<f64> {
            let v = mw / base;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Units { path: path.to_string(), value: v })
            }
        };

        let theta_min: Vec<f64> = case.buses.iter().map(|b| b.theta_min).collect();
        let theta_max: Vec<f64> = case.buses.iter().map(|b| b.theta_max).collect();
        let mut load = Vec::with_capacity(case.buses.len());
        for (i, b) in case.buses.iter().enumerate() {
            load.push(pu(b.load, &format!("buses[{i}].load"))?);
        }

        let mut lines = Vec::with_capacity(case.lines.len());
        for (i, l) in case.lines.iter().enumerate() {
            let from = index_of(l.from);
            let to = index_of(l.to);
            // When absent, the widest angle spread consistent with the bus
            // boxes keeps the big-M pair redundant for open lines.
            let dtheta = l.dtheta_max.unwrap_or_else(|| {
                (theta_max[from] - theta_min[to]).min(theta_max[to] - theta_min[from])
            });
            lines.push(GridLine {
                from,
                to,
                b: l.b,
                f_min: pu(l.f_min, &format!("lines[{i}].f_min"))?,
                f_max: pu(l.f_max, &format!("lines[{i}].f_max"))?,
                dtheta_max: dtheta,
                switchable: l.switchable,
            });
        }

        let mut gens = Vec::with_capacity(case.gens.len());
        for (i, g) in case.gens.iter().enumerate() {
            gens.push(GridGen {
                bus: index_of(g.bus),
                cost_c: g.c,
                cost_q: g.q,
                g_min: pu(g.g_min, &format!("gens[{i}].g_min"))?,
                g_max: pu(g.g_max, &format!("gens[{i}].g_max"))?,
                r_minus: pu(g.r_minus, &format!("gens[{i}].r_minus"))?,
                r_plus: pu(g.r_plus, &format!("gens[{i}].r_plus"))?,
                agc: g.agc,
            });
        }

        let mut wind = Vec::with_capacity(case.wind.len());
        for (i, w) in case.wind.iter().enumerate() {
            wind.push(GridWind {
                bus: index_of(w.bus),
                nominal: pu(w.nominal, &format!("wind[{i}].nominal"))?,
                xi_min: pu(w.xi_min, &format!("wind[{i}].xi_min"))?,
                xi_max: pu(w.xi_max, &format!("wind[{i}].xi_max"))?,
            });
        }

        Ok(Grid {
            base_mva: base,
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            theta_min,
            theta_max,
            load,
            lines,
            gens,
            wind,
            ref_bus: index_of(case.ref_bus),
            max_open: case.max_open,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn n_line(&self) -> usize {
        self.lines.len()
    }

    pub fn n_gen(&self) -> usize {
        self.gens.len()
    }

    pub fn n_wind(&self) -> usize {
        self.wind.len()
    }

    /// Wind farms with a genuinely uncertain output (positive box width);
    /// zero-width farms inject only their nominal value.
    pub fn uncertain_wind(&self) -> Vec<usize> {
        self.wind
            .iter()
            .enumerate()
            .filter(|(_, w)| w.xi_max - w.xi_min > 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn switchable_lines(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.switchable)
            .map(|(i, _)| i)
            .collect()
    }

    /// Union-find connectivity over a chosen line subset.
    pub fn is_connected(&self, closed: impl Fn(usize) -> bool) -> bool {
        let n = self.n_bus();
        if n == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, line) in self.lines.iter().enumerate() {
            if closed(i) {
                let (a, b) = (find(&mut parent, line.from), find(&mut parent, line.to));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        (1..n).all(|i| find(&mut parent, i) == root)
    }
}

/// The linear operators of the DC network plus the big-M constants.
#[derive(Debug, Clone)]
pub struct NetworkOperators {
    /// Incidence matrix, buses x lines; the column of line (i,j) is e_i - e_j.
    pub incidence: DMatrix<f64>,
    /// Weighted difference matrix, lines x buses; row (i,j) is b_ij (e_i - e_j)^T.
    pub k_mat: DMatrix<f64>,
    /// Big-M per line: b_ij * dtheta_max.
    pub m_diag: Vec<f64>,
    /// Wind mapping, buses x wind farms; one 1 per column.
    pub f_map: DMatrix<f64>,
}

pub fn build_operators(grid: &Grid) -> NetworkOperators {
    let n = grid.n_bus();
    let l = grid.n_line();
    let k = grid.n_wind();

    let mut incidence = DMatrix::zeros(n, l);
    let mut k_mat = DMatrix::zeros(l, n);
    let mut m_diag = Vec::with_capacity(l);
    for (e, line) in grid.lines.iter().enumerate() {
        incidence[(line.from, e)] = 1.0;
        incidence[(line.to, e)] = -1.0;
        k_mat[(e, line.from)] = line.b;
        k_mat[(e, line.to)] = -line.b;
        m_diag.push(line.b * line.dtheta_max);
    }
    let mut f_map = DMatrix::zeros(n, k);
    for (w, farm) in grid.wind.iter().enumerate() {
        f_map[(farm.bus, w)] = 1.0;
    }
    NetworkOperators { incidence, k_mat, m_diag, f_map }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_case;

    fn two_bus_case() -> CaseFile {
        parse_case(
            r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": 0, "theta_min": -0.6, "theta_max": 0.6, "load": 0.0},
                {"id": 1, "theta_min": -0.6, "theta_max": 0.6, "load": 100.0}
            ],
            "lines": [
                {"from": 0, "to": 1, "b": 10.0, "f_min": -200.0, "f_max": 200.0,
                 "dtheta_max": 0.6, "switchable": true}
            ],
            "gens": [
                {"bus": 0, "c": 10.0, "q": 2.0, "g_min": 0.0, "g_max": 200.0,
                 "r_minus": -50.0, "r_plus": 50.0, "agc": true}
            ],
            "wind": [],
            "ref_bus": 0,
            "max_open": 0
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn two_bus_operators_match_definitions() {
        let grid = Grid::from_case(&two_bus_case()).unwrap();
        let ops = build_operators(&grid);
        assert_eq!(ops.incidence[(0, 0)], 1.0);
        assert_eq!(ops.incidence[(1, 0)], -1.0);
        assert_eq!(ops.k_mat[(0, 0)], 10.0);
        assert_eq!(ops.k_mat[(0, 1)], -10.0);
        assert!((ops.m_diag[0] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_incidence_properties() {
        let doc = r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": 0, "theta_min": -0.5, "theta_max": 0.5, "load": 0.0},
                {"id": 1, "theta_min": -0.5, "theta_max": 0.5, "load": 10.0},
                {"id": 2, "theta_min": -0.5, "theta_max": 0.5, "load": 10.0}
            ],
            "lines": [
                {"from": 0, "to": 1, "b": 5.0, "f_min": -50.0, "f_max": 50.0, "switchable": false},
                {"from": 1, "to": 2, "b": 5.0, "f_min": -50.0, "f_max": 50.0, "switchable": false},
                {"from": 2, "to": 0, "b": 5.0, "f_min": -50.0, "f_max": 50.0, "switchable": false}
            ],
            "gens": [
                {"bus": 0, "c": 5.0, "q": 1.0, "g_min": 0.0, "g_max": 100.0,
                 "r_minus": 0.0, "r_plus": 0.0, "agc": false}
            ],
            "ref_bus": 0,
            "max_open": 0
        }"#;
        let grid = Grid::from_case(&parse_case(doc).unwrap()).unwrap();
        let ops = build_operators(&grid);
        assert_eq!(ops.incidence.nrows(), 3);
        assert_eq!(ops.incidence.ncols(), 3);
        for c in 0..3 {
            assert_eq!(ops.incidence.column(c).sum(), 0.0);
        }
        assert_eq!(ops.incidence.rank(1e-12), 2);
        // Default dtheta_max from the bus boxes: min(0.5 - -0.5, ...) = 1.0.
        assert!((grid.lines[0].dtheta_max - 1.0).abs() < 1e-15);
        assert!(grid.is_connected(|_| true));
        assert!(grid.is_connected(|i| i != 0));
        assert!(!grid.is_connected(|i| i == 0));
    }

    #[test]
    fn flow_injections_sum_to_zero() {
        let grid = Grid::from_case(&two_bus_case()).unwrap();
        let ops = build_operators(&grid);
        let theta = nalgebra::DVector::from_vec(vec![0.3, -0.2]);
        let flows = &ops.k_mat * &theta;
        let inj = &ops.incidence * flows;
        assert!(inj.sum().abs() < 1e-12);
    }
}
