//! Affine recourse policies: extraction from LDR solves and pointwise
//! feasibility audits of the two-stage constraints.

use crate::error::{Error, Result};
use crate::network::{Grid, NetworkOperators};
use crate::solver::SolveReport;

/// The recourse map xi -> (g', theta', f'): theta' = Y_theta xi + y_theta,
/// f' = Y_f xi + y_f, g' = gamma (1^T xi).
#[derive(Debug, Clone)]
pub struct AffinePolicy {
    /// N x K row-major.
    pub y_theta_slope: Vec<f64>,
    pub y_theta_offset: Vec<f64>,
    /// L x K row-major.
    pub y_f_slope: Vec<f64>,
    pub y_f_offset: Vec<f64>,
    /// Per-generator AGC coefficients.
    pub gamma: Vec<f64>,
    pub k: usize,
}

impl AffinePolicy {
    pub fn theta_delta(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.y_theta_offset.len();
        (0..n)
            .map(|i| {
                self.y_theta_offset[i]
                    + (0..self.k).map(|kk| self.y_theta_slope[i * self.k + kk] * xi[kk]).sum::<f64>()
            })
            .collect()
    }

    pub fn flow_delta(&self, xi: &[f64]) -> Vec<f64> {
        let l = self.y_f_offset.len();
        (0..l)
            .map(|e| {
                self.y_f_offset[e]
                    + (0..self.k).map(|kk| self.y_f_slope[e * self.k + kk] * xi[kk]).sum::<f64>()
            })
            .collect()
    }

    pub fn gen_delta(&self, xi: &[f64]) -> Vec<f64> {
        let u: f64 = xi.iter().sum();
        self.gamma.iter().map(|&g| g * u).collect()
    }
}

/// First-stage decision extracted from any OTS solve: z expanded to the
/// full line set (non-switchable lines closed).
#[derive(Debug, Clone)]
pub struct FirstStage {
    pub g: Vec<f64>,
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub z: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn first_stage_from_report(grid: &Grid, report: &SolveReport) -> Result<FirstStage> {
    let get = |name: &str| -> Result<Vec<f64>> {
        report
            .block_values(name)
            .map(|s| s.to_vec())
            .ok_or_else(|| Error::Program(format!("report lacks block `{name}`")))
    };
    let zsw = get("z")?;
    let mut z = vec![1.0; grid.n_line()];
    for (pos, &e) in grid.switchable_lines().iter().enumerate() {
        z[e] = zsw[pos].round();
    }
    let gamma = match report.block_values("gamma") {
        Some(s) => s.to_vec(),
        None => vec![0.0; grid.n_gen()],
    };
    Ok(FirstStage { g: get("g")?, theta: get("theta")?, f: get("f")?, z, gamma })
}

pub fn extract_policy(k: usize, report: &SolveReport) -> Result<AffinePolicy> {
    let get = |name: &str| -> Result<Vec<f64>> {
        report
            .block_values(name)
            .map(|s| s.to_vec())
            .ok_or_else(|| Error::Program(format!("report lacks block `{name}`")))
    };
    Ok(AffinePolicy {
        y_theta_slope: get("Y_theta")?,
        y_theta_offset: get("y_theta")?,
        y_f_slope: get("Y_f")?,
        y_f_offset: get("y_f")?,
        gamma: get("gamma")?,
        k,
    })
}

/// Worst violation of the two-stage constraints at one realization, with
/// the first stage and the policy fixed. Zero (within tolerance) means the
/// policy's recourse is feasible at xi.
pub fn policy_violation(
    grid: &Grid,
    ops: &NetworkOperators,
    first: &FirstStage,
    policy: &AffinePolicy,
    xi: &[f64],
) -> f64 {
    let u: f64 = xi.iter().sum();
    let uncertain = grid.uncertain_wind();
    let dtheta = policy.theta_delta(xi);
    let dflow = policy.flow_delta(xi);
    let mut worst: f64 = 0.0;

    // Reserve limits and adjusted generation boxes.
    for (i, gen) in grid.gens.iter().enumerate() {
        let adj = first.gamma[i] * u;
        worst = worst.max(gen.r_minus - adj).max(adj - gen.r_plus);
        let tot = first.g[i] + adj;
        worst = worst.max(gen.g_min - tot).max(tot - gen.g_max);
    }

    // Angle and flow boxes.
    let mut tau = vec![0.0; grid.n_bus()];
    for i in 0..grid.n_bus() {
        tau[i] = first.theta[i] + dtheta[i];
        worst = worst.max(grid.theta_min[i] - tau[i]).max(tau[i] - grid.theta_max[i]);
    }
    let mut phi = vec![0.0; grid.n_line()];
    for (e, line) in grid.lines.iter().enumerate() {
        phi[e] = first.f[e] + dflow[e];
        let z = first.z[e];
        worst = worst.max(line.f_min * z - phi[e]).max(phi[e] - line.f_max * z);
        // Flow definition under the big-M pair.
        let kdiff = line.b * (tau[line.from] - tau[line.to]) - phi[e];
        let slack = ops.m_diag[e] * (1.0 - z);
        worst = worst.max(kdiff - slack).max(-kdiff - slack);
    }

    // Nodal balance.
    let mut inj = vec![0.0; grid.n_bus()];
    for (e, line) in grid.lines.iter().enumerate() {
        inj[line.from] += phi[e];
        inj[line.to] -= phi[e];
    }
    for (i, gen) in grid.gens.iter().enumerate() {
        inj[gen.bus] -= first.g[i] + first.gamma[i] * u;
    }
    for bus in 0..grid.n_bus() {
        let mut rhs = -grid.load[bus];
        for w in &grid.wind {
            if w.bus == bus {
                rhs += w.nominal;
            }
        }
        for (kk, &w) in uncertain.iter().enumerate() {
            if grid.wind[w].bus == bus {
                rhs += xi[kk];
            }
        }
        worst = worst.max((inj[bus] - rhs).abs());
    }
    worst
}
