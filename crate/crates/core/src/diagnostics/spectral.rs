use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::quadrature::QuadratureGrid;
use crate::target::TargetModel;
use crate::tilting::{log_tilt, TemperingScheme};

/// Largest number of `(level, component)` cells the projected chain accepts.
pub const MAX_CELLS: usize = 64;

/// Proposal rates used to combine the projected-chain entries into one stochastic matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRates {
    pub lambda_swap: f64,
    pub gamma_leap: f64,
}

impl From<&KernelConfig> for ProjectionRates {
    fn from(cfg: &KernelConfig) -> Self {
        ProjectionRates {
            lambda_swap: cfg.lambda_swap,
            gamma_leap: cfg.gamma_leap,
        }
    }
}

/// Finite chain on `(level, component)` cells.
///
/// Swap entries are scaled by `λ/2`, teleport entries by `γ/M²` (one ordered
/// pair out of `M²`), and the whole generator by `1/(λ + γ)`; the remainder of
/// each row is self-loop mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedChain {
    pub levels: usize,
    pub components: usize,
    pub transition: DMatrix<f64>,
    /// `∝ r_i w_{i,k} Z̄_{i,k}`, normalized.
    pub stationary: Vec<f64>,
}

impl ProjectedChain {
    pub fn index(&self, level: usize, k: usize) -> usize {
        level * self.components + k
    }
}

fn log_min_integral(grid: &QuadratureGrid, a: &[f64], b: &[f64]) -> f64 {
    let m: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
    grid.integrate_log_values(&m).log_z
}

pub fn projected_chain(
    scheme: &TemperingScheme,
    target: &TargetModel,
    grid: &QuadratureGrid,
    rates: ProjectionRates,
) -> Result<ProjectedChain> {
    if target.dim() > 2 {
        return Err(Error::UnsupportedDimension { dim: target.dim() });
    }
    let (l, m) = (scheme.levels(), scheme.num_centers());
    if l * m > MAX_CELLS {
        return Err(Error::Config(format!(
            "projected chain limited to {MAX_CELLS} cells, got {}",
            l * m
        )));
    }
    let log_pi = grid.evaluate(|x| target.log_density(x));
    let tilt = |i: usize, k: usize| -> Vec<f64> {
        let (beta, c) = (scheme.beta(i), scheme.warm_starts().center(k));
        grid.evaluate(|x| log_tilt(beta, x, c))
    };
    // log of r_i w_{i,k} π(x) q_i(x - x_k) at every node.
    let mut cell = vec![Vec::new(); l * m];
    let mut log_mass = vec![0.0; l * m];
    for i in 0..l {
        for k in 0..m {
            let c = scheme.log_level_weight(i) + scheme.log_component_weights(i)[k];
            let v: Vec<f64> = tilt(i, k)
                .iter()
                .zip(&log_pi)
                .map(|(t, p)| c + t + p)
                .collect();
            log_mass[i * m + k] = grid.integrate_log_values(&v).log_z;
            cell[i * m + k] = v;
        }
    }
    let h = 1.0 / (rates.lambda_swap + rates.gamma_leap);
    let mut p = DMatrix::zeros(l * m, l * m);
    for i in 0..l {
        for k in 0..m {
            let s = i * m + k;
            for j in [i.wrapping_sub(1), i + 1] {
                if j >= l {
                    continue;
                }
                let t = j * m + k;
                let a = (log_min_integral(grid, &cell[s], &cell[t]) - log_mass[s]).exp();
                p[(s, t)] = h * 0.5 * rates.lambda_swap * a.min(1.0);
            }
        }
    }
    let pair = rates.gamma_leap / (m * m) as f64;
    for j in 0..m {
        let base = tilt(0, j);
        for jp in 0..m {
            if j == jp {
                continue;
            }
            let ws = scheme.warm_starts();
            let c = scheme.log_level_weight(0) + scheme.log_component_weights(0)[jp];
            // The translated density (g⁻¹)_# of cell (0, j'), pulled back onto the nodes.
            let moved: Vec<f64> = grid
                .evaluate(|x| target.log_density(&ws.teleport(j, jp, x)))
                .iter()
                .zip(&base)
                .map(|(lp, t)| c + lp + t)
                .collect();
            let a = (log_min_integral(grid, &moved, &cell[j]) - log_mass[j]).exp();
            p[(j, jp)] = h * pair * a.min(1.0);
        }
    }
    for s in 0..l * m {
        let off: f64 = (0..l * m).filter(|t| *t != s).map(|t| p[(s, t)]).sum();
        p[(s, s)] = 1.0 - off;
    }
    let max = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_mass.iter().map(|v| (v - max).exp()).sum();
    let stationary = log_mass.iter().map(|v| (v - max).exp() / total).collect();
    Ok(ProjectedChain {
        levels: l,
        components: m,
        transition: p,
        stationary,
    })
}

/// `1 - λ₂` of the reversibilized chain `D^{1/2} P D^{-1/2}` with `D = diag(stationary)`.
pub fn spectral_gap(transition: &DMatrix<f64>, stationary: &[f64]) -> Result<f64> {
    let n = transition.nrows();
    if transition.ncols() != n || stationary.len() != n {
        return Err(Error::Contract(
            "transition matrix and stationary vector disagree".into(),
        ));
    }
    if n == 1 {
        return Ok(1.0);
    }
    if stationary.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numeric("stationary masses must be positive".into()));
    }
    let sq: Vec<f64> = stationary.iter().map(|v| v.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |a, b| sq[a] * transition[(a, b)] / sq[b]);
    let sym = (&s + s.transpose()) * 0.5;
    let eigen = SymmetricEigen::try_new(sym, 1e-14, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(1.0 - values[1])
}

pub fn projected_spectral_gap(
    scheme: &TemperingScheme,
    target: &TargetModel,
    grid: &QuadratureGrid,
    rates: ProjectionRates,
) -> Result<(f64, ProjectedChain)> {
    let chain = projected_chain(scheme, target, grid, rates)?;
    let gap = spectral_gap(&chain.transition, &chain.stationary)?;
    Ok((gap, chain))
}
