use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::quadrature::{quadrature_log_partition, QuadratureEstimate, QuadratureGrid};
use crate::target::TargetModel;
use crate::tilting::{log_tilt, TemperingScheme};

/// Component and level balance of a scheme, measured by quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `log Z̄_{i,k} = log ∫ π(x) q_i(x - x_k) dx`.
    pub log_z_bar: Vec<Vec<f64>>,
    /// `log Z_i = log Σ_k w_{i,k} Z̄_{i,k}`.
    pub log_z_level: Vec<f64>,
    /// Per level, `max_k w_{i,k} Z̄_{i,k} / min_k w_{i,k} Z̄_{i,k}`.
    pub h1_ratios: Vec<f64>,
    pub h1_max: f64,
    /// `max_i r_i Z_i / min_i r_i Z_i`.
    pub h2_ratio: f64,
    /// `log ∫ α_k π_k(x) q_i(x - x_k) dx`, when the target exposes components aligned with the warm starts.
    pub log_z_component: Option<Vec<Vec<f64>>>,
    pub h1_component_ratios: Option<Vec<f64>>,
    /// Some quadrature was flagged coarse or truncating.
    pub quadrature_warning: bool,
}

fn spread(logs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = logs.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = logs.fold(f64::INFINITY, f64::min);
    (max - min).exp()
}

/// `Z̄_{i,k}` for every level and warm start.
pub fn component_log_partitions(
    scheme: &TemperingScheme,
    target: &TargetModel,
    grid: &QuadratureGrid,
) -> Result<Vec<Vec<QuadratureEstimate>>> {
    (0..scheme.levels())
        .map(|i| {
            (0..scheme.num_centers())
                .map(|k| {
                    let (beta, c) = (scheme.beta(i), scheme.warm_starts().center(k));
                    quadrature_log_partition(target, |x| log_tilt(beta, x, c), grid)
                })
                .collect()
        })
        .collect()
}

pub fn balance_report(
    scheme: &TemperingScheme,
    target: &TargetModel,
    grid: &QuadratureGrid,
) -> Result<BalanceReport> {
    if target.dim() > 2 {
        return Err(Error::UnsupportedDimension { dim: target.dim() });
    }
    let z = component_log_partitions(scheme, target, grid)?;
    let mut warning = z.iter().flatten().any(|e| e.has_warning());
    let log_z_bar: Vec<Vec<f64>> = z
        .iter()
        .map(|row| row.iter().map(|e| e.log_z).collect())
        .collect();
    let weighted = |i: usize, row: &[f64]| -> Vec<f64> {
        row.iter()
            .zip(scheme.log_component_weights(i))
            .map(|(z, w)| z + w)
            .collect()
    };
    let mut h1_ratios = Vec::with_capacity(scheme.levels());
    let mut log_z_level = Vec::with_capacity(scheme.levels());
    for (i, row) in log_z_bar.iter().enumerate() {
        let wz = weighted(i, row);
        h1_ratios.push(spread(wz.iter().copied()));
        log_z_level.push(log_sum_exp(wz.iter().copied()));
    }
    let h2_ratio = spread(
        log_z_level
            .iter()
            .enumerate()
            .map(|(i, z)| z + scheme.log_level_weight(i)),
    );

    let aligned = target.has_components() && target.num_components() == scheme.num_centers();
    let (log_z_component, h1_component_ratios) = if aligned {
        let mut logs = Vec::new();
        let mut ratios = Vec::new();
        for i in 0..scheme.levels() {
            let row = (0..scheme.num_centers())
                .map(|k| {
                    let (beta, c) = (scheme.beta(i), scheme.warm_starts().center(k));
                    let est = grid.log_integrate(|x| {
                        target.weighted_component_log_density(k, x) + log_tilt(beta, x, c)
                    });
                    warning |= est.has_warning();
                    est.log_z
                })
                .collect::<Vec<f64>>();
            ratios.push(spread(weighted(i, &row).into_iter()));
            logs.push(row);
        }
        (Some(logs), Some(ratios))
    } else {
        (None, None)
    };

    Ok(BalanceReport {
        h1_max: h1_ratios.iter().copied().fold(1.0, f64::max),
        log_z_bar,
        log_z_level,
        h1_ratios,
        h2_ratio,
        log_z_component,
        h1_component_ratios,
        quadrature_warning: warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{make_gaussian_mixture, GaussianMixtureSpec, Point};
    use crate::tilting::{TemperatureLadder, WarmStartSet};

    #[test]
    fn single_cell_is_balanced() {
        let t = make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![0.0]],
            covariances: vec![vec![vec![1.0]]],
            weights: vec![1.0],
        })
        .unwrap();
        let s = TemperingScheme::uniform(
            TemperatureLadder::new(vec![0.0]).unwrap(),
            WarmStartSet::new(vec![Point(vec![0.0])]).unwrap(),
        );
        let grid = QuadratureGrid::cube(1, -10.0, 10.0, 401).unwrap();
        let r = balance_report(&s, &t, &grid).unwrap();
        assert_eq!(r.h1_max, 1.0);
        assert_eq!(r.h2_ratio, 1.0);
    }

    #[test]
    fn symmetric_target_is_component_balanced() {
        let t = make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-4.0], vec![4.0]],
            covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap();
        let s = TemperingScheme::uniform(
            TemperatureLadder::new(vec![4.0, 1.0, 0.0]).unwrap(),
            WarmStartSet::new(vec![Point(vec![-4.0]), Point(vec![4.0])]).unwrap(),
        );
        let grid = QuadratureGrid::cube(1, -15.0, 15.0, 3001).unwrap();
        let r = balance_report(&s, &t, &grid).unwrap();
        for v in r
            .h1_ratios
            .iter()
            .chain(r.h1_component_ratios.as_ref().unwrap())
        {
            assert!((v - 1.0).abs() < 1e-6);
        }
        // At β = 0 every Z̄ is the total mass 1.
        assert!((r.log_z_level[2] - 2f64.ln()).abs() < 1e-6);
        assert!(!r.quadrature_warning);
    }
}
