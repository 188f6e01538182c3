//! Tensor-grid trapezoid quadrature in log space, for d <= 2.
//!
//! Used as the partition-function oracle by tests and diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::target::TargetModel;

/// Largest log-value jump between neighbouring nodes before the grid is flagged coarse.
pub const COARSE_JUMP: f64 = 5.0;
/// Nodes more than this many nats below the maximum are ignored by the coarseness check.
const JUMP_WINDOW: f64 = 30.0;
/// Boundary mass fraction above which the grid is flagged as truncating the integrand.
pub const TAIL_FRACTION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    fn log_weight(&self, i: usize) -> f64 {
        let h = self.step();
        if i == 0 || i + 1 == self.points {
            (0.5 * h).ln()
        } else {
            h.ln()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub axes: Vec<Axis>,
}

impl QuadratureGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config(
                "quadrature grid needs at least one axis".into(),
            ));
        }
        if axes.len() > 2 {
            return Err(Error::UnsupportedDimension { dim: axes.len() });
        }
        for a in &axes {
            if !(a.lo.is_finite() && a.hi.is_finite() && a.hi > a.lo) || a.points < 2 {
                return Err(Error::Config(format!("invalid quadrature axis {a:?}")));
            }
        }
        Ok(QuadratureGrid { axes })
    }

    /// Same interval and resolution on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if dim > 2 {
            return Err(Error::UnsupportedDimension { dim });
        }
        Self::new(vec![Axis { lo, hi, points }; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same bounds with `2(n-1)+1` points per axis.
    pub fn refined(&self) -> Self {
        QuadratureGrid {
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    points: 2 * (a.points - 1) + 1,
                    ..a.clone()
                })
                .collect(),
        }
    }

    /// Node coordinates for a flat index (last axis fastest).
    pub fn node(&self, index: usize, out: &mut [f64]) {
        let mut rem = index;
        for (d, a) in self.axes.iter().enumerate().rev() {
            out[d] = a.node(rem % a.points);
            rem /= a.points;
        }
    }

    fn multi_index(&self, index: usize) -> [usize; 2] {
        let mut idx = [0usize; 2];
        let mut rem = index;
        for (d, a) in self.axes.iter().enumerate().rev() {
            idx[d] = rem % a.points;
            rem /= a.points;
        }
        idx
    }

    fn log_weight(&self, index: usize) -> f64 {
        let idx = self.multi_index(index);
        self.axes
            .iter()
            .enumerate()
            .map(|(d, a)| a.log_weight(idx[d]))
            .sum()
    }

    fn on_boundary(&self, index: usize) -> bool {
        let idx = self.multi_index(index);
        self.axes
            .iter()
            .enumerate()
            .any(|(d, a)| idx[d] == 0 || idx[d] + 1 == a.points)
    }

    /// Evaluates `f` at every node, in flat-index order.
    pub fn evaluate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        (0..self.len())
            .map(|i| {
                self.node(i, &mut x);
                f(&x)
            })
            .collect()
    }

    /// Integrates `exp(values)` where `values` come from [`QuadratureGrid::evaluate`].
    pub fn integrate_log_values(&self, values: &[f64]) -> QuadratureEstimate {
        assert_eq!(values.len(), self.len(), "value count must match the grid");
        let weighted: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, v)| v + self.log_weight(i))
            .collect();
        let log_z = log_sum_exp(weighted.iter().copied());
        let log_boundary = log_sum_exp(
            weighted
                .iter()
                .enumerate()
                .filter(|(i, _)| self.on_boundary(*i))
                .map(|(_, v)| *v),
        );
        let tail_fraction = if log_z.is_finite() {
            (log_boundary - log_z).exp()
        } else {
            0.0
        };
        QuadratureEstimate {
            log_z,
            coarse: self.is_coarse(values),
            tail_fraction,
            truncated: tail_fraction > TAIL_FRACTION,
        }
    }

    fn is_coarse(&self, values: &[f64]) -> bool {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cutoff = max - JUMP_WINDOW;
        let n1 = self.axes.last().map(|a| a.points).unwrap_or(1);
        let check = |a: f64, b: f64| a.max(b) >= cutoff && (a - b).abs() > COARSE_JUMP;
        for i in 0..values.len() {
            let idx = self.multi_index(i);
            let last = self.dim() - 1;
            if idx[last] + 1 < self.axes[last].points && check(values[i], values[i + 1]) {
                return true;
            }
            if self.dim() == 2
                && idx[0] + 1 < self.axes[0].points
                && check(values[i], values[i + n1])
            {
                return true;
            }
        }
        false
    }

    /// `log ∫ exp(f(x)) dx`.
    pub fn log_integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> QuadratureEstimate {
        self.integrate_log_values(&self.evaluate(f))
    }
}

/// Result of a log-space quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub log_z: f64,
    /// Neighbouring nodes with significant mass differ by more than [`COARSE_JUMP`] nats.
    pub coarse: bool,
    /// Fraction of the integral carried by boundary nodes.
    pub tail_fraction: f64,
    pub truncated: bool,
}

impl QuadratureEstimate {
    pub fn has_warning(&self) -> bool {
        self.coarse || self.truncated
    }
}

/// `log ∫ exp(log π(x) + log_weight(x)) dx` over the grid.
pub fn quadrature_log_partition<F>(
    model: &TargetModel,
    log_weight: F,
    grid: &QuadratureGrid,
) -> Result<QuadratureEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    if model.dim() > 2 {
        return Err(Error::UnsupportedDimension { dim: model.dim() });
    }
    if grid.dim() != model.dim() {
        return Err(Error::Config(format!(
            "grid dimension {} does not match target dimension {}",
            grid.dim(),
            model.dim()
        )));
    }
    Ok(grid.log_integrate(|x| model.log_density(x) + log_weight(x)))
}
