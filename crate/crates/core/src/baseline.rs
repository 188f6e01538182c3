//! Naive power tempering: simulated tempering over `π^b` without teleports or reweighting.

use crate::error::{Error, Result};
use crate::kernels::TemperedFamily;
use crate::target::TargetModel;

/// Levels are `π(x)^{b_i}` with `b` increasing from the hottest level (0) to 1 (target).
#[derive(Clone, Debug)]
pub struct PowerTempering<'a> {
    powers: Vec<f64>,
    target: &'a TargetModel,
}

impl<'a> PowerTempering<'a> {
    pub fn new(powers: Vec<f64>, target: &'a TargetModel) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::Config("power ladder is empty".into()));
        }
        if powers.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::Config("powers must be finite and > 0".into()));
        }
        if powers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("powers must be strictly increasing".into()));
        }
        if *powers.last().unwrap() != 1.0 {
            return Err(Error::Config("the last power must be exactly 1".into()));
        }
        Ok(PowerTempering { powers, target })
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }
}

impl TemperedFamily for PowerTempering<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn levels(&self) -> usize {
        self.powers.len()
    }

    fn log_density(&self, level: usize, x: &[f64]) -> f64 {
        self.powers[level] * self.target.log_density(x)
    }

    fn step_scale(&self, level: usize, base: f64) -> f64 {
        base / self.powers[level].sqrt()
    }
}
