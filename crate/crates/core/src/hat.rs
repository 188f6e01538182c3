//! ALPS baseline with Hessian-adjusted tempered (HAT) targets and a
//! coldest-level Gaussian-mixture independence sampler.
//!
//! The HAT ladder runs from `β_max` (level 0, coldest) down to `β = 1` (target).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{rwm_step, ChainRng, ChainState, KernelConfig, TemperedFamily};
use crate::math::log_sum_exp;
use crate::record::{EventKind, EventRecord};
use crate::target::{ModeInfo, TargetModel};

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

/// Laplace approximation `N(μ, H⁻¹)` of one mode.
#[derive(Clone, Debug)]
struct ModeApprox {
    mean: Vec<f64>,
    /// Lower Cholesky factor of `Σ = H⁻¹`, row-major.
    chol: Vec<f64>,
    log_det: f64,
    log_weight: f64,
    log_target_at_mode: f64,
}

impl ModeApprox {
    /// `(x - μ)ᵀ Σ⁻¹ (x - μ)`.
    fn mahalanobis(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let mut y = [0.0f64; 8];
        let mut heap;
        let y: &mut [f64] = if d <= 8 {
            &mut y[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut quad = 0.0;
        for i in 0..d {
            let mut v = x[i] - self.mean[i];
            for j in 0..i {
                v -= self.chol[i * d + j] * y[j];
            }
            y[i] = v / self.chol[i * d + i];
            quad += y[i] * y[i];
        }
        quad
    }

    /// `log φ(x | μ, Σ/β)`.
    fn log_phi(&self, x: &[f64], beta: f64) -> f64 {
        let d = self.mean.len() as f64;
        -0.5 * (d * LOG_2PI + self.log_det - d * beta.ln()) - 0.5 * beta * self.mahalanobis(x)
    }
}

/// Modes, Hessians and weights handed to the HAT baseline.
#[derive(Clone, Debug)]
pub struct HATModel<'a> {
    modes: Vec<ModeApprox>,
    target: &'a TargetModel,
}

impl<'a> HATModel<'a> {
    /// Uses the exact mode locations and Hessians of a built-in mixture.
    pub fn from_target(target: &'a TargetModel) -> Result<Self> {
        Self::new(target.mode_information()?, target)
    }

    pub fn new(modes: Vec<ModeInfo>, target: &'a TargetModel) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("HAT needs at least one mode".into()));
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        let d = target.dim();
        let modes = modes
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                if m.mean.len() != d || m.hessian.nrows() != d || m.hessian.ncols() != d {
                    return Err(Error::Config(format!("mode {k} has the wrong dimension")));
                }
                if !(m.weight.is_finite() && m.weight > 0.0) {
                    return Err(Error::Config(format!("mode {k} weight must be positive")));
                }
                let cov = m
                    .hessian
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::Config(format!("Hessian of mode {k} is singular")))?;
                let cov = (&cov + cov.transpose()) * 0.5;
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::Config(format!("Hessian of mode {k} is not positive-definite"))
                })?;
                let l: DMatrix<f64> = chol.l();
                let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
                let chol = (0..d * d).map(|idx| l[(idx / d, idx % d)]).collect();
                Ok(ModeApprox {
                    log_target_at_mode: target.log_density(&m.mean),
                    mean: m.mean.0,
                    chol,
                    log_det,
                    log_weight: (m.weight / total).ln(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HATModel { modes, target })
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k].mean
    }

    pub fn target(&self) -> &TargetModel {
        self.target
    }
}

/// `argmax_j ŵ_j φ(x | μ_j, Σ_j/β)`, ties to the smallest index.
pub fn modal_allocation(model: &HATModel, x: &[f64], beta: f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, m) in model.modes.iter().enumerate() {
        let v = m.log_weight + m.log_phi(x, beta);
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    best
}

/// Unnormalized HAT log-density at inverse temperature `beta`.
pub fn hat_log_density(model: &HATModel, x: &[f64], beta: f64) -> f64 {
    let home = modal_allocation(model, x, 1.0);
    let here = modal_allocation(model, x, beta);
    if home == here {
        let m = &model.modes[home];
        beta * model.target.log_density(x) + (1.0 - beta) * m.log_target_at_mode
    } else {
        // log π(μ) + ½ log((2π)^d |Σ|) + log φ(x | μ, Σ/β) − (d/2) log β reduces to this.
        let m = &model.modes[here];
        m.log_target_at_mode - 0.5 * beta * m.mahalanobis(x)
    }
}

/// `log Σ_k ŵ_k φ(x | μ_k, Σ_k/β)`.
pub fn proposal_log_density(model: &HATModel, x: &[f64], beta: f64) -> f64 {
    log_sum_exp(
        model
            .modes
            .iter()
            .map(|m| m.log_weight + m.log_phi(x, beta)),
    )
}

/// Draws from the coldest-level proposal mixture.
pub fn sample_proposal(model: &HATModel, beta: f64, rng: &mut ChainRng) -> Vec<f64> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut k = model.modes.len() - 1;
    for (i, m) in model.modes.iter().enumerate() {
        acc += m.log_weight.exp();
        if u < acc {
            k = i;
            break;
        }
    }
    let m = &model.modes[k];
    let d = m.mean.len();
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let s = beta.sqrt().recip();
    (0..d)
        .map(|i| m.mean[i] + s * (0..=i).map(|j| m.chol[i * d + j] * z[j]).sum::<f64>())
        .collect()
}

/// Independence Metropolis-Hastings at `beta_max` with explicit proposal and uniform.
pub fn coldest_independence_step_with(
    model: &HATModel,
    state: &mut ChainState,
    beta_max: f64,
    proposal: Vec<f64>,
    u: f64,
) -> Result<EventRecord> {
    let log_ratio = hat_log_density(model, &proposal, beta_max)
        - hat_log_density(model, &state.x, beta_max)
        + proposal_log_density(model, &state.x, beta_max)
        - proposal_log_density(model, &proposal, beta_max);
    if log_ratio.is_nan() {
        return Err(Error::NonFinite {
            level: state.level,
            x: proposal,
            clock: state.clock,
        });
    }
    let accept = u.ln() < log_ratio;
    if accept {
        state.x = proposal;
    }
    Ok(EventRecord {
        clock: state.clock,
        kind: if accept {
            EventKind::LeapAccept
        } else {
            EventKind::LeapReject
        },
        level_before: state.level,
        level_after: state.level,
        mode_pair: None,
    })
}

pub fn coldest_independence_step(
    model: &HATModel,
    state: &mut ChainState,
    beta_max: f64,
    rng: &mut ChainRng,
) -> Result<EventRecord> {
    let proposal = sample_proposal(model, beta_max, rng);
    let u: f64 = rng.random();
    coldest_independence_step_with(model, state, beta_max, proposal, u)
}

/// Simulated tempering over HAT targets with uniform level weights.
#[derive(Clone, Debug)]
pub struct HatFamily<'a> {
    model: HATModel<'a>,
    betas: Vec<f64>,
}

impl<'a> HatFamily<'a> {
    /// `betas` run from `β_max` (coldest) down to exactly 1.
    pub fn new(model: HATModel<'a>, betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || *betas.last().unwrap() != 1.0 {
            return Err(Error::Config("HAT ladder must end at beta = 1".into()));
        }
        if betas.windows(2).any(|w| w[1] >= w[0]) || betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config(
                "HAT ladder must be strictly decreasing".into(),
            ));
        }
        Ok(HatFamily { model, betas })
    }

    pub fn model(&self) -> &HATModel<'a> {
        &self.model
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

impl TemperedFamily for HatFamily<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn levels(&self) -> usize {
        self.betas.len()
    }

    fn log_density(&self, level: usize, x: &[f64]) -> f64 {
        hat_log_density(&self.model, x, self.betas[level])
    }

    fn step_scale(&self, level: usize, base: f64) -> f64 {
        base / self.betas[level].sqrt()
    }

    fn local_move(
        &self,
        state: &mut ChainState,
        cfg: &KernelConfig,
        rng: &mut ChainRng,
    ) -> Result<EventRecord> {
        if state.level == 0 && self.betas.len() > 1 {
            coldest_independence_step(&self.model, state, self.betas[0], rng)
        } else {
            rwm_step(self, state, cfg, rng)
        }
    }
}
