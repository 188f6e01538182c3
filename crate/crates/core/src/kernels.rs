//! Markov dynamics on `Ω × [L]`: random-walk Metropolis moves, level swaps,
//! coldest-level teleports, and the event-driven continuous-time loop.
//!
//! Swap proposals arrive as a Poisson process with rate `λ`; while the chain
//! sits at level 0, teleport proposals arrive with rate `γ`. Between events
//! the chain performs `round(n_steps · elapsed)` local moves.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{EventKind, EventRecord, Recorder, Sample};
use crate::target::TargetModel;
use crate::tilting::{TemperingScheme, WarmStartSet};

/// Per-chain random stream (counter-based ChaCha).
pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Position, level (0 = coldest) and simulation clock of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub level: usize,
    pub clock: f64,
}

impl ChainState {
    pub fn new(x: Vec<f64>, level: usize) -> Self {
        ChainState {
            x,
            level,
            clock: 0.0,
        }
    }

    pub fn to_sample(&self, event: Option<EventKind>) -> Sample {
        Sample {
            t: self.clock,
            level: self.level,
            x: self.x.clone(),
            event,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Rate `λ` of level-swap proposals.
    pub lambda_swap: f64,
    /// Rate `γ` of teleport proposals at the coldest level.
    pub gamma_leap: f64,
    /// Base random-walk step `σ₀`.
    pub rwm_step_scale: f64,
    /// Local moves per unit of simulation time.
    pub steps_per_unit_time: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub teleport: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            lambda_swap: 1.0,
            gamma_leap: 1.0,
            rwm_step_scale: 1.0,
            steps_per_unit_time: 10,
            seed: 0,
            teleport: true,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lambda_swap) || !positive(self.gamma_leap) {
            return Err(Error::Config(
                "lambda_swap and gamma_leap must be > 0".into(),
            ));
        }
        if !positive(self.rwm_step_scale) {
            return Err(Error::Config("rwm_step_scale must be > 0".into()));
        }
        if self.steps_per_unit_time == 0 {
            return Err(Error::Config("steps_per_unit_time must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        KernelConfig {
            seed,
            ..self.clone()
        }
    }
}

/// A family of level densities the tempering dynamics can move through.
///
/// Level `levels() - 1` is always the target level.
pub trait TemperedFamily: Sync {
    fn dim(&self) -> usize;

    fn levels(&self) -> usize;

    /// Unnormalized log-density of level `level` (without its level weight).
    fn log_density(&self, level: usize, x: &[f64]) -> f64;

    fn log_level_weight(&self, _level: usize) -> f64 {
        0.0
    }

    /// Random-walk step size at `level` given the base scale.
    fn step_scale(&self, level: usize, base: f64) -> f64;

    /// Warm starts for teleports at level 0, if the family supports them.
    fn warm_starts(&self) -> Option<&WarmStartSet> {
        None
    }

    /// One local move at the current level.
    fn local_move(
        &self,
        state: &mut ChainState,
        cfg: &KernelConfig,
        rng: &mut ChainRng,
    ) -> Result<EventRecord> {
        rwm_step(self, state, cfg, rng)
    }
}

/// Re-ALPS levels: tilted tempered densities with learned weights.
#[derive(Clone, Copy, Debug)]
pub struct ReAlps<'a> {
    pub scheme: &'a TemperingScheme,
    pub target: &'a TargetModel,
}

impl<'a> ReAlps<'a> {
    pub fn new(scheme: &'a TemperingScheme, target: &'a TargetModel) -> Result<Self> {
        if scheme.dim() != target.dim() {
            return Err(Error::Config(format!(
                "scheme dimension {} does not match target dimension {}",
                scheme.dim(),
                target.dim()
            )));
        }
        Ok(ReAlps { scheme, target })
    }
}

impl TemperedFamily for ReAlps<'_> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn levels(&self) -> usize {
        self.scheme.levels()
    }

    fn log_density(&self, level: usize, x: &[f64]) -> f64 {
        self.scheme.log_tempered_density(self.target, level, x)
    }

    fn log_level_weight(&self, level: usize) -> f64 {
        self.scheme.log_level_weight(level)
    }

    fn step_scale(&self, level: usize, base: f64) -> f64 {
        base / (1.0 + self.scheme.beta(level)).sqrt()
    }

    fn warm_starts(&self) -> Option<&WarmStartSet> {
        Some(self.scheme.warm_starts())
    }
}

fn checked(value: f64, state: &ChainState) -> Result<f64> {
    if value.is_nan() || value == f64::INFINITY {
        Err(Error::NonFinite {
            level: state.level,
            x: state.x.clone(),
            clock: state.clock,
        })
    } else {
        Ok(value)
    }
}

/// Random-walk Metropolis at the current level with explicit noise `z` and uniform `u`.
pub fn rwm_step_with<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    scale: f64,
    z: &[f64],
    u: f64,
) -> Result<EventRecord> {
    let level = state.level;
    let current = checked(family.log_density(level, &state.x), state)?;
    let proposal: Vec<f64> = state.x.iter().zip(z).map(|(x, z)| x + scale * z).collect();
    let proposed = family.log_density(level, &proposal);
    if proposed.is_nan() || proposed == f64::INFINITY {
        return Err(Error::NonFinite {
            level,
            x: proposal,
            clock: state.clock,
        });
    }
    let accept = u.ln() < proposed - current;
    if accept {
        state.x = proposal;
    }
    Ok(EventRecord {
        clock: state.clock,
        kind: if accept {
            EventKind::RwmAccept
        } else {
            EventKind::RwmReject
        },
        level_before: level,
        level_after: level,
        mode_pair: None,
    })
}

/// Random-walk Metropolis with Gaussian proposal `x + σ_i z`.
pub fn rwm_step<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    cfg: &KernelConfig,
    rng: &mut ChainRng,
) -> Result<EventRecord> {
    let scale = family.step_scale(state.level, cfg.rwm_step_scale);
    let z: Vec<f64> = (0..state.x.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let u: f64 = rng.random();
    rwm_step_with(family, state, scale, &z, u)
}

/// Probability of accepting a move from `from` to `to` at position `x`:
/// `min{1, r_to p_to(x) / (r_from p_from(x))}`.
pub fn swap_acceptance<F: TemperedFamily + ?Sized>(
    family: &F,
    from: usize,
    to: usize,
    x: &[f64],
) -> f64 {
    let log_ratio = family.log_level_weight(to) + family.log_density(to, x)
        - family.log_level_weight(from)
        - family.log_density(from, x);
    log_ratio.min(0.0).exp()
}

/// Level swap with explicit direction and uniform. Proposals beyond
/// `active_levels` or below level 0 are rejected.
pub fn level_swap_with<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    active_levels: usize,
    up: bool,
    u: f64,
) -> Result<EventRecord> {
    let from = state.level;
    let (accept_kind, reject_kind) = if up {
        (EventKind::SwapUpAccept, EventKind::SwapUpReject)
    } else {
        (EventKind::SwapDownAccept, EventKind::SwapDownReject)
    };
    let to = if up {
        (from + 1 < active_levels).then_some(from + 1)
    } else {
        from.checked_sub(1)
    };
    let mut record = EventRecord {
        clock: state.clock,
        kind: reject_kind,
        level_before: from,
        level_after: from,
        mode_pair: None,
    };
    let Some(to) = to else {
        return Ok(record);
    };
    let log_ratio = family.log_level_weight(to) + family.log_density(to, &state.x)
        - family.log_level_weight(from)
        - checked(family.log_density(from, &state.x), state)?;
    let log_ratio = checked(log_ratio, state)?;
    if u.ln() < log_ratio {
        state.level = to;
        record.kind = accept_kind;
        record.level_after = to;
    }
    Ok(record)
}

/// Proposes level `i ± 1` with probability ½ each.
pub fn level_swap<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    active_levels: usize,
    rng: &mut ChainRng,
) -> Result<EventRecord> {
    let up: bool = rng.random();
    let u: f64 = rng.random();
    level_swap_with(family, state, active_levels, up, u)
}

/// Probability of accepting the teleport `g_{jj'}` from `x` at level 0.
pub fn teleport_acceptance<F: TemperedFamily + ?Sized>(
    family: &F,
    from: usize,
    to: usize,
    x: &[f64],
) -> Option<f64> {
    let ws = family.warm_starts()?;
    let y = ws.teleport(from, to, x);
    let log_ratio = family.log_density(0, &y) - family.log_density(0, x);
    Some(log_ratio.min(0.0).exp())
}

/// Teleport with an explicit ordered pair `(j, j')` and uniform.
pub fn teleport_with<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    from: usize,
    to: usize,
    u: f64,
) -> Result<EventRecord> {
    if state.level != 0 {
        return Err(Error::Contract(format!(
            "teleport proposed at level {}, only the coldest level teleports",
            state.level
        )));
    }
    let ws = family.warm_starts().ok_or_else(|| {
        Error::Contract("this family has no warm starts to teleport between".into())
    })?;
    let mut record = EventRecord {
        clock: state.clock,
        kind: EventKind::LeapAccept,
        level_before: 0,
        level_after: 0,
        mode_pair: Some((from, to)),
    };
    if from == to {
        return Ok(record);
    }
    let current = checked(family.log_density(0, &state.x), state)?;
    let y = ws.teleport(from, to, &state.x);
    let proposed = family.log_density(0, &y);
    if proposed.is_nan() || proposed == f64::INFINITY {
        return Err(Error::NonFinite {
            level: 0,
            x: y,
            clock: state.clock,
        });
    }
    // Translations preserve volume, so the push-forward ratio is a density ratio.
    if u.ln() < proposed - current {
        state.x = y;
    } else {
        record.kind = EventKind::LeapReject;
    }
    Ok(record)
}

/// Draws `(j, j')` uniformly from all `M²` ordered pairs and applies the teleport.
pub fn teleport<F: TemperedFamily + ?Sized>(
    family: &F,
    state: &mut ChainState,
    rng: &mut ChainRng,
) -> Result<EventRecord> {
    let m = family.warm_starts().map(|w| w.len()).unwrap_or(0);
    if m == 0 {
        return Err(Error::Contract(
            "this family has no warm starts to teleport between".into(),
        ));
    }
    let from = rng.random_range(0..m);
    let to = rng.random_range(0..m);
    let u: f64 = rng.random();
    teleport_with(family, state, from, to, u)
}

/// Exact transition matrix of the teleport kernel restricted to a finite support.
///
/// `log_p[a]` is the level-0 log-density at `points[a]`. Proposals landing
/// outside the support (farther than `1e-9` from every point) are rejected.
pub fn teleport_matrix_on_support(
    points: &[Vec<f64>],
    log_p: &[f64],
    warm_starts: &WarmStartSet,
) -> DMatrix<f64> {
    let n = points.len();
    let m = warm_starts.len();
    let pair_prob = 1.0 / (m * m) as f64;
    let mut p = DMatrix::zeros(n, n);
    for a in 0..n {
        for j in 0..m {
            for jp in 0..m {
                if j == jp {
                    continue;
                }
                let y = warm_starts.teleport(j, jp, &points[a]);
                if let Some(b) = points
                    .iter()
                    .position(|q| q.iter().zip(&y).all(|(u, v)| (u - v).abs() < 1e-9))
                {
                    p[(a, b)] += pair_prob * (log_p[b] - log_p[a]).min(0.0).exp();
                }
            }
        }
        let off: f64 = (0..n).filter(|b| *b != a).map(|b| p[(a, b)]).sum();
        p[(a, a)] += 1.0 - off;
    }
    p
}

/// A single chain: one family, one configuration, one random stream.
pub struct Chain<'a, F: TemperedFamily + ?Sized> {
    family: &'a F,
    cfg: KernelConfig,
    rng: ChainRng,
    state: ChainState,
    active_levels: usize,
}

impl<'a, F: TemperedFamily + ?Sized> Chain<'a, F> {
    pub fn new(family: &'a F, cfg: KernelConfig, initial: ChainState) -> Result<Self> {
        cfg.validate()?;
        if initial.level >= family.levels() {
            return Err(Error::Config(format!(
                "initial level {} out of range for {} levels",
                initial.level,
                family.levels()
            )));
        }
        if initial.x.len() != family.dim() || initial.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "initial position has the wrong dimension or is not finite".into(),
            ));
        }
        let rng = chain_rng(cfg.seed);
        Ok(Chain {
            family,
            active_levels: family.levels(),
            cfg,
            rng,
            state: initial,
        })
    }

    /// Restricts the chain to levels `0..active_levels`.
    pub fn with_active_levels(mut self, active_levels: usize) -> Result<Self> {
        if active_levels == 0
            || active_levels > self.family.levels()
            || self.state.level >= active_levels
        {
            return Err(Error::Config(format!(
                "cannot restrict to {active_levels} active levels from level {}",
                self.state.level
            )));
        }
        self.active_levels = active_levels;
        Ok(self)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    fn leap_time(&self, leap: &Option<Exp<f64>>, rng: &mut ChainRng) -> f64 {
        match leap {
            Some(d) if self.state.level == 0 => self.state.clock + d.sample(rng),
            _ => f64::INFINITY,
        }
    }

    /// Advances the chain by `duration` units of simulation time.
    pub fn run<R: Recorder + ?Sized>(&mut self, duration: f64, recorder: &mut R) -> Result<()> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Config(format!(
                "duration must be > 0, got {duration}"
            )));
        }
        let swap_clock = Exp::new(self.cfg.lambda_swap)
            .map_err(|e| Error::Config(format!("lambda_swap: {e}")))?;
        let leap_clock = if self.cfg.teleport && self.family.warm_starts().is_some() {
            Some(
                Exp::new(self.cfg.gamma_leap)
                    .map_err(|e| Error::Config(format!("gamma_leap: {e}")))?,
            )
        } else {
            None
        };
        let steps = self.cfg.steps_per_unit_time as f64;
        let end = self.state.clock + duration;
        let mut rng = self.rng.clone();
        recorder.start(&self.state);

        let mut next_swap = self.state.clock + swap_clock.sample(&mut rng);
        let mut next_leap = self.leap_time(&leap_clock, &mut rng);
        loop {
            let stop = next_swap.min(next_leap).min(end);
            let start = self.state.clock;
            let elapsed = stop - start;
            let n = (steps * elapsed).round() as u64;
            for k in 1..=n {
                self.state.clock = start + elapsed * (k as f64 / n as f64);
                let ev = self
                    .family
                    .local_move(&mut self.state, &self.cfg, &mut rng)?;
                recorder.record(&self.state, &ev);
            }
            self.state.clock = stop;
            if stop >= end {
                break;
            }
            let ev = if next_swap <= next_leap {
                level_swap(self.family, &mut self.state, self.active_levels, &mut rng)?
            } else {
                teleport(self.family, &mut self.state, &mut rng)?
            };
            recorder.record(&self.state, &ev);
            // Exponential clocks are memoryless: redrawing both after every event is exact.
            next_swap = self.state.clock + swap_clock.sample(&mut rng);
            next_leap = self.leap_time(&leap_clock, &mut rng);
        }
        self.state.clock = end;
        recorder.finish(&self.state);
        self.rng = rng;
        Ok(())
    }
}

/// Runs one chain from `initial` for `duration` and returns its final state.
pub fn simulate<F, R>(
    family: &F,
    cfg: &KernelConfig,
    initial: ChainState,
    duration: f64,
    recorder: &mut R,
) -> Result<ChainState>
where
    F: TemperedFamily + ?Sized,
    R: Recorder + ?Sized,
{
    let mut chain = Chain::new(family, cfg.clone(), initial)?;
    chain.run(duration, recorder)?;
    Ok(chain.into_state())
}
