//! Inductive Monte Carlo learning of component weights `w` and level weights `r`.
//!
//! For each level `l` the trainer runs the chain on levels `0..=l`, estimates
//! the component weights and the level weight of level `l + 1` from the same
//! samples, then runs again on `0..=l+1` and divides the level weights by the
//! observed occupancy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Chain, ChainState, KernelConfig, ReAlps};
use crate::math::{derive_seed, log_sum_exp};
use crate::record::{GridSampler, SampleBatch};
use crate::target::TargetModel;
use crate::tilting::{log_tilt, TemperingScheme};

fn default_min_hits() -> usize {
    100
}

fn default_chains() -> usize {
    1
}

fn default_burn_in() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    /// Samples `N` collected per stage (split evenly over `chains`).
    pub samples: usize,
    /// Simulation horizon of every stage.
    pub stage_duration: f64,
    #[serde(default = "default_min_hits")]
    pub min_level_hits: usize,
    /// Multiplies `r̂_1` by `l · factor` before rebalancing. Off when absent.
    #[serde(default)]
    pub first_level_upscale: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Fraction of each stage discarded before sampling.
    #[serde(default = "default_burn_in")]
    pub burn_in_fraction: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            samples: 10_000,
            stage_duration: 1_000.0,
            min_level_hits: default_min_hits(),
            first_level_upscale: None,
            seed: 0,
            chains: 1,
            burn_in_fraction: default_burn_in(),
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < self.min_level_hits || self.samples == 0 {
            return Err(Error::Config(format!(
                "samples ({}) must be at least min_level_hits ({})",
                self.samples, self.min_level_hits
            )));
        }
        if !(self.stage_duration.is_finite() && self.stage_duration > 0.0) {
            return Err(Error::Config("stage_duration must be > 0".into()));
        }
        if self.chains == 0 || self.chains > self.samples {
            return Err(Error::Config("chains must be between 1 and samples".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Config("burn_in_fraction must be in [0, 1)".into()));
        }
        if let Some(f) = self.first_level_upscale {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config("first_level_upscale must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Component-weight estimate for the next level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimate {
    /// Canonical weights (max 1).
    pub weights: Vec<f64>,
    /// `log((1/N) Σ_j I{i_j = l} π̄_{l+1,k}(x_j) / p̃(x_j, i_j))` per component.
    pub log_means: Vec<f64>,
    pub hits: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    /// Unnormalized `r̂_{l+1}` on the scale of the current `r_0..r_l`.
    pub weight: f64,
    pub log_mean: f64,
    pub hits: usize,
    pub samples: usize,
}

/// `log(π̄_{l+1,k}(x) / (r_l p̃_l(x)))`, with the target density cancelled.
pub fn log_component_ratio(scheme: &TemperingScheme, level: usize, k: usize, x: &[f64]) -> f64 {
    log_tilt(scheme.beta(level + 1), x, scheme.warm_starts().center(k))
        - scheme.log_level_weight(level)
        - scheme.log_tilt_mixture(level, x)
}

/// `log(p̃_{l+1}(x) / (r_l p̃_l(x)))`, with the target density cancelled.
pub fn log_level_ratio(scheme: &TemperingScheme, level: usize, x: &[f64]) -> f64 {
    scheme.log_tilt_mixture(level + 1, x)
        - scheme.log_level_weight(level)
        - scheme.log_tilt_mixture(level, x)
}

fn check_hits(batch: &SampleBatch, level: usize, required: usize) -> Result<usize> {
    let hits = batch.at_level(level).count();
    if hits < required.max(1) {
        return Err(Error::InsufficientHits {
            level,
            hits,
            required,
        });
    }
    Ok(hits)
}

fn log_mean<I: Iterator<Item = f64>>(values: I, n: usize, level: usize) -> Result<f64> {
    let v: Vec<f64> = values.collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEstimate { level });
    }
    Ok(log_sum_exp(v.iter().copied()) - (n as f64).ln())
}

/// Estimates `w_{l+1,·}` from samples on levels `0..=level`.
pub fn estimate_component_weights(
    batch: &SampleBatch,
    scheme: &TemperingScheme,
    level: usize,
    min_level_hits: usize,
) -> Result<ComponentEstimate> {
    if level + 1 >= scheme.levels() {
        return Err(Error::Contract(format!("level {level} has no successor")));
    }
    let hits = check_hits(batch, level, min_level_hits)?;
    let n = batch.len();
    let log_means = (0..scheme.num_centers())
        .map(|k| {
            log_mean(
                batch
                    .at_level(level)
                    .map(|s| log_component_ratio(scheme, level, k, &s.x)),
                n,
                level,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let log_w: Vec<f64> = log_means.iter().map(|m| -m).collect();
    let mut probe = scheme.clone();
    probe.set_log_component_weights(level + 1, &log_w)?;
    Ok(ComponentEstimate {
        weights: probe.component_weights(level + 1).to_vec(),
        log_means,
        hits,
        samples: n,
    })
}

/// Estimates `r̂_{l+1}`; `scheme` must already hold the learned `w_{l+1,·}`.
pub fn estimate_level_weight(
    batch: &SampleBatch,
    scheme: &TemperingScheme,
    level: usize,
    min_level_hits: usize,
) -> Result<LevelEstimate> {
    if level + 1 >= scheme.levels() {
        return Err(Error::Contract(format!("level {level} has no successor")));
    }
    let hits = check_hits(batch, level, min_level_hits)?;
    let n = batch.len();
    let lm = log_mean(
        batch
            .at_level(level)
            .map(|s| log_level_ratio(scheme, level, &s.x)),
        n,
        level,
    )?;
    let weight = (-lm).exp();
    if !(weight.is_finite() && weight > 0.0) {
        return Err(Error::NonFiniteEstimate { level: level + 1 });
    }
    Ok(LevelEstimate {
        weight,
        log_mean: lm,
        hits,
        samples: n,
    })
}

/// `r_i = r̂_i / (count_i / N)`, rescaled to sum 1.
pub fn rebalance_levels(counts: &[usize], r_hat: &[f64]) -> Result<Vec<f64>> {
    if counts.len() != r_hat.len() {
        return Err(Error::Contract(
            "occupancy and weight vectors differ in length".into(),
        ));
    }
    if let Some(level) = counts.iter().position(|c| *c == 0) {
        return Err(Error::StarvedLevel { level });
    }
    let n: usize = counts.iter().sum();
    let raw: Vec<f64> = counts
        .iter()
        .zip(r_hat)
        .map(|(c, r)| r / (*c as f64 / n as f64))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|v| v / total).collect())
}

/// `r̂_1 ← l · factor · r̂_1`, where `l` is the number of levels already trained.
pub fn apply_first_level_upscale(r_hat: &[f64], levels_trained: usize, factor: f64) -> Vec<f64> {
    let mut out = r_hat.to_vec();
    if let Some(first) = out.first_mut() {
        *first *= levels_trained as f64 * factor;
    }
    out
}

/// Seeds of the chains of one stage, by chain index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub estimate: Vec<u64>,
    pub rebalance: Vec<u64>,
}

/// Everything learned while adding one level. `level` is 1-based, like sample files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub level: usize,
    pub component: ComponentEstimate,
    pub level_weight: LevelEstimate,
    /// Level weights before rebalancing (normalized over the active levels).
    pub candidate_r: Vec<f64>,
    pub rebalance_counts: Vec<usize>,
    pub rebalanced_r: Vec<f64>,
    pub seeds: StageSeeds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTrace {
    pub coldest_weights: Vec<f64>,
    pub levels: Vec<LevelTrace>,
}

/// Stage labels used in error annotations and seed derivation.
pub const STAGE_ESTIMATE: &str = "estimate";
pub const STAGE_REBALANCE: &str = "rebalance";

/// Runs `cfg.chains` chains on levels `0..active` and records `N` grid-spaced samples.
pub fn run_stage(
    scheme: &TemperingScheme,
    target: &TargetModel,
    kernel: &KernelConfig,
    cfg: &LearningConfig,
    active: usize,
    seed_path: &[u64],
) -> Result<(SampleBatch, Vec<u64>)> {
    let family = ReAlps::new(scheme, target)?;
    let per_chain = cfg.samples.div_ceil(cfg.chains);
    let first = cfg.burn_in_fraction * cfg.stage_duration;
    let spacing = (cfg.stage_duration - first) / per_chain as f64;
    let seeds: Vec<u64> = (0..cfg.chains as u64)
        .map(|c| {
            let mut path = seed_path.to_vec();
            path.push(c);
            derive_seed(cfg.seed, &path)
        })
        .collect();
    let batches = seeds
        .par_iter()
        .enumerate()
        .map(|(c, &seed)| {
            let start = scheme
                .warm_starts()
                .center(c % scheme.num_centers())
                .to_vec();
            let mut chain = Chain::new(&family, kernel.with_seed(seed), ChainState::new(start, 0))?
                .with_active_levels(active)?;
            let mut rec = GridSampler::new(first, spacing, per_chain, seed);
            chain.run(cfg.stage_duration, &mut rec)?;
            Ok(rec.batch)
        })
        .collect::<Result<Vec<SampleBatch>>>()?;
    Ok((SampleBatch::merge(batches), seeds))
}

/// Learns the full weight matrix starting from a scheme whose coldest level is set.
pub fn train(
    initial: &TemperingScheme,
    target: &TargetModel,
    kernel: &KernelConfig,
    cfg: &LearningConfig,
) -> Result<(TemperingScheme, WeightTrace)> {
    cfg.validate()?;
    kernel.validate()?;
    let mut scheme = initial.clone();
    scheme.set_log_level_weights(&[0.0])?;
    let mut trace = WeightTrace {
        coldest_weights: scheme.component_weights(0).to_vec(),
        levels: Vec::new(),
    };
    for l in 0..scheme.levels() - 1 {
        let stage_a = |e: Error| e.in_stage(l + 1, STAGE_ESTIMATE);
        let (batch, estimate_seeds) =
            run_stage(&scheme, target, kernel, cfg, l + 1, &[l as u64, 0]).map_err(stage_a)?;
        let component =
            estimate_component_weights(&batch, &scheme, l, cfg.min_level_hits).map_err(stage_a)?;
        let log_w: Vec<f64> = component.weights.iter().map(|w| w.ln()).collect();
        scheme
            .set_log_component_weights(l + 1, &log_w)
            .map_err(stage_a)?;
        let level_weight =
            estimate_level_weight(&batch, &scheme, l, cfg.min_level_hits).map_err(stage_a)?;
        log::debug!(
            "level {}: hits {}/{}, r_hat {:.4e}",
            l + 2,
            component.hits,
            component.samples,
            level_weight.weight
        );

        let stage_c = |e: Error| e.in_stage(l + 1, STAGE_REBALANCE);
        let mut r_hat: Vec<f64> = scheme.level_weights()[..=l].to_vec();
        r_hat.push(level_weight.weight);
        if let Some(f) = cfg.first_level_upscale {
            r_hat = apply_first_level_upscale(&r_hat, l + 1, f);
        }
        let log_r: Vec<f64> = r_hat.iter().map(|r| r.ln()).collect();
        scheme.set_log_level_weights(&log_r).map_err(stage_c)?;
        let candidate_r = scheme.level_weights()[..=l + 1].to_vec();
        let (batch, rebalance_seeds) =
            run_stage(&scheme, target, kernel, cfg, l + 2, &[l as u64, 1]).map_err(stage_c)?;
        let counts = batch.level_counts(l + 2);
        let rebalanced = rebalance_levels(&counts, &candidate_r).map_err(stage_c)?;
        let log_r: Vec<f64> = rebalanced.iter().map(|r| r.ln()).collect();
        scheme.set_log_level_weights(&log_r).map_err(stage_c)?;
        log::info!(
            "trained level {} of {}, occupancy {:?}",
            l + 2,
            scheme.levels(),
            counts
        );

        trace.levels.push(LevelTrace {
            level: l + 2,
            component,
            level_weight,
            candidate_r,
            rebalance_counts: counts,
            rebalanced_r: scheme.level_weights()[..=l + 1].to_vec(),
            seeds: StageSeeds {
                estimate: estimate_seeds,
                rebalance: rebalance_seeds,
            },
        });
    }
    Ok((scheme, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ChainState;
    use crate::record::Sample;
    use crate::target::{make_gaussian_mixture, GaussianMixtureSpec, Point};
    use crate::tilting::{TemperatureLadder, WarmStartSet};

    fn sample(level: usize, x: f64) -> Sample {
        ChainState {
            x: vec![x],
            level,
            clock: 0.0,
        }
        .to_sample(None)
    }

    fn batch(xs: &[(usize, f64)]) -> SampleBatch {
        SampleBatch {
            samples: xs.iter().map(|(l, x)| sample(*l, *x)).collect(),
            seeds: vec![0],
        }
    }

    fn two_mode_scheme(betas: Vec<f64>) -> TemperingScheme {
        let ws = WarmStartSet::new(vec![Point(vec![-5.0]), Point(vec![5.0])]).unwrap();
        TemperingScheme::uniform(TemperatureLadder::new(betas).unwrap(), ws)
    }

    #[test]
    fn single_component_weight_is_one() {
        let ws = WarmStartSet::new(vec![Point(vec![0.0])]).unwrap();
        let s = TemperingScheme::uniform(TemperatureLadder::new(vec![2.0, 0.0]).unwrap(), ws);
        let b = batch(&[(0, 0.3), (0, -1.2), (0, 2.0)]);
        let est = estimate_component_weights(&b, &s, 0, 1).unwrap();
        assert_eq!(est.weights, vec![1.0]);
    }

    #[test]
    fn insufficient_hits_is_reported() {
        let s = two_mode_scheme(vec![2.0, 0.0]);
        let b = batch(&[(0, 0.3), (1, 0.0)]);
        match estimate_component_weights(&b, &s, 0, 100) {
            Err(Error::InsufficientHits {
                level: 0,
                hits: 1,
                required: 100,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratio_matches_direct_evaluation() {
        let target = make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-5.0], vec![5.0]],
            covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap();
        let mut s = two_mode_scheme(vec![3.0, 1.0, 0.0]);
        s.set_log_component_weights(0, &[0.0, -2.5]).unwrap();
        s.set_log_component_weights(1, &[-0.3, 0.0]).unwrap();
        s.set_log_level_weights(&[0.2f64.ln(), 0.8f64.ln()])
            .unwrap();
        for x in [-6.1, -4.9, 0.3, 4.0, 7.7] {
            let lp = target.log_density(&[x]);
            let denom = s.log_level_weight(0) + s.log_tempered_density(&target, 0, &[x]);
            for k in 0..2 {
                let direct = lp + log_tilt(1.0, &[x], s.warm_starts().center(k)) - denom;
                assert!((log_component_ratio(&s, 0, k, &[x]) - direct).abs() < 1e-10);
            }
            let direct = s.log_tempered_density(&target, 1, &[x]) - denom;
            assert!((log_level_ratio(&s, 0, &[x]) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn indicator_divides_by_all_samples() {
        let s = two_mode_scheme(vec![2.0, 1.0, 0.0]);
        let only = batch(&[(0, -5.0), (0, 5.0)]);
        let mixed = batch(&[(0, -5.0), (0, 5.0), (1, 0.0), (1, 1.0)]);
        let a = estimate_level_weight(&only, &s, 0, 1).unwrap();
        let b = estimate_level_weight(&mixed, &s, 0, 1).unwrap();
        assert!((b.weight / a.weight - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_previous_weights_leaves_estimate_unchanged() {
        let mut s = two_mode_scheme(vec![3.0, 1.0, 0.0]);
        s.set_log_component_weights(0, &[0.0, -1.0]).unwrap();
        let b = batch(&[(0, -5.2), (0, -4.7), (0, 5.5), (0, 4.1)]);
        let a = estimate_component_weights(&b, &s, 0, 1).unwrap();
        s.set_log_component_weights(0, &[7.0, 6.0]).unwrap();
        let c = estimate_component_weights(&b, &s, 0, 1).unwrap();
        assert_eq!(a.weights, c.weights);
    }

    #[test]
    fn rebalance_examples() {
        let r = rebalance_levels(&[10, 10, 10], &[0.2, 0.3, 0.5]).unwrap();
        assert!(r
            .iter()
            .zip([0.2, 0.3, 0.5])
            .all(|(a, b)| (a - b).abs() < 1e-15));
        let r = rebalance_levels(&[20, 10, 10], &[1.0, 1.0, 1.0]).unwrap();
        assert!((r[0] / r[1] - 0.5).abs() < 1e-15);
        assert!(matches!(
            rebalance_levels(&[5, 0, 3], &[1.0, 1.0, 1.0]),
            Err(Error::StarvedLevel { level: 1 })
        ));
    }

    #[test]
    fn upscale_examples() {
        assert_eq!(
            apply_first_level_upscale(&[0.4, 0.6], 1, 1.0),
            vec![0.4, 0.6]
        );
        assert_eq!(
            apply_first_level_upscale(&[0.5, 1.0, 2.0], 3, 2.0),
            vec![3.0, 1.0, 2.0]
        );
    }

    #[test]
    fn config_validation() {
        let mut c = LearningConfig::default();
        assert!(c.validate().is_ok());
        c.samples = 50;
        assert!(c.validate().is_err());
        let c = LearningConfig {
            first_level_upscale: Some(0.0),
            ..LearningConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
