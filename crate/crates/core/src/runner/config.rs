use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::learning::LearningConfig;
use crate::quadrature::{Axis, QuadratureGrid};
use crate::target::{Point, TargetModel, TargetSpec};
use crate::tilting::{build_ladder, LadderSpec, TemperatureLadder, WarmStartSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    ReAlps,
    HatAlps,
    NaivePowerTempering,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::ReAlps => "re_alps",
            SchemeKind::HatAlps => "hat_alps",
            SchemeKind::NaivePowerTempering => "naive_power_tempering",
        }
    }
}

/// `"true_modes"` or an explicit list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WarmStartsConfig {
    Named(String),
    Explicit(Vec<Vec<f64>>),
}

impl Default for WarmStartsConfig {
    fn default() -> Self {
        WarmStartsConfig::Named("true_modes".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderConfig {
    Betas(Vec<f64>),
    Spec(LadderSpec),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartLevel {
    #[default]
    Coldest,
    Target,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub duration: f64,
    /// Simulation time discarded before target-level states are retained.
    #[serde(default)]
    pub burn_in: f64,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub start_level: StartLevel,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            duration: 1000.0,
            burn_in: 0.0,
            thinning: 1,
            start_level: StartLevel::Coldest,
        }
    }
}

/// HAT ladder, from the coldest `β` down to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HatConfig {
    pub betas: Vec<f64>,
}

/// Powers of the naive ladder, increasing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub powers: Vec<f64>,
}

/// Tensor quadrature grid, one `[lo, hi]` pair per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<QuadratureGrid> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::Config("grid lo and hi differ in length".into()));
        }
        QuadratureGrid::new(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(lo, hi)| Axis {
                    lo: *lo,
                    hi: *hi,
                    points: self.points,
                })
                .collect(),
        )
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: TargetSpec,
    #[serde(default)]
    pub warm_starts: WarmStartsConfig,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Scheme used by `train`, `sample` and `diagnose`.
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    /// Schemes run by `compare`.
    #[serde(default)]
    pub schemes: Vec<SchemeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hat: Option<HatConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: usize,
    /// Trained scheme read by `sample` and `diagnose`; defaults to `<out>/scheme.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme_file: Option<PathBuf>,
    /// Sample batch read by `diagnose`; defaults to `<out>/samples.jsonl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<PathBuf>,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::ReAlps
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Applies command-line overrides.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        replicas: Option<usize>,
        out: Option<PathBuf>,
    ) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(r) = replicas {
            self.replicas = r;
        }
        if let Some(o) = out {
            self.out = o;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        let s = &self.sampling;
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(Error::Config("sampling.duration must be > 0".into()));
        }
        if !(s.burn_in.is_finite() && s.burn_in >= 0.0 && s.burn_in < s.duration) {
            return Err(Error::Config(
                "sampling.burn_in must be in [0, duration)".into(),
            ));
        }
        if s.thinning == 0 {
            return Err(Error::Config("sampling.thinning must be >= 1".into()));
        }
        let target = self.build_target()?;
        let warm = self.build_warm_starts(&target)?;
        if warm.dim() != target.dim() {
            return Err(Error::Config(format!(
                "warm starts have dimension {}, target has {}",
                warm.dim(),
                target.dim()
            )));
        }
        if let Some(g) = &self.grid {
            if g.lo.len() != target.dim() {
                return Err(Error::Config(
                    "grid dimension differs from the target".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn build_target(&self) -> Result<TargetModel> {
        self.target.build()
    }

    pub fn build_warm_starts(&self, target: &TargetModel) -> Result<WarmStartSet> {
        match &self.warm_starts {
            WarmStartsConfig::Named(n) if n == "true_modes" => {
                WarmStartSet::new(target.component_means())
            }
            WarmStartsConfig::Named(n) => Err(Error::Config(format!(
                "unknown warm start selector {n:?}, expected \"true_modes\" or a list"
            ))),
            WarmStartsConfig::Explicit(points) => {
                WarmStartSet::new(points.iter().cloned().map(Point).collect())
            }
        }
    }

    pub fn build_ladder(&self) -> Result<TemperatureLadder> {
        match &self.ladder {
            LadderConfig::Betas(b) => TemperatureLadder::new(b.clone()),
            LadderConfig::Spec(s) => build_ladder(s),
        }
    }

    pub fn build_grid(&self) -> Result<Option<QuadratureGrid>> {
        self.grid.as_ref().map(GridConfig::build).transpose()
    }

    pub fn scheme_path(&self) -> PathBuf {
        self.scheme_file
            .clone()
            .unwrap_or_else(|| self.out.join("scheme.json"))
    }

    pub fn samples_path(&self) -> PathBuf {
        self.samples_file
            .clone()
            .unwrap_or_else(|| self.out.join("samples.jsonl"))
    }

    /// Learning config seeded from the run seed.
    pub fn learning_config(&self) -> LearningConfig {
        LearningConfig {
            seed: self.seed,
            ..self.learning.clone()
        }
    }

    /// `seed + r` for replica `r`.
    pub fn replica_seeds(&self) -> Vec<u64> {
        (0..self.replicas as u64)
            .map(|r| self.seed.wrapping_add(r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "target": {"type": "gaussian_mixture", "means": [[-3.0], [3.0]],
                   "covariances": [[[1.0]], [[1.0]]], "weights": [0.5, 0.5]},
        "ladder": {"betas": [4.0, 0.0]}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.scheme, SchemeKind::ReAlps);
        assert_eq!(c.replicas, 1);
        assert_eq!(c.warm_starts, WarmStartsConfig::default());
        c.validate().unwrap();
        let t = c.build_target().unwrap();
        assert_eq!(c.build_warm_starts(&t).unwrap().len(), 2);
        assert_eq!(c.build_ladder().unwrap().len(), 2);
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_unknown_fields_and_selectors() {
        let bad = MINIMAL.replace("\"ladder\"", "\"ladderr\"");
        assert!(RunConfig::from_json(&bad).is_err());
        let mut c = RunConfig::from_json(MINIMAL).unwrap();
        c.warm_starts = WarmStartsConfig::Named("modes".into());
        assert!(c.validate().is_err());
        c.warm_starts = WarmStartsConfig::Explicit(vec![vec![0.0, 1.0]]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_and_replica_seeds() {
        let c = RunConfig::from_json(MINIMAL).unwrap().with_overrides(
            Some(40),
            Some(3),
            Some("x".into()),
        );
        assert_eq!(c.replica_seeds(), vec![40, 41, 42]);
        assert_eq!(c.scheme_path(), PathBuf::from("x/scheme.json"));
        assert_eq!(c.learning_config().seed, 40);
    }
}
