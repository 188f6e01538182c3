//! Config-driven orchestration behind the `realps` binary.
//!
//! Every command writes its artifacts plus a `manifest.json` into the output
//! directory. Artifacts other than the manifest are byte-for-byte reproducible
//! for a fixed config and seed.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    GridConfig, HatConfig, LadderConfig, PowerConfig, RunConfig, SamplingConfig, SchemeKind,
    StartLevel, WarmStartsConfig,
};

use crate::baseline::PowerTempering;
use crate::diagnostics::{
    adjacency_chi_square, balance_report, mixing_report, mode_occupancy, occupancy_error,
    projected_spectral_gap, tv_estimate, BalanceReport, MixingReport, ProjectionRates, TvEstimate,
};
use crate::error::{Error, Result};
use crate::hat::{HATModel, HatFamily};
use crate::kernels::{Chain, ChainState, KernelConfig, ReAlps, TemperedFamily};
use crate::learning::{train, WeightTrace, STAGE_ESTIMATE, STAGE_REBALANCE};
use crate::quadrature::QuadratureGrid;
use crate::record::{
    read_jsonl_file, write_jsonl_file, EventCounts, GridSampler, LevelSampler, SampleBatch,
};
use crate::target::TargetModel;
use crate::tilting::{init_coldest_weights, SchemeDocument, TemperingScheme, WarmStartSet};

/// Grid-spaced states kept per replica for level-mixing statistics.
pub const TRAJECTORY_POINTS: usize = 10_000;
/// Checkpoints of the TV-versus-time curve.
pub const TV_CHECKPOINTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the compact JSON re-serialization of `config`.
    pub config_sha256: String,
    pub config: RunConfig,
    pub artifacts: Vec<String>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub seeds: BTreeMap<String, Vec<u64>>,
}

impl RunManifest {
    pub fn verify(&self) -> bool {
        config_hash(&self.config) == self.config_sha256
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::json(path, e))?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Collects artifact names and per-stage seeds for the manifest.
struct Outputs {
    dir: PathBuf,
    artifacts: Vec<String>,
    seeds: BTreeMap<String, Vec<u64>>,
    started: Instant,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        create_dir(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            seeds: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(self, command: &str, config: &RunConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.into(),
            config_sha256: config_hash(config),
            config: config.clone(),
            artifacts: self.artifacts,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            seeds: self.seeds,
        };
        write_json(&self.dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

fn record_training_seeds(seeds: &mut BTreeMap<String, Vec<u64>>, trace: &WeightTrace) {
    for lt in &trace.levels {
        seeds.insert(
            format!("level{}.{STAGE_ESTIMATE}", lt.level),
            lt.seeds.estimate.clone(),
        );
        seeds.insert(
            format!("level{}.{STAGE_REBALANCE}", lt.level),
            lt.seeds.rebalance.clone(),
        );
    }
}

/// Untrained scheme for the config: uniform weights except `w_1 ∝ 1/π(x_k)`.
pub fn initial_scheme(config: &RunConfig, target: &TargetModel) -> Result<TemperingScheme> {
    let warm = config.build_warm_starts(target)?;
    let mut scheme = TemperingScheme::uniform(config.build_ladder()?, warm.clone());
    let w0: Vec<f64> = init_coldest_weights(target, &warm)
        .iter()
        .map(|w| w.ln())
        .collect();
    scheme.set_log_component_weights(0, &w0)?;
    Ok(scheme)
}

pub struct TrainOutput {
    pub scheme: TemperingScheme,
    pub trace: WeightTrace,
    pub manifest: RunManifest,
}

fn train_into(config: &RunConfig, out: &mut Outputs) -> Result<(TemperingScheme, WeightTrace)> {
    let target = config.build_target()?;
    let initial = initial_scheme(config, &target)?;
    log::info!(
        "training {} levels x {} warm starts",
        initial.levels(),
        initial.num_centers()
    );
    let (scheme, trace) = train(&initial, &target, &config.kernel, &config.learning_config())?;
    write_json(&out.path("scheme.json"), &scheme.to_document())?;
    write_json(&out.path("trace.json"), &trace)?;
    record_training_seeds(&mut out.seeds, &trace);
    Ok((scheme, trace))
}

/// Learns the component and level weights; writes `scheme.json` and `trace.json`.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutput> {
    config.validate()?;
    if config.scheme != SchemeKind::ReAlps {
        return Err(Error::Config(format!(
            "train needs scheme re_alps, got {}",
            config.scheme.as_str()
        )));
    }
    let mut out = Outputs::new(&config.out)?;
    let (scheme, trace) = train_into(config, &mut out)?;
    let manifest = out.finish("train", config)?;
    Ok(TrainOutput {
        scheme,
        trace,
        manifest,
    })
}

pub fn load_scheme(path: &Path) -> Result<TemperingScheme> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "scheme artifact not found"),
        ));
    }
    let doc: SchemeDocument = read_json(path)?;
    TemperingScheme::from_document(&doc)
}

/// Result of sampling one family over all replicas.
#[derive(Clone, Debug)]
pub struct SampleRun {
    /// Target-level states after burn-in and thinning, merged in replica order.
    pub batch: SampleBatch,
    /// Grid-spaced states over all levels, for mixing statistics.
    pub trajectory: SampleBatch,
    pub counts: EventCounts,
    pub levels: usize,
}

/// Runs one chain per seed (in parallel) and keeps target-level states.
///
/// Replica `r` starts at `starts[r % starts.len()]`.
pub fn sample_family<F: TemperedFamily>(
    family: &F,
    kernel: &KernelConfig,
    sampling: &SamplingConfig,
    starts: &[Vec<f64>],
    seeds: &[u64],
) -> Result<SampleRun> {
    if starts.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "sampling needs at least one start and one seed".into(),
        ));
    }
    let levels = family.levels();
    let target_level = levels - 1;
    let start_level = match sampling.start_level {
        StartLevel::Coldest => 0,
        StartLevel::Target => target_level,
    };
    let spacing = (sampling.duration - sampling.burn_in) / TRAJECTORY_POINTS as f64;
    let results = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            let initial = ChainState::new(starts[r % starts.len()].clone(), start_level);
            let mut chain = Chain::new(family, kernel.with_seed(seed), initial)?;
            let mut rec = (
                LevelSampler::new(target_level, sampling.burn_in, sampling.thinning, seed),
                (
                    GridSampler::new(sampling.burn_in, spacing, TRAJECTORY_POINTS, seed),
                    EventCounts::default(),
                ),
            );
            chain.run(sampling.duration, &mut rec)?;
            let (level, (grid, counts)) = rec;
            Ok((level.batch, grid.batch, counts))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = EventCounts::default();
    let mut batches = Vec::new();
    let mut trajectories = Vec::new();
    for (b, t, c) in results {
        counts.add(&c);
        batches.push(b);
        trajectories.push(t);
    }
    Ok(SampleRun {
        batch: SampleBatch::merge(batches),
        trajectory: SampleBatch::merge(trajectories),
        counts,
        levels,
    })
}

/// Mass of the target closest to each warm start.
///
/// Exact in 1D for built-in mixtures, by quadrature when a grid is given,
/// otherwise the mixture weights.
pub fn reference_occupancy(
    target: &TargetModel,
    warm: &WarmStartSet,
    grid: Option<&QuadratureGrid>,
) -> Result<Vec<f64>> {
    let m = warm.len();
    if target.dim() == 1 && target.has_components() {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|a, b| warm.center(*a)[0].total_cmp(&warm.center(*b)[0]));
        let mut occ = vec![0.0; m];
        let mut lo_cdf = 0.0;
        for (pos, &k) in order.iter().enumerate() {
            let hi_cdf = match order.get(pos + 1) {
                Some(&next) => target.cdf_1d(0.5 * (warm.center(k)[0] + warm.center(next)[0]))?,
                None => 1.0,
            };
            occ[k] += hi_cdf - lo_cdf;
            lo_cdf = hi_cdf;
        }
        return Ok(occ);
    }
    if let Some(grid) = grid {
        let log_p = grid.evaluate(|x| target.log_density(x));
        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut occ = vec![0.0; m];
        let mut x = vec![0.0; grid.dim()];
        for (i, lp) in log_p.iter().enumerate() {
            grid.node(i, &mut x);
            occ[warm.nearest(&x)] += (lp - max).exp();
        }
        let total: f64 = occ.iter().sum();
        return Ok(occ.iter().map(|v| v / total).collect());
    }
    if target.has_components() && target.num_components() == m {
        return Ok(target.weights());
    }
    Err(Error::Config(
        "reference occupancy needs a built-in target with one warm start per component, or a grid"
            .into(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub scheme: SchemeKind,
    pub samples: usize,
    pub mode_occupancy: Vec<f64>,
    pub reference_occupancy: Vec<f64>,
    pub occupancy_error: f64,
    pub mixing: MixingReport,
    pub counts: EventCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub t: f64,
    pub samples: usize,
    pub tv: f64,
}

pub struct SampleOutput {
    pub run: SampleRun,
    pub summary: SampleSummary,
    pub tv_curve: Vec<TvPoint>,
    pub manifest: Option<RunManifest>,
}

/// TV of the target-level samples up to evenly spaced times after burn-in.
pub fn tv_curve(
    batch: &SampleBatch,
    level: usize,
    target: &TargetModel,
    grid: &QuadratureGrid,
    sampling: &SamplingConfig,
) -> Result<Vec<TvPoint>> {
    let span = sampling.duration - sampling.burn_in;
    let mut points = Vec::with_capacity(TV_CHECKPOINTS);
    for c in 1..=TV_CHECKPOINTS {
        let t = sampling.burn_in + span * c as f64 / TV_CHECKPOINTS as f64;
        let prefix = SampleBatch {
            samples: batch.samples.iter().filter(|s| s.t <= t).cloned().collect(),
            seeds: batch.seeds.clone(),
        };
        if prefix.is_empty() {
            continue;
        }
        let est = tv_estimate(&prefix, level, target, grid)?;
        points.push(TvPoint {
            t,
            samples: est.samples,
            tv: est.tv,
        });
    }
    Ok(points)
}

fn run_scheme(
    config: &RunConfig,
    kind: SchemeKind,
    scheme: Option<&TemperingScheme>,
) -> Result<SampleRun> {
    let target = config.build_target()?;
    let warm = config.build_warm_starts(&target)?;
    let starts: Vec<Vec<f64>> = warm.centers().iter().map(|c| c.0.clone()).collect();
    let seeds = config.replica_seeds();
    let baseline_kernel = KernelConfig {
        teleport: false,
        ..config.kernel.clone()
    };
    match kind {
        SchemeKind::ReAlps => {
            let scheme = scheme.ok_or_else(|| Error::Contract("re_alps needs a scheme".into()))?;
            let family = ReAlps::new(scheme, &target)?;
            sample_family(&family, &config.kernel, &config.sampling, &starts, &seeds)
        }
        SchemeKind::HatAlps => {
            let hat = config.hat.as_ref().ok_or_else(|| {
                Error::Config("hat_alps needs a \"hat\" section with betas".into())
            })?;
            let family = HatFamily::new(HATModel::from_target(&target)?, hat.betas.clone())?;
            sample_family(&family, &baseline_kernel, &config.sampling, &starts, &seeds)
        }
        SchemeKind::NaivePowerTempering => {
            let power = config.power.as_ref().ok_or_else(|| {
                Error::Config("naive_power_tempering needs a \"power\" section with powers".into())
            })?;
            let family = PowerTempering::new(power.powers.clone(), &target)?;
            sample_family(&family, &baseline_kernel, &config.sampling, &starts, &seeds)
        }
    }
}

fn summarize(
    config: &RunConfig,
    kind: SchemeKind,
    run: &SampleRun,
    grid: Option<&QuadratureGrid>,
) -> Result<(SampleSummary, Vec<TvPoint>)> {
    let target = config.build_target()?;
    let warm = config.build_warm_starts(&target)?;
    let level = run.levels - 1;
    let reference = reference_occupancy(&target, &warm, grid)?;
    let occ = mode_occupancy(&run.batch, &warm, level)?;
    let (tv, curve) = match grid {
        Some(g) if target.dim() <= 2 => (
            Some(tv_estimate(&run.batch, level, &target, g)?),
            tv_curve(&run.batch, level, &target, g, &config.sampling)?,
        ),
        _ => (None, Vec::new()),
    };
    let mixing = mixing_report(&run.trajectory, run.levels, &warm, &run.counts, tv);
    Ok((
        SampleSummary {
            scheme: kind,
            samples: run.batch.len(),
            occupancy_error: occupancy_error(&occ, &reference),
            mode_occupancy: occ,
            reference_occupancy: reference,
            mixing,
            counts: run.counts.clone(),
        },
        curve,
    ))
}

fn sample_into(
    config: &RunConfig,
    kind: SchemeKind,
    scheme: Option<&TemperingScheme>,
    out: &mut Outputs,
) -> Result<SampleOutput> {
    let grid = config.build_grid()?;
    log::info!(
        "sampling {} for T = {} over {} replicas",
        kind.as_str(),
        config.sampling.duration,
        config.replicas
    );
    let run = run_scheme(config, kind, scheme)?;
    out.seeds.insert("replicas".into(), config.replica_seeds());
    write_jsonl_file(&out.path("samples.jsonl"), &run.batch, Some(kind.as_str()))?;
    let (summary, curve) = summarize(config, kind, &run, grid.as_ref())?;
    write_json(&out.path("summary.json"), &summary)?;
    if !curve.is_empty() {
        write_csv(&out.path("tv_curve.csv"), &curve)?;
    }
    Ok(SampleOutput {
        run,
        summary,
        tv_curve: curve,
        manifest: None,
    })
}

/// Draws target-level samples with the configured scheme; writes `samples.jsonl` and `summary.json`.
pub fn cmd_sample(config: &RunConfig) -> Result<SampleOutput> {
    config.validate()?;
    let scheme = match config.scheme {
        SchemeKind::ReAlps => Some(load_scheme(&config.scheme_path())?),
        _ => None,
    };
    let mut out = Outputs::new(&config.out)?;
    let mut result = sample_into(config, config.scheme, scheme.as_ref(), &mut out)?;
    result.manifest = Some(out.finish("sample", config)?);
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scheme: SchemeKind,
    pub status: String,
    pub samples: Option<usize>,
    pub occupancy_error: Option<f64>,
    pub tv: Option<f64>,
    pub rwm_acceptance: Option<f64>,
    pub swap_acceptance: Option<f64>,
    pub leap_acceptance: Option<f64>,
    pub level_autocorrelation_time: Option<f64>,
    pub error: Option<String>,
}

impl ComparisonRow {
    fn ok(s: &SampleSummary) -> Self {
        ComparisonRow {
            scheme: s.scheme,
            status: "ok".into(),
            samples: Some(s.samples),
            occupancy_error: Some(s.occupancy_error),
            tv: s.mixing.tv.map(|t: TvEstimate| t.tv),
            rwm_acceptance: s.mixing.rwm_acceptance,
            swap_acceptance: s.mixing.swap_acceptance,
            leap_acceptance: s.mixing.leap_acceptance,
            level_autocorrelation_time: Some(s.mixing.level_autocorrelation_time),
            error: None,
        }
    }

    fn failed(scheme: SchemeKind, e: &Error) -> Self {
        ComparisonRow {
            scheme,
            status: "failed".into(),
            samples: None,
            occupancy_error: None,
            tv: None,
            rwm_acceptance: None,
            swap_acceptance: None,
            leap_acceptance: None,
            level_autocorrelation_time: None,
            error: Some(e.to_string()),
        }
    }
}

pub struct CompareOutput {
    pub rows: Vec<ComparisonRow>,
    pub manifest: RunManifest,
}

/// Runs every listed scheme on the same target, budget and seeds; writes `comparison.csv`
/// and one subdirectory per scheme. A failing scheme is recorded and the others still run.
pub fn cmd_compare(config: &RunConfig) -> Result<CompareOutput> {
    config.validate()?;
    if config.schemes.len() < 2 {
        return Err(Error::Config("compare needs at least two schemes".into()));
    }
    let mut out = Outputs::new(&config.out)?;
    let mut rows = Vec::new();
    for &kind in &config.schemes {
        let sub = config.out.join(kind.as_str());
        let result = (|| -> Result<SampleOutput> {
            let mut sub_out = Outputs::new(&sub)?;
            let scheme = match kind {
                SchemeKind::ReAlps => Some(train_into(config, &mut sub_out)?.0),
                _ => None,
            };
            let r = sample_into(config, kind, scheme.as_ref(), &mut sub_out)?;
            for (k, v) in &sub_out.seeds {
                out.seeds
                    .insert(format!("{}.{k}", kind.as_str()), v.clone());
            }
            for a in &sub_out.artifacts {
                out.artifacts.push(format!("{}/{a}", kind.as_str()));
            }
            Ok(r)
        })();
        match result {
            Ok(r) => rows.push(ComparisonRow::ok(&r.summary)),
            Err(e) => {
                log::error!("{} failed: {e}", kind.as_str());
                rows.push(ComparisonRow::failed(kind, &e));
            }
        }
    }
    write_csv(&out.path("comparison.csv"), &rows)?;
    let manifest = out.finish("compare", config)?;
    Ok(CompareOutput { rows, manifest })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceDocument {
    pub trained: BalanceReport,
    /// The same ladder with uniform weights.
    pub uniform: BalanceReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub level: usize,
    pub component: usize,
    pub beta: f64,
    pub w: f64,
    pub r: f64,
    pub log_z_bar: f64,
    pub h1_ratio: f64,
    pub h1_uniform_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyRow {
    pub level: usize,
    pub component: usize,
    pub chi_square: Option<f64>,
    pub infinite: bool,
    pub component_chi_square: Option<f64>,
    pub component_infinite: Option<bool>,
    pub grid_warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDocument {
    pub gap: Option<f64>,
    pub uniform_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyDocument {
    pub samples: usize,
    pub mode_occupancy: Vec<f64>,
    pub reference_occupancy: Vec<f64>,
    pub occupancy_error: f64,
    pub tv: Option<TvEstimate>,
}

#[derive(Default)]
pub struct DiagnoseOutput {
    pub balance: Option<BalanceDocument>,
    pub adjacency: Vec<AdjacencyRow>,
    pub spectral: Option<SpectralDocument>,
    pub occupancy: Option<OccupancyDocument>,
    pub manifest: Option<RunManifest>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn diagnose_scheme(
    scheme: &TemperingScheme,
    target: &TargetModel,
    grid: &QuadratureGrid,
    kernel: &KernelConfig,
    out: &mut Outputs,
    result: &mut DiagnoseOutput,
) -> Result<()> {
    let uniform = TemperingScheme::uniform(scheme.ladder().clone(), scheme.warm_starts().clone());
    let doc = BalanceDocument {
        trained: balance_report(scheme, target, grid)?,
        uniform: balance_report(&uniform, target, grid)?,
    };
    let mut rows = Vec::new();
    for i in 0..scheme.levels() {
        for k in 0..scheme.num_centers() {
            rows.push(BalanceRow {
                level: i + 1,
                component: k + 1,
                beta: scheme.beta(i),
                w: scheme.component_weights(i)[k],
                r: scheme.level_weights()[i],
                log_z_bar: doc.trained.log_z_bar[i][k],
                h1_ratio: doc.trained.h1_ratios[i],
                h1_uniform_ratio: doc.uniform.h1_ratios[i],
            });
        }
    }
    write_json(&out.path("balance.json"), &doc)?;
    write_csv(&out.path("balance.csv"), &rows)?;
    result.balance = Some(doc);

    for l in 0..scheme.levels().saturating_sub(1) {
        for k in 0..scheme.num_centers() {
            let a = adjacency_chi_square(scheme, target, l, k, grid)?;
            result.adjacency.push(AdjacencyRow {
                level: l + 1,
                component: k + 1,
                chi_square: finite(a.barred.value),
                infinite: a.barred.infinite,
                component_chi_square: a.component.and_then(|c| finite(c.value)),
                component_infinite: a.component.map(|c| c.infinite),
                grid_warning: a.barred.grid_warning || a.component.is_some_and(|c| c.grid_warning),
            });
        }
    }
    write_csv(&out.path("adjacency.csv"), &result.adjacency)?;

    let rates = ProjectionRates::from(kernel);
    let spectral = match (
        projected_spectral_gap(scheme, target, grid, rates),
        projected_spectral_gap(&uniform, target, grid, rates),
    ) {
        (Ok((g, _)), Ok((u, _))) => SpectralDocument {
            gap: Some(g),
            uniform_gap: Some(u),
            error: None,
        },
        (Err(e), _) | (_, Err(e)) => SpectralDocument {
            gap: None,
            uniform_gap: None,
            error: Some(e.to_string()),
        },
    };
    write_json(&out.path("spectral.json"), &spectral)?;
    result.spectral = Some(spectral);
    Ok(())
}

/// Balance, adjacency χ², projected-chain gap and sample occupancy reports.
pub fn cmd_diagnose(config: &RunConfig) -> Result<DiagnoseOutput> {
    config.validate()?;
    let target = config.build_target()?;
    let warm = config.build_warm_starts(&target)?;
    let grid = config.build_grid()?;
    let mut out = Outputs::new(&config.out)?;
    let mut result = DiagnoseOutput::default();
    if config.scheme == SchemeKind::ReAlps {
        let scheme = load_scheme(&config.scheme_path())?;
        let grid = grid
            .as_ref()
            .ok_or_else(|| Error::Config("diagnose needs a \"grid\" section".into()))?;
        diagnose_scheme(
            &scheme,
            &target,
            grid,
            &config.kernel,
            &mut out,
            &mut result,
        )?;
    }
    let samples = config.samples_path();
    if config.samples_file.is_some() || samples.exists() {
        let batch = read_jsonl_file(&samples)?;
        let level = batch
            .samples
            .iter()
            .map(|s| s.level)
            .max()
            .ok_or_else(|| Error::Config(format!("{}: no samples", samples.display())))?;
        let reference = reference_occupancy(&target, &warm, grid.as_ref())?;
        let occ = mode_occupancy(&batch, &warm, level)?;
        let tv = match &grid {
            Some(g) => Some(tv_estimate(&batch, level, &target, g)?),
            None => None,
        };
        let doc = OccupancyDocument {
            samples: batch.at_level(level).count(),
            occupancy_error: occupancy_error(&occ, &reference),
            mode_occupancy: occ,
            reference_occupancy: reference,
            tv,
        };
        write_json(&out.path("occupancy.json"), &doc)?;
        result.occupancy = Some(doc);
    } else {
        log::warn!(
            "{} not found, skipping sample diagnostics",
            samples.display()
        );
    }
    result.manifest = Some(out.finish("diagnose", config)?);
    Ok(result)
}
