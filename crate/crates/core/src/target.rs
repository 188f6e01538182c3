//! Target distributions exposed as unnormalized log-density oracles.
//!
//! A [`TargetModel`] evaluates `log π(x)` up to an additive constant. The
//! built-in mixture families additionally carry their component
//! decomposition `π = Σ_k α_k π_k` so that tests and diagnostics can compute
//! component-resolved partition functions and draw exact samples.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, squared_distance};

/// Log-densities are clamped here instead of returning `-inf`.
pub const LOG_DENSITY_FLOOR: f64 = -1e300;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A point of the state space `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub weights: Vec<f64>,
}

/// Mixture of isotropic multivariate Student-t components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentTMixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    pub dof: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Serializable target description, as found in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSpec {
    GaussianMixture(GaussianMixtureSpec),
    StudentTMixture(StudentTMixtureSpec),
}

impl TargetSpec {
    pub fn build(&self) -> Result<TargetModel> {
        match self {
            TargetSpec::GaussianMixture(s) => make_gaussian_mixture(s),
            TargetSpec::StudentTMixture(s) => make_student_t_mixture(s),
        }
    }
}

#[derive(Clone, Debug)]
struct GaussianComponent {
    mean: Vec<f64>,
    /// Lower Cholesky factor of the covariance, row-major.
    chol: Vec<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianComponent {
    fn log_density(&self, x: &[f64]) -> f64 {
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
        self.log_norm - 0.5 * quad
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        (0..d)
            .map(|i| self.mean[i] + (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum::<f64>())
            .collect()
    }
}

#[derive(Clone, Debug)]
struct StudentTComponent {
    mean: Vec<f64>,
    scale: f64,
    dof: f64,
    log_norm: f64,
}

impl StudentTComponent {
    fn new(mean: Vec<f64>, scale: f64, dof: f64) -> Self {
        let d = mean.len() as f64;
        let log_norm = ln_gamma((dof + d) / 2.0)
            - ln_gamma(dof / 2.0)
            - 0.5 * d * (dof * std::f64::consts::PI).ln()
            - d * scale.ln();
        StudentTComponent {
            mean,
            scale,
            dof,
            log_norm,
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.mean.len() as f64;
        let r2 = squared_distance(x, &self.mean) / (self.scale * self.scale);
        self.log_norm - 0.5 * (self.dof + d) * (r2 / self.dof).ln_1p()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let chi = ChiSquared::new(self.dof).expect("dof validated at construction");
        let g: f64 = chi.sample(rng);
        let factor = self.scale * (self.dof / g).sqrt();
        self.mean
            .iter()
            .map(|m| m + factor * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Component {
    Gaussian(GaussianComponent),
    StudentT(StudentTComponent),
}

impl Component {
    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Component::Gaussian(g) => g.log_density(x),
            Component::StudentT(t) => t.log_density(x),
        }
    }

    fn mean(&self) -> &[f64] {
        match self {
            Component::Gaussian(g) => &g.mean,
            Component::StudentT(t) => &t.mean,
        }
    }
}

/// Mode location, Hessian of `-log` density at the mode, and mixture weight of one component.
#[derive(Clone, Debug)]
pub struct ModeInfo {
    pub mean: Point,
    pub hessian: DMatrix<f64>,
    pub weight: f64,
}

type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Unnormalized log-density oracle, optionally with its mixture decomposition.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct TargetModel {
    dim: usize,
    log_weights: Vec<f64>,
    components: Vec<Component>,
    custom: Option<LogDensityFn>,
}

impl fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetModel")
            .field("dim", &self.dim)
            .field("components", &self.components.len())
            .field("custom", &self.custom.is_some())
            .finish()
    }
}

impl TargetModel {
    /// Wraps an arbitrary unnormalized log-density. No component information is available.
    pub fn from_fn<F>(dim: usize, log_density: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Config("target dimension must be >= 1".into()));
        }
        Ok(TargetModel {
            dim,
            log_weights: Vec::new(),
            components: Vec::new(),
            custom: Some(Arc::new(log_density)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let v = match &self.custom {
            Some(f) => f(x),
            None => log_sum_exp(
                self.components
                    .iter()
                    .zip(&self.log_weights)
                    .map(|(c, lw)| lw + c.log_density(x)),
            ),
        };
        if v < LOG_DENSITY_FLOOR {
            LOG_DENSITY_FLOOR
        } else {
            v
        }
    }

    pub fn has_components(&self) -> bool {
        self.custom.is_none() && !self.components.is_empty()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// `log π_k(x)` of the normalized component `k` (without its mixture weight).
    pub fn component_log_density(&self, k: usize, x: &[f64]) -> f64 {
        self.components[k].log_density(x).max(LOG_DENSITY_FLOOR)
    }

    /// `log(α_k π_k(x))`.
    pub fn weighted_component_log_density(&self, k: usize, x: &[f64]) -> f64 {
        (self.log_weights[k] + self.components[k].log_density(x)).max(LOG_DENSITY_FLOOR)
    }

    pub fn component_means(&self) -> Vec<Point> {
        self.components
            .iter()
            .map(|c| Point(c.mean().to_vec()))
            .collect()
    }

    /// Exact per-component mode information, used by the HAT baseline.
    pub fn mode_information(&self) -> Result<Vec<ModeInfo>> {
        if !self.has_components() {
            return Err(Error::Config(
                "mode information requires a built-in mixture target".into(),
            ));
        }
        Ok(self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| {
                let hessian = match c {
                    Component::Gaussian(g) => g.precision.clone(),
                    Component::StudentT(t) => {
                        let d = t.mean.len();
                        let h = (t.dof + d as f64) / (t.dof * t.scale * t.scale);
                        DMatrix::identity(d, d) * h
                    }
                };
                ModeInfo {
                    mean: Point(c.mean().to_vec()),
                    hessian,
                    weight: lw.exp(),
                }
            })
            .collect())
    }

    /// Exact CDF of a one-dimensional built-in mixture.
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        if self.dim != 1 || !self.has_components() {
            return Err(Error::Config(
                "exact CDF requires a one-dimensional built-in mixture".into(),
            ));
        }
        let mut total = 0.0;
        for (c, lw) in self.components.iter().zip(&self.log_weights) {
            let p = match c {
                Component::Gaussian(g) => {
                    let sd = g.chol[0];
                    Normal::new(g.mean[0], sd)
                        .map_err(|e| Error::Numeric(e.to_string()))?
                        .cdf(x)
                }
                Component::StudentT(t) => StudentsT::new(t.mean[0], t.scale, t.dof)
                    .map_err(|e| Error::Numeric(e.to_string()))?
                    .cdf(x),
            };
            total += lw.exp() * p;
        }
        Ok(total)
    }

    /// Draws one exact sample (built-in mixtures only).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, Point)> {
        if !self.has_components() {
            return Err(Error::Config(
                "exact sampling requires a built-in mixture target".into(),
            ));
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.components.len() - 1;
        for (i, lw) in self.log_weights.iter().enumerate() {
            acc += lw.exp();
            if u < acc {
                k = i;
                break;
            }
        }
        let x = match &self.components[k] {
            Component::Gaussian(g) => g.sample(rng),
            Component::StudentT(t) => t.sample(rng),
        };
        Ok((k, Point(x)))
    }
}

fn validate_weights(weights: &[f64], count: usize) -> Result<Vec<f64>> {
    if weights.len() != count {
        return Err(Error::Config(format!(
            "expected {count} mixture weights, got {}",
            weights.len()
        )));
    }
    if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Config(format!(
            "mixture weight of component {k} must be positive"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "mixture weights must sum to 1, got {total}"
        )));
    }
    Ok(weights.iter().map(|w| (w / total).ln()).collect())
}

fn validate_means(means: &[Vec<f64>]) -> Result<usize> {
    let dim = means
        .first()
        .map(|m| m.len())
        .ok_or_else(|| Error::Config("mixture needs at least one component".into()))?;
    if dim == 0 {
        return Err(Error::Config("target dimension must be >= 1".into()));
    }
    for (k, m) in means.iter().enumerate() {
        if m.len() != dim {
            return Err(Error::Config(format!(
                "mean of component {k} has dimension {}, expected {dim}",
                m.len()
            )));
        }
        if m.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(format!(
                "mean of component {k} is not finite"
            )));
        }
    }
    Ok(dim)
}

/// Builds a normalized Gaussian mixture. Each covariance must be symmetric positive-definite.
pub fn make_gaussian_mixture(spec: &GaussianMixtureSpec) -> Result<TargetModel> {
    let dim = validate_means(&spec.means)?;
    let m = spec.means.len();
    if spec.covariances.len() != m {
        return Err(Error::Config(format!(
            "expected {m} covariances, got {}",
            spec.covariances.len()
        )));
    }
    let log_weights = validate_weights(&spec.weights, m)?;
    let mut components = Vec::with_capacity(m);
    for (k, (mean, cov)) in spec.means.iter().zip(&spec.covariances).enumerate() {
        let sigma = spd_matrix(cov, dim).map_err(|why| {
            Error::Config(format!("covariance of component {k} is not SPD: {why}"))
        })?;
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config(format!("covariance of component {k} is not SPD")))?;
        let l = chol.l();
        let log_det = 2.0 * (0..dim).map(|i| l[(i, i)].ln()).sum::<f64>();
        let precision = chol.inverse();
        let mut flat = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                flat[i * dim + j] = l[(i, j)];
            }
        }
        components.push(Component::Gaussian(GaussianComponent {
            mean: mean.clone(),
            chol: flat,
            precision,
            log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
        }));
    }
    Ok(TargetModel {
        dim,
        log_weights,
        components,
        custom: None,
    })
}

/// Parses and checks a symmetric positive-definite matrix (all eigenvalues > 0).
pub(crate) fn spd_matrix(
    rows: &[Vec<f64>],
    dim: usize,
) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(format!("expected a {dim}x{dim} matrix"));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err("non-finite entry".into());
    }
    let scale = m.amax().max(1.0);
    for i in 0..dim {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(format!("asymmetric at ({i}, {j})"));
            }
        }
    }
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min.is_nan() || min <= 0.0 {
        return Err(format!("smallest eigenvalue {min}"));
    }
    Ok(m)
}

/// Builds a normalized mixture of isotropic Student-t components.
pub fn make_student_t_mixture(spec: &StudentTMixtureSpec) -> Result<TargetModel> {
    validate_means(&spec.means)?;
    let m = spec.means.len();
    if spec.scales.len() != m || spec.dof.len() != m {
        return Err(Error::Config(format!(
            "expected {m} scales and {m} degrees of freedom"
        )));
    }
    let log_weights = validate_weights(&spec.weights, m)?;
    let mut components = Vec::with_capacity(m);
    for k in 0..m {
        let (s, nu) = (spec.scales[k], spec.dof[k]);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Config(format!(
                "scale of component {k} must be positive, got {s}"
            )));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Config(format!(
                "degrees of freedom of component {k} must be positive, got {nu}"
            )));
        }
        components.push(Component::StudentT(StudentTComponent::new(
            spec.means[k].clone(),
            s,
            nu,
        )));
    }
    Ok(TargetModel {
        dim: spec.means[0].len(),
        log_weights,
        components,
        custom: None,
    })
}
