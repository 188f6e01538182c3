//! Gaussian tilts, temperature ladders and tilted tempered densities.
//!
//! Level `i` of a scheme targets
//! `p̃_i(x) ∝ π(x) · Σ_k w_{i,k} exp(-β_i ‖x - x_k‖² / 2)`.
//! Levels are indexed from 0 (coldest, largest β) to `L - 1` (β = 0, the target).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, squared_distance};
use crate::target::{Point, TargetModel};

/// Log of the isotropic Gaussian tilt `q_β(x - center)`.
#[inline]
pub fn log_tilt(beta: f64, x: &[f64], center: &[f64]) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    -0.5 * beta * squared_distance(x, center)
}

/// Warm starts `x_k` with translation teleports `g_{jj'}(x) = x - x_j + x_{j'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStartSet {
    centers: Vec<Point>,
}

impl WarmStartSet {
    pub fn new(centers: Vec<Point>) -> Result<Self> {
        let dim = centers
            .first()
            .map(|c| c.dim())
            .ok_or_else(|| Error::Config("at least one warm start is required".into()))?;
        if dim == 0 {
            return Err(Error::Config("warm starts must have dimension >= 1".into()));
        }
        for (k, c) in centers.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::Config(format!(
                    "warm start {k} has dimension {}, expected {dim}",
                    c.dim()
                )));
            }
            if !c.is_finite() {
                return Err(Error::Config(format!("warm start {k} is not finite")));
            }
        }
        Ok(WarmStartSet { centers })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k]
    }

    /// Writes `g_{jj'}(x)` into `out`.
    pub fn teleport_into(&self, from: usize, to: usize, x: &[f64], out: &mut [f64]) {
        if from == to {
            out.copy_from_slice(x);
            return;
        }
        let (a, b) = (&self.centers[from], &self.centers[to]);
        for d in 0..x.len() {
            out[d] = x[d] - a[d] + b[d];
        }
    }

    pub fn teleport(&self, from: usize, to: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.teleport_into(from, to, x, &mut out);
        out
    }

    /// Index of the nearest warm start (smallest index on ties).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centers.iter().enumerate() {
            let d = squared_distance(x, c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

/// Strictly decreasing tilt strengths ending at exactly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TemperatureLadder {
    betas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TemperatureLadder {
    type Error = Error;

    fn try_from(betas: Vec<f64>) -> Result<Self> {
        TemperatureLadder::new(betas)
    }
}

impl From<TemperatureLadder> for Vec<f64> {
    fn from(l: TemperatureLadder) -> Self {
        l.betas
    }
}

impl TemperatureLadder {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Config("ladder needs at least one level".into()));
        }
        if betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::Config(
                "ladder entries must be finite and >= 0".into(),
            ));
        }
        if betas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("ladder must be strictly decreasing".into()));
        }
        if *betas.last().unwrap() != 0.0 {
            return Err(Error::Config(
                "the last ladder entry must be exactly 0".into(),
            ));
        }
        Ok(TemperatureLadder { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta(&self, level: usize) -> f64 {
        self.betas[level]
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

fn one() -> f64 {
    1.0
}

fn default_max_levels() -> usize {
    200
}

/// Inputs to the Gaussian-setting ladder rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub dim: usize,
    /// Lipschitz constant of the component log-density gradients.
    pub smoothness: f64,
    /// Log-Sobolev constant of the tilted components.
    pub log_sobolev: f64,
    /// Bound on the distance between a warm start and its mode.
    pub warm_start_distance: f64,
    /// Bound on the distance between a warm start and tilted component means.
    #[serde(default)]
    pub mean_displacement: f64,
    #[serde(default = "one")]
    pub c_beta1: f64,
    #[serde(default = "one")]
    pub c_dbeta: f64,
    #[serde(default = "default_max_levels")]
    pub max_levels: usize,
}

/// Arithmetic ladder from `β₁ = c_beta1·L²·D²·d` down to zero in steps of
/// `Δβ = c_dbeta / (C_LS·d + r²)`, with the last step snapped to 0.
pub fn build_ladder(spec: &LadderSpec) -> Result<TemperatureLadder> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if spec.dim == 0
        || !positive(spec.smoothness)
        || !positive(spec.log_sobolev)
        || !positive(spec.warm_start_distance)
        || !positive(spec.c_beta1)
        || !positive(spec.c_dbeta)
        || !(spec.mean_displacement.is_finite() && spec.mean_displacement >= 0.0)
    {
        return Err(Error::Config(format!("invalid ladder spec {spec:?}")));
    }
    let d = spec.dim as f64;
    let beta1 = spec.c_beta1 * spec.smoothness.powi(2) * spec.warm_start_distance.powi(2) * d;
    let dbeta = spec.c_dbeta / (spec.log_sobolev * d + spec.mean_displacement.powi(2));
    let steps = (beta1 / dbeta - 1e-9).ceil().max(1.0) as usize;
    let levels = steps + 1;
    if levels > spec.max_levels {
        return Err(Error::Config(format!(
            "ladder needs {levels} levels, more than max_levels = {}; increase c_dbeta for a larger step",
            spec.max_levels
        )));
    }
    let mut betas: Vec<f64> = (0..steps).map(|i| beta1 - i as f64 * dbeta).collect();
    betas.push(0.0);
    TemperatureLadder::new(betas)
}

/// Ladder, warm starts and the component/level weights of a tilted tempering run.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperingScheme {
    ladder: TemperatureLadder,
    warm_starts: WarmStartSet,
    w: Vec<Vec<f64>>,
    r: Vec<f64>,
    log_w: Vec<Vec<f64>>,
    log_r: Vec<f64>,
}

/// The `scheme.json` document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeDocument {
    pub betas: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

impl TemperingScheme {
    /// Builds a scheme from explicit weights; rows of `w` are rescaled to max 1 and `r` to sum 1.
    pub fn new(
        ladder: TemperatureLadder,
        warm_starts: WarmStartSet,
        w: Vec<Vec<f64>>,
        r: Vec<f64>,
    ) -> Result<Self> {
        let (l, m) = (ladder.len(), warm_starts.len());
        if w.len() != l || w.iter().any(|row| row.len() != m) {
            return Err(Error::Config(format!(
                "component weights must be a {l}x{m} matrix"
            )));
        }
        if r.len() != l {
            return Err(Error::Config(format!("expected {l} level weights")));
        }
        let bad = |v: &f64| !(v.is_finite() && *v > 0.0);
        if w.iter().flatten().any(bad) || r.iter().any(bad) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        let mut scheme = TemperingScheme {
            ladder,
            warm_starts,
            w,
            r,
            log_w: Vec::new(),
            log_r: Vec::new(),
        };
        for i in 0..l {
            let row: Vec<f64> = scheme.w[i].iter().map(|v| v.ln()).collect();
            scheme.set_log_component_weights(i, &row)?;
        }
        let lr: Vec<f64> = scheme.r.iter().map(|v| v.ln()).collect();
        scheme.set_log_level_weights(&lr)?;
        Ok(scheme)
    }

    /// All component and level weights equal.
    pub fn uniform(ladder: TemperatureLadder, warm_starts: WarmStartSet) -> Self {
        let (l, m) = (ladder.len(), warm_starts.len());
        TemperingScheme::new(ladder, warm_starts, vec![vec![1.0; m]; l], vec![1.0; l])
            .expect("uniform weights are valid")
    }

    pub fn ladder(&self) -> &TemperatureLadder {
        &self.ladder
    }

    pub fn warm_starts(&self) -> &WarmStartSet {
        &self.warm_starts
    }

    pub fn levels(&self) -> usize {
        self.ladder.len()
    }

    pub fn num_centers(&self) -> usize {
        self.warm_starts.len()
    }

    pub fn dim(&self) -> usize {
        self.warm_starts.dim()
    }

    pub fn beta(&self, level: usize) -> f64 {
        self.ladder.beta(level)
    }

    pub fn component_weights(&self, level: usize) -> &[f64] {
        &self.w[level]
    }

    pub fn log_component_weights(&self, level: usize) -> &[f64] {
        &self.log_w[level]
    }

    pub fn level_weights(&self) -> &[f64] {
        &self.r
    }

    pub fn log_level_weight(&self, level: usize) -> f64 {
        self.log_r[level]
    }

    /// Sets `w_{level,·}` from log values, canonically rescaled so the largest weight is 1.
    pub fn set_log_component_weights(&mut self, level: usize, log_w: &[f64]) -> Result<()> {
        if log_w.len() != self.num_centers() || log_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEstimate { level });
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
        if row.iter().any(|v| *v <= 0.0) {
            return Err(Error::Numeric(format!(
                "component weight underflow at level {level}"
            )));
        }
        self.log_w.resize(self.levels(), Vec::new());
        self.log_w[level] = row.iter().map(|v| v.ln()).collect();
        self.w[level] = row;
        Ok(())
    }

    /// Sets `r_0..r_{n-1}` (n = `log_r.len()`) from log values, rescaled to sum to 1 over that prefix.
    /// Entries beyond the prefix are left unchanged.
    pub fn set_log_level_weights(&mut self, log_r: &[f64]) -> Result<()> {
        if log_r.is_empty() || log_r.len() > self.levels() {
            return Err(Error::Config(
                "level weight prefix has invalid length".into(),
            ));
        }
        if let Some(level) = log_r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEstimate { level });
        }
        let total = log_sum_exp(log_r.iter().copied());
        self.log_r.resize(self.levels(), 0.0);
        for (i, v) in log_r.iter().enumerate() {
            let r = (v - total).exp();
            if r <= 0.0 {
                return Err(Error::Numeric(format!(
                    "level weight underflow at level {i}"
                )));
            }
            self.r[i] = r;
            self.log_r[i] = r.ln();
        }
        for i in log_r.len()..self.levels() {
            self.log_r[i] = self.r[i].ln();
        }
        Ok(())
    }

    /// `log Σ_k w_{i,k} q_i(x - x_k)`.
    pub fn log_tilt_mixture(&self, level: usize, x: &[f64]) -> f64 {
        let beta = self.beta(level);
        let lw = &self.log_w[level];
        log_sum_exp(
            self.warm_starts
                .centers
                .iter()
                .zip(lw)
                .map(|(c, w)| w + log_tilt(beta, x, c)),
        )
    }

    /// `log p̃_i(x) = log π(x) + log Σ_k w_{i,k} q_i(x - x_k)`, unnormalized.
    pub fn log_tempered_density(&self, target: &TargetModel, level: usize, x: &[f64]) -> f64 {
        target.log_density(x) + self.log_tilt_mixture(level, x)
    }

    pub fn to_document(&self) -> SchemeDocument {
        SchemeDocument {
            betas: self.ladder.betas().to_vec(),
            centers: self
                .warm_starts
                .centers
                .iter()
                .map(|c| c.0.clone())
                .collect(),
            w: self.w.clone(),
            r: self.r.clone(),
        }
    }

    pub fn from_document(doc: &SchemeDocument) -> Result<Self> {
        let ladder = TemperatureLadder::new(doc.betas.clone())?;
        let warm = WarmStartSet::new(doc.centers.iter().cloned().map(Point).collect())?;
        TemperingScheme::new(ladder, warm, doc.w.clone(), doc.r.clone())
    }
}

/// Coldest-level weights `w_{1,k} ∝ 1/π(x_k)`, rescaled so the largest is 1.
pub fn init_coldest_weights(target: &TargetModel, warm_starts: &WarmStartSet) -> Vec<f64> {
    let log_w: Vec<f64> = warm_starts
        .centers()
        .iter()
        .map(|c| -target.log_density(c))
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log_w.iter().map(|v| (v - max).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{make_gaussian_mixture, GaussianMixtureSpec};

    fn spec(d: usize) -> LadderSpec {
        LadderSpec {
            dim: d,
            smoothness: 1.0,
            log_sobolev: 1.0,
            warm_start_distance: 1.0,
            mean_displacement: 0.0,
            c_beta1: 1.0,
            c_dbeta: 1.0,
            max_levels: 200,
        }
    }

    fn mixture() -> TargetModel {
        make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-5.0], vec![5.0]],
            covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap()
    }

    fn warm(xs: &[f64]) -> WarmStartSet {
        WarmStartSet::new(xs.iter().map(|x| Point(vec![*x])).collect()).unwrap()
    }

    #[test]
    fn log_tilt_values() {
        assert_eq!(log_tilt(0.0, &[3.0, 4.0], &[0.0, 0.0]), 0.0);
        assert_eq!(log_tilt(2.0, &[1.0, 0.0], &[0.0, 0.0]), -1.0);
        assert_eq!(log_tilt(1.0, &[0.7, -0.2], &[0.7, -0.2]), 0.0);
    }

    #[test]
    fn plug_in_ladder() {
        let l = build_ladder(&spec(1)).unwrap();
        assert_eq!(l.betas(), &[1.0, 0.0]);
    }

    #[test]
    fn doubling_dimension_quadruples_levels() {
        let mut s = spec(1);
        s.warm_start_distance = 3.0;
        let a = build_ladder(&s).unwrap();
        s.dim = 2;
        let b = build_ladder(&s).unwrap();
        assert_eq!(b.beta(0), 2.0 * a.beta(0));
        assert_eq!(a.len() - 1, 9);
        assert_eq!(b.len() - 1, 36);
    }

    #[test]
    fn ladder_gaps_are_equal_except_final_snap() {
        let mut s = spec(1);
        s.warm_start_distance = 10.5f64.sqrt();
        s.c_dbeta = 1.0;
        let l = build_ladder(&s).unwrap();
        assert_eq!(l.len(), 12);
        let gaps: Vec<f64> = l.betas().windows(2).map(|w| w[0] - w[1]).collect();
        for g in &gaps[..gaps.len() - 1] {
            assert!((g - gaps[0]).abs() < 1e-12);
        }
        assert_eq!(*l.betas().last().unwrap(), 0.0);
    }

    #[test]
    fn ladder_respects_max_levels() {
        let mut s = spec(4);
        s.warm_start_distance = 10.0;
        s.max_levels = 10;
        let err = build_ladder(&s).unwrap_err();
        assert!(err.to_string().contains("c_dbeta"));
    }

    #[test]
    fn ladder_validation() {
        assert!(TemperatureLadder::new(vec![1.0, 1.0, 0.0]).is_err());
        assert!(TemperatureLadder::new(vec![2.0, 1.0]).is_err());
        assert!(TemperatureLadder::new(vec![]).is_err());
        assert!(TemperatureLadder::new(vec![0.0]).is_ok());
    }

    #[test]
    fn target_level_collapses_to_target_plus_log_m() {
        let t = mixture();
        let s = TemperingScheme::uniform(
            TemperatureLadder::new(vec![3.0, 0.0]).unwrap(),
            warm(&[-5.0, 5.0]),
        );
        for x in [-6.0, 0.0, 2.5] {
            let v = s.log_tempered_density(&t, 1, &[x]);
            assert!((v - t.log_density(&[x]) - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_tilt() {
        let t = mixture();
        let s = TemperingScheme::uniform(
            TemperatureLadder::new(vec![3.0, 0.0]).unwrap(),
            warm(&[1.0]),
        );
        let x = [2.5];
        let expect = t.log_density(&x) - 1.5 * 1.5 * 1.5;
        assert!((s.log_tempered_density(&t, 0, &x) - expect).abs() < 1e-12);
    }

    #[test]
    fn dominant_tilt_term() {
        let t = mixture();
        let ladder = TemperatureLadder::new(vec![2.0, 0.0]).unwrap();
        // Weight ratio e^-100 makes the second term negligible at x_1.
        let s = TemperingScheme::new(
            ladder,
            warm(&[0.0, 0.0]),
            vec![vec![1.0, (-100f64).exp()], vec![1.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let x = [0.3];
        let dominant = t.log_density(&x) + log_tilt(2.0, &x, &[0.0]);
        let v = s.log_tempered_density(&t, 0, &x);
        assert!((v - dominant).abs() < 1e-40);
    }

    #[test]
    fn coldest_weights() {
        let t = make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-3.0], vec![3.0]],
            covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap();
        let w = init_coldest_weights(&t, &warm(&[-3.0, 3.0]));
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);

        let f = TargetModel::from_fn(1, |x| if x[0] < 0.0 { 10f64.ln() } else { 0.0 }).unwrap();
        let w = init_coldest_weights(&f, &warm(&[-1.0, 1.0]));
        assert!((w[0] / w[1] - 0.1).abs() < 1e-12);

        assert_eq!(init_coldest_weights(&t, &warm(&[0.4])), vec![1.0]);
    }

    #[test]
    fn canonical_forms() {
        let s = TemperingScheme::new(
            TemperatureLadder::new(vec![1.0, 0.0]).unwrap(),
            warm(&[0.0, 1.0]),
            vec![vec![2.0, 4.0], vec![3.0, 3.0]],
            vec![1.0, 3.0],
        )
        .unwrap();
        assert_eq!(s.component_weights(0), &[0.5, 1.0]);
        assert_eq!(s.component_weights(1), &[1.0, 1.0]);
        assert!((s.level_weights()[0] - 0.25).abs() < 1e-15);
        let doc = s.to_document();
        assert_eq!(TemperingScheme::from_document(&doc).unwrap(), s);
    }

    #[test]
    fn translation_group_laws() {
        let ws = WarmStartSet::new(vec![
            Point(vec![0.0, 1.0]),
            Point(vec![-3.3, 2.0]),
            Point(vec![5.0, -7.25]),
        ])
        .unwrap();
        let x = [0.37, -1.9];
        for i in 0..3 {
            assert_eq!(ws.teleport(i, i, &x), x.to_vec());
            for j in 0..3 {
                let back = ws.teleport(j, i, &ws.teleport(i, j, &x));
                assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
                for k in 0..3 {
                    let two = ws.teleport(k, j, &ws.teleport(i, k, &x));
                    let one = ws.teleport(i, j, &x);
                    assert!(two.iter().zip(&one).all(|(a, b)| (a - b).abs() < 1e-12));
                }
            }
        }
    }
}
