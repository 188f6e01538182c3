use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Axis, QuadratureGrid};
use crate::record::SampleBatch;
use crate::target::TargetModel;
use crate::tilting::{log_tilt, TemperingScheme};

/// Below this many samples a TV estimate is flagged as low confidence.
pub const MIN_TV_SAMPLES: usize = 1000;

/// Smallest normalized node mass of `p` that must be covered by `q`.
const COVERAGE_MASS: f64 = 1e-12;
/// `exp` underflows to zero below this.
const LOG_UNDERFLOW: f64 = -745.0;

/// `χ²(p ‖ q) = ∫ p²/q - 1` for quadrature-normalized `p` and `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    /// Finite value, or `f64::INFINITY` when `infinite` is set.
    pub value: f64,
    /// `q` vanishes where `p` has mass, or the integrand is cut off by the grid.
    pub infinite: bool,
    /// The grid was flagged coarse or truncating for `p` or `q`.
    pub grid_warning: bool,
}

impl ChiSquare {
    pub fn is_finite(&self) -> bool {
        !self.infinite
    }
}

/// χ² between two unnormalized log-densities evaluated on `grid`.
pub fn chi_square_on_grid<P, Q>(log_p: P, log_q: Q, grid: &QuadratureGrid) -> ChiSquare
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
{
    let vp = grid.evaluate(log_p);
    let vq = grid.evaluate(log_q);
    let zp = grid.integrate_log_values(&vp);
    let zq = grid.integrate_log_values(&vq);
    let grid_warning = zp.has_warning() || zq.has_warning();
    let uncovered = vp.iter().zip(&vq).any(|(p, q)| {
        (p - zp.log_z).exp() > COVERAGE_MASS && (q - zq.log_z < LOG_UNDERFLOW || !q.is_finite())
    });
    let integrand: Vec<f64> = vp.iter().zip(&vq).map(|(p, q)| 2.0 * p - q).collect();
    let est = grid.integrate_log_values(&integrand);
    if uncovered || est.truncated || !est.log_z.is_finite() {
        return ChiSquare {
            value: f64::INFINITY,
            infinite: true,
            grid_warning,
        };
    }
    let value = (est.log_z - 2.0 * zp.log_z + zq.log_z).exp() - 1.0;
    ChiSquare {
        value: value.max(0.0),
        infinite: false,
        grid_warning,
    }
}

/// χ² of tilt `l + 1` against tilt `l` around warm start `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyChiSquare {
    /// Whole-target tilts `π(x) q(x - x_k)`.
    pub barred: ChiSquare,
    /// Component tilts `α_k π_k(x) q(x - x_k)`, when the target exposes component `k`.
    pub component: Option<ChiSquare>,
}

pub fn adjacency_chi_square(
    scheme: &TemperingScheme,
    target: &TargetModel,
    level: usize,
    k: usize,
    grid: &QuadratureGrid,
) -> Result<AdjacencyChiSquare> {
    if target.dim() > 2 {
        return Err(Error::UnsupportedDimension { dim: target.dim() });
    }
    if level + 1 >= scheme.levels() || k >= scheme.num_centers() {
        return Err(Error::Config(format!(
            "no adjacent pair at level {level}, center {k}"
        )));
    }
    let center = scheme.warm_starts().center(k);
    let (b0, b1) = (scheme.beta(level), scheme.beta(level + 1));
    let barred = chi_square_on_grid(
        |x| target.log_density(x) + log_tilt(b1, x, center),
        |x| target.log_density(x) + log_tilt(b0, x, center),
        grid,
    );
    let component = (target.has_components() && k < target.num_components()).then(|| {
        chi_square_on_grid(
            |x| target.weighted_component_log_density(k, x) + log_tilt(b1, x, center),
            |x| target.weighted_component_log_density(k, x) + log_tilt(b0, x, center),
            grid,
        )
    });
    Ok(AdjacencyChiSquare { barred, component })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub samples: usize,
    pub bins: usize,
    /// Fraction of samples outside the grid.
    pub outside: f64,
    pub low_confidence: bool,
}

/// Sub-nodes per axis used to integrate the target over one histogram cell.
const CELL_NODES: usize = 9;

/// Histogram TV distance between the samples at `level` and the target, with
/// the grid cells as bins.
pub fn tv_estimate(
    batch: &SampleBatch,
    level: usize,
    target: &TargetModel,
    grid: &QuadratureGrid,
) -> Result<TvEstimate> {
    if target.dim() > 2 {
        return Err(Error::UnsupportedDimension { dim: target.dim() });
    }
    if grid.dim() != target.dim() {
        return Err(Error::Config("grid and target dimensions differ".into()));
    }
    let cells: Vec<usize> = grid.axes.iter().map(|a| a.points - 1).collect();
    let bins: usize = cells.iter().product();
    let mut masses = vec![0.0; bins];
    let mut log_masses = vec![0.0; bins];
    for (b, lm) in log_masses.iter_mut().enumerate() {
        let idx = cell_index(&cells, b);
        let axes = grid
            .axes
            .iter()
            .zip(&idx)
            .map(|(a, i)| Axis {
                lo: a.node(*i),
                hi: a.node(i + 1),
                points: CELL_NODES,
            })
            .collect();
        *lm = QuadratureGrid::new(axes)?
            .log_integrate(|x| target.log_density(x))
            .log_z;
    }
    let max = log_masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_masses.iter().map(|v| (v - max).exp()).sum();
    for (m, lm) in masses.iter_mut().zip(&log_masses) {
        *m = (lm - max).exp() / total;
    }

    let mut hist = vec![0usize; bins];
    let mut outside = 0usize;
    let mut n = 0usize;
    for s in batch.at_level(level) {
        n += 1;
        match locate(grid, &s.x) {
            Some(b) => hist[b] += 1,
            None => outside += 1,
        }
    }
    if n == 0 {
        return Err(Error::Config(format!("no samples at level {}", level + 1)));
    }
    let nf = n as f64;
    let diff: f64 = hist
        .iter()
        .zip(&masses)
        .map(|(h, m)| (*h as f64 / nf - m).abs())
        .sum();
    let outside = outside as f64 / nf;
    Ok(TvEstimate {
        tv: 0.5 * (diff + outside),
        samples: n,
        bins,
        outside,
        low_confidence: n < MIN_TV_SAMPLES,
    })
}

fn cell_index(cells: &[usize], flat: usize) -> Vec<usize> {
    let mut idx = vec![0; cells.len()];
    let mut rem = flat;
    for d in (0..cells.len()).rev() {
        idx[d] = rem % cells[d];
        rem /= cells[d];
    }
    idx
}

fn locate(grid: &QuadratureGrid, x: &[f64]) -> Option<usize> {
    let mut flat = 0;
    for (a, v) in grid.axes.iter().zip(x) {
        if !(*v >= a.lo && *v <= a.hi) {
            return None;
        }
        let cells = a.points - 1;
        let i = (((v - a.lo) / a.step()) as usize).min(cells - 1);
        flat = flat * cells + i;
    }
    Some(flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::chain_rng;
    use crate::record::Sample;
    use crate::target::{make_gaussian_mixture, GaussianMixtureSpec};

    fn normal_log(v: f64) -> impl Fn(&[f64]) -> f64 {
        move |x| -0.5 * x[0] * x[0] / v - 0.5 * v.ln()
    }

    #[test]
    fn identical_densities_have_zero_divergence() {
        let grid = QuadratureGrid::cube(1, -12.0, 12.0, 2001).unwrap();
        let c = chi_square_on_grid(normal_log(1.0), normal_log(1.0), &grid);
        assert!(c.value.abs() < 1e-8 && !c.infinite);
    }

    #[test]
    fn gaussian_closed_form() {
        let grid = QuadratureGrid::cube(1, -15.0, 15.0, 3001).unwrap();
        let s2: f64 = 1.2;
        let c = chi_square_on_grid(normal_log(1.0), normal_log(s2), &grid);
        let exact = s2 / (2.0 * s2 - 1.0).sqrt() - 1.0;
        assert!((c.value - exact).abs() < 1e-4, "{} vs {exact}", c.value);
    }

    #[test]
    fn asymmetric_in_arguments() {
        let grid = QuadratureGrid::cube(1, -15.0, 15.0, 3001).unwrap();
        let a = chi_square_on_grid(normal_log(1.0), normal_log(1.5), &grid);
        let b = chi_square_on_grid(normal_log(1.5), normal_log(1.0), &grid);
        assert!((a.value - b.value).abs() > 1e-3);
    }

    #[test]
    fn light_tailed_reference_is_infinite() {
        // q = N(0, 0.3) cannot cover p = N(0, 1): the integrand grows toward the boundary.
        let grid = QuadratureGrid::cube(1, -15.0, 15.0, 3001).unwrap();
        let c = chi_square_on_grid(normal_log(1.0), normal_log(0.3), &grid);
        assert!(c.infinite);
        assert_eq!(c.value, f64::INFINITY);
    }

    fn two_mode() -> TargetModel {
        make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-5.0], vec![5.0]],
            covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap()
    }

    fn batch(xs: Vec<f64>) -> SampleBatch {
        SampleBatch {
            samples: xs
                .into_iter()
                .map(|x| Sample {
                    t: 0.0,
                    level: 0,
                    x: vec![x],
                    event: None,
                })
                .collect(),
            seeds: vec![0],
        }
    }

    #[test]
    fn iid_samples_have_small_tv() {
        let t = two_mode();
        let grid = QuadratureGrid::cube(1, -10.0, 10.0, 41).unwrap();
        let mut rng = chain_rng(1);
        let n = 20_000;
        let xs = (0..n)
            .map(|_| t.sample(&mut rng).unwrap().1 .0[0])
            .collect();
        let est = tv_estimate(&batch(xs), 0, &t, &grid).unwrap();
        let bound = 2.0 * (est.bins as f64 / n as f64).sqrt();
        assert!(est.tv <= bound, "{} > {bound}", est.tv);
        assert!(!est.low_confidence);
    }

    #[test]
    fn one_mode_only_misses_other_mass() {
        let t = two_mode();
        let grid = QuadratureGrid::cube(1, -10.0, 10.0, 81).unwrap();
        let mut rng = chain_rng(2);
        let xs: Vec<f64> = std::iter::repeat_with(|| t.sample(&mut rng).unwrap())
            .filter(|(k, _)| *k == 0)
            .take(20_000)
            .map(|(_, x)| x.0[0])
            .collect();
        let est = tv_estimate(&batch(xs), 0, &t, &grid).unwrap();
        assert!((est.tv - 0.5).abs() < 0.03, "{}", est.tv);
    }

    #[test]
    fn small_batches_are_flagged() {
        let t = two_mode();
        let grid = QuadratureGrid::cube(1, -10.0, 10.0, 41).unwrap();
        let est = tv_estimate(&batch(vec![-5.0, 5.0, 0.1]), 0, &t, &grid).unwrap();
        assert!(est.low_confidence);
        assert!(tv_estimate(&batch(vec![]), 0, &t, &grid).is_err());
    }
}
