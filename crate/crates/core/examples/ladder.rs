//! Building a temperature ladder from smoothness constants and checking adjacent levels stay close.

use realps::diagnostics::adjacency_chi_square;
use realps::quadrature::QuadratureGrid;
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::tilting::{build_ladder, LadderSpec};
use realps::{TemperingScheme, WarmStartSet};

pub fn run_example() -> realps::Result<f64> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-4.0], vec![4.0]],
        covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let spec = LadderSpec {
        dim: 1,
        smoothness: 1.0,
        log_sobolev: 1.0,
        warm_start_distance: 2.0,
        mean_displacement: 0.0,
        c_beta1: 1.0,
        c_dbeta: 0.5,
        max_levels: 64,
    };
    let ladder = build_ladder(&spec)?;
    println!("betas {:?}", ladder.betas());
    let scheme = TemperingScheme::uniform(ladder, WarmStartSet::new(target.component_means())?);
    let grid = QuadratureGrid::cube(1, -20.0, 20.0, 4001)?;
    // Per component: the whole-target tilt also carries the far mode, which is not close at all.
    let mut worst: f64 = 0.0;
    for l in 0..scheme.levels() - 1 {
        for k in 0..scheme.num_centers() {
            let chi = adjacency_chi_square(&scheme, &target, l, k, &grid)?;
            worst = worst.max(chi.component.map_or(f64::INFINITY, |c| c.value));
        }
    }
    println!("largest adjacent component chi2: {worst:.4}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
