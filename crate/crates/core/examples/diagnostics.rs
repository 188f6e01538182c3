//! Quadrature oracles: balance constants, adjacent-level χ², the projected-chain gap and TV.

use realps::diagnostics::{
    adjacency_chi_square, balance_report, projected_spectral_gap, tv_estimate, ProjectionRates,
};
use realps::kernels::chain_rng;
use realps::quadrature::QuadratureGrid;
use realps::record::{Sample, SampleBatch};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{TemperatureLadder, TemperingScheme, WarmStartSet};

pub fn run_example() -> realps::Result<f64> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-5.0], vec![5.0]],
        covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let scheme = TemperingScheme::uniform(
        TemperatureLadder::new(vec![100.0, 10.0, 1.0, 0.0])?,
        WarmStartSet::new(target.component_means())?,
    );
    let grid = QuadratureGrid::cube(1, -25.0, 35.0, 6001)?;

    let balance = balance_report(&scheme, &target, &grid)?;
    println!(
        "uniform weights: H1 per level {:.2?}, H2 {:.2}",
        balance.h1_ratios, balance.h2_ratio
    );

    for l in 0..scheme.levels() - 1 {
        let chi = adjacency_chi_square(&scheme, &target, l, 1, &grid)?;
        let c = chi.component.expect("built-in mixture");
        println!(
            "chi2 of the wide component, level {} -> {}: {}",
            l + 2,
            l + 1,
            if c.infinite {
                "infinite".to_string()
            } else {
                format!("{:.4}", c.value)
            }
        );
    }

    let rates = ProjectionRates {
        lambda_swap: 1.0,
        gamma_leap: 1.0,
    };
    let (gap, chain) = projected_spectral_gap(&scheme, &target, &grid, rates)?;
    println!(
        "projected chain on {} cells, gap {gap:.4e}",
        chain.transition.nrows()
    );

    // Exact draws give a TV near the binning floor.
    let mut rng = chain_rng(1);
    let samples = (0..5000)
        .map(|i| {
            let (_, x) = target.sample(&mut rng)?;
            Ok(Sample {
                t: i as f64,
                level: 0,
                x: x.0,
                event: None,
            })
        })
        .collect::<realps::Result<Vec<_>>>()?;
    let batch = SampleBatch {
        samples,
        seeds: vec![1],
    };
    let coarse = QuadratureGrid::cube(1, -25.0, 35.0, 121)?;
    let tv = tv_estimate(&batch, 0, &target, &coarse)?;
    println!("TV of 5000 exact draws: {:.3}", tv.tv);
    Ok(gap)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
