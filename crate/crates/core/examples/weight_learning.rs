//! Level-by-level weight learning, with the balance it achieves checked by quadrature.

use realps::diagnostics::balance_report;
use realps::learning::{train, LearningConfig, WeightTrace};
use realps::quadrature::QuadratureGrid;
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::tilting::init_coldest_weights;
use realps::{KernelConfig, TemperatureLadder, TemperingScheme, WarmStartSet};

pub fn run_example() -> realps::Result<WeightTrace> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-5.0], vec![5.0]],
        covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let warm = WarmStartSet::new(target.component_means())?;
    let ladder = TemperatureLadder::new(vec![1000.0, 100.0, 10.0, 1.0, 0.1, 0.0])?;
    let mut initial = TemperingScheme::uniform(ladder, warm.clone());
    let w0: Vec<f64> = init_coldest_weights(&target, &warm)
        .iter()
        .map(|w| w.ln())
        .collect();
    initial.set_log_component_weights(0, &w0)?;

    let kernel = KernelConfig {
        rwm_step_scale: 2.0,
        ..KernelConfig::default()
    };
    let cfg = LearningConfig {
        samples: 2000,
        stage_duration: 1000.0,
        seed: 11,
        ..LearningConfig::default()
    };
    let (trained, trace) = train(&initial, &target, &kernel, &cfg)?;
    for lt in &trace.levels {
        println!(
            "level {}: w = {:?}, r_hat = {:.4e}, occupancy before rebalancing {:?}",
            lt.level, lt.component.weights, lt.level_weight.weight, lt.rebalance_counts
        );
    }

    let grid = QuadratureGrid::cube(1, -25.0, 35.0, 6001)?;
    let before = balance_report(&initial, &target, &grid)?;
    let after = balance_report(&trained, &target, &grid)?;
    println!(
        "component balance: {:.2} untrained, {:.2} trained",
        before.h1_max, after.h1_max
    );
    println!(
        "level balance:     {:.2} untrained, {:.2} trained",
        before.h2_ratio, after.h2_ratio
    );
    Ok(trace)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
