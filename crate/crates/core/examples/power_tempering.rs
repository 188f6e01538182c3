//! The naive control: simulated tempering over powers of the target, no teleports, uniform weights.

use realps::baseline::PowerTempering;
use realps::diagnostics::{level_occupancy, mode_occupancy, occupancy_error};
use realps::record::{AllStates, LevelSampler};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{simulate, ChainState, KernelConfig, WarmStartSet};

pub fn run_example() -> realps::Result<Vec<f64>> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-5.0], vec![5.0]],
        covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let powers = vec![0.001, 0.01, 0.03, 0.1, 0.3, 1.0];
    let family = PowerTempering::new(powers, &target)?;
    let kernel = KernelConfig {
        rwm_step_scale: 2.0,
        teleport: false,
        ..KernelConfig::default()
    };
    let mut rec = (LevelSampler::new(5, 200.0, 1, 9), AllStates::new(9));
    simulate(
        &family,
        &kernel.with_seed(9),
        ChainState::new(vec![-5.0], 0),
        3000.0,
        &mut rec,
    )?;
    let (target_level, all) = rec;

    // Without reweighting the hottest power holds most of the mass.
    let occ_levels = level_occupancy(&all.batch, 6);
    println!("time at each level (hot to target): {occ_levels:.3?}");
    let warm = WarmStartSet::new(target.component_means())?;
    let occ = mode_occupancy(&target_level.batch, &warm, 5)?;
    println!(
        "{} target-level samples, occupancy error {:.3}",
        target_level.batch.len(),
        occupancy_error(&occ, &target.weights())
    );
    Ok(occ_levels)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
