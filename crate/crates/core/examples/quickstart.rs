//! Train weights on a two-mode mixture with unequal widths, then sample it.
//!
//! `cargo run --release --example quickstart`

use realps::diagnostics::{mode_occupancy, occupancy_error};
use realps::learning::{train, LearningConfig};
use realps::record::LevelSampler;
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::tilting::init_coldest_weights;
use realps::{
    simulate, ChainState, KernelConfig, ReAlps, TemperatureLadder, TemperingScheme, WarmStartSet,
};

pub fn run_example() -> realps::Result<f64> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-5.0], vec![5.0]],
        covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let warm = WarmStartSet::new(target.component_means())?;
    let ladder = TemperatureLadder::new(vec![1000.0, 100.0, 10.0, 1.0, 0.1, 0.0])?;

    let mut scheme = TemperingScheme::uniform(ladder, warm.clone());
    let w0: Vec<f64> = init_coldest_weights(&target, &warm)
        .iter()
        .map(|w| w.ln())
        .collect();
    scheme.set_log_component_weights(0, &w0)?;

    let kernel = KernelConfig {
        rwm_step_scale: 2.0,
        ..KernelConfig::default()
    };
    let learning = LearningConfig {
        samples: 2000,
        stage_duration: 1000.0,
        ..LearningConfig::default()
    };
    let (trained, _trace) = train(&scheme, &target, &kernel, &learning)?;
    println!("level weights r = {:?}", trained.level_weights());

    let family = ReAlps::new(&trained, &target)?;
    let target_level = trained.levels() - 1;
    let mut rec = LevelSampler::new(target_level, 200.0, 1, 7);
    simulate(
        &family,
        &kernel.with_seed(7),
        ChainState::new(vec![-5.0], 0),
        4000.0,
        &mut rec,
    )?;

    let occ = mode_occupancy(&rec.batch, &warm, target_level)?;
    let err = occupancy_error(&occ, &target.weights());
    println!(
        "{} target-level samples, mode occupancy {occ:?}, error {err:.3}",
        rec.batch.len()
    );
    Ok(err)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
