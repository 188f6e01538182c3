//! Hessian-adjusted tempering with exact mode information, as a baseline.

use realps::diagnostics::{mode_occupancy, occupancy_error};
use realps::hat::{hat_log_density, modal_allocation, HATModel, HatFamily};
use realps::record::{EventCounts, LevelSampler};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{simulate, ChainState, KernelConfig, WarmStartSet};

pub fn run_example() -> realps::Result<f64> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-5.0], vec![5.0]],
        covariances: vec![vec![vec![0.25]], vec![vec![4.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let model = HATModel::from_target(&target)?;
    for beta in [1.0, 4.0, 64.0] {
        println!(
            "beta {beta:>4}: allocation of x = 0 -> mode {}, log density {:.3}",
            modal_allocation(&model, &[0.0], beta),
            hat_log_density(&model, &[0.0], beta)
        );
    }

    let family = HatFamily::new(model, vec![64.0, 16.0, 4.0, 1.0])?;
    let kernel = KernelConfig {
        rwm_step_scale: 2.0,
        teleport: false,
        ..KernelConfig::default()
    };
    let mut rec = (LevelSampler::new(3, 200.0, 1, 5), EventCounts::default());
    simulate(
        &family,
        &kernel.with_seed(5),
        ChainState::new(vec![-5.0], 0),
        3000.0,
        &mut rec,
    )?;
    let (samples, counts) = rec;
    let warm = WarmStartSet::new(target.component_means())?;
    let occ = mode_occupancy(&samples.batch, &warm, 3)?;
    let err = occupancy_error(&occ, &target.weights());
    println!(
        "occupancy {occ:?}, error {err:.3}, independence acceptance {:.3}",
        counts.leap_acceptance().unwrap_or(0.0)
    );
    Ok(err)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
