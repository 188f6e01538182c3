//! Monte Carlo checks against closed forms and quadrature.

use realps::diagnostics::{balance_report, ks_test, level_occupancy};
use realps::learning::{
    estimate_component_weights, estimate_level_weight, run_stage, LearningConfig,
};
use realps::quadrature::QuadratureGrid;
use realps::record::{EventCounts, GridSampler};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{
    simulate, ChainState, KernelConfig, ReAlps, TargetModel, TemperatureLadder, TemperingScheme,
    WarmStartSet,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn normal() -> TargetModel {
    make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![0.0]],
        covariances: vec![vec![vec![1.0]]],
        weights: vec![1.0],
    })
    .unwrap()
}

fn unequal_pair() -> TargetModel {
    make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-3.0], vec![3.0]],
        covariances: vec![vec![vec![0.5]], vec![vec![2.0]]],
        weights: vec![0.3, 0.7],
    })
    .unwrap()
}

fn kernel(seed: u64) -> KernelConfig {
    KernelConfig {
        lambda_swap: 1.0,
        gamma_leap: 1.0,
        rwm_step_scale: 2.0,
        steps_per_unit_time: 10,
        seed,
        teleport: true,
    }
}

fn scheme(target: &TargetModel, betas: Vec<f64>) -> TemperingScheme {
    TemperingScheme::uniform(
        TemperatureLadder::new(betas).unwrap(),
        WarmStartSet::new(target.component_means()).unwrap(),
    )
}

#[test]
fn swap_events_arrive_at_rate_lambda() {
    let target = normal();
    let s = scheme(&target, vec![1.0, 0.0]);
    let family = ReAlps::new(&s, &target).unwrap();
    let (seeds, t) = (50u64, 200.0);
    let total: u64 = (0..seeds)
        .map(|seed| {
            let mut counts = EventCounts::default();
            simulate(
                &family,
                &kernel(seed),
                ChainState::new(vec![0.0], 0),
                t,
                &mut counts,
            )
            .unwrap();
            counts.swap_proposals()
        })
        .sum();
    let mean = total as f64 / seeds as f64;
    assert!(
        (mean - t).abs() <= 4.0 * (t / seeds as f64).sqrt(),
        "mean swaps {mean}"
    );
}

#[test]
fn level_marginal_is_proportional_to_weighted_partition_functions() {
    let target = unequal_pair();
    let mut s = scheme(&target, vec![4.0, 1.0, 0.0]);
    s.set_log_level_weights(&[0.0, (0.5f64).ln(), (2.0f64).ln()])
        .unwrap();
    let grid = QuadratureGrid::cube(1, -20.0, 20.0, 4001).unwrap();
    let report = balance_report(&s, &target, &grid).unwrap();
    let mass: Vec<f64> = (0..3)
        .map(|i| (s.log_level_weight(i) + report.log_z_level[i]).exp())
        .collect();
    let total: f64 = mass.iter().sum();

    let family = ReAlps::new(&s, &target).unwrap();
    let mut rec = GridSampler::new(10.0, 0.5, 40_000, 4);
    simulate(
        &family,
        &kernel(4),
        ChainState::new(vec![-3.0], 0),
        20_010.0,
        &mut rec,
    )
    .unwrap();
    let occ = level_occupancy(&rec.batch, 3);
    for i in 0..3 {
        let want = mass[i] / total;
        assert!(
            (occ[i] - want).abs() < 0.03,
            "level {i}: {} vs {want}",
            occ[i]
        );
    }
}

#[test]
fn level_weight_matches_gaussian_closed_form() {
    // r̂_1 = r_0 Z_0 / Z_1 with Z_i = ∫ φ(x) exp(-β_i x² / 2) dx = (1 + β_i)^(-1/2).
    let target = normal();
    let s = scheme(&target, vec![3.0, 0.0]);
    let cfg = LearningConfig {
        samples: 4000,
        stage_duration: 4000.0,
        seed: 8,
        ..LearningConfig::default()
    };
    let (batch, _) = run_stage(&s, &target, &kernel(0), &cfg, 1, &[0]).unwrap();
    let est = estimate_level_weight(&batch, &s, 0, 1).unwrap();
    let exact = s.log_level_weight(0).exp() * (1.0f64 / 4.0).sqrt();
    assert!(
        (est.weight / exact - 1.0).abs() < 0.1,
        "{} vs {exact}",
        est.weight
    );
}

#[test]
fn estimator_means_match_quadrature() {
    let target = unequal_pair();
    let s = scheme(&target, vec![8.0, 2.0, 0.0]);
    let grid = QuadratureGrid::cube(1, -20.0, 20.0, 4001).unwrap();
    let report = balance_report(&s, &target, &grid).unwrap();
    let n = 2000;
    let exact_level = (s.log_level_weight(0) + report.log_z_level[0] - report.log_z_level[1]).exp();
    // Raw component means estimate Z̄_{1,k} / (r_0 Z_0).
    let exact_means: Vec<f64> = report.log_z_bar[1]
        .iter()
        .map(|z| (z - s.log_level_weight(0) - report.log_z_level[0]).exp())
        .collect();
    let (mut level_sum, mut w_sum): (f64, Vec<f64>) = (0.0, vec![0.0; 2]);
    for seed in 0..20u64 {
        let cfg = LearningConfig {
            samples: n,
            stage_duration: 2000.0,
            seed,
            ..LearningConfig::default()
        };
        let (batch, _) = run_stage(&s, &target, &kernel(0), &cfg, 1, &[0]).unwrap();
        level_sum += estimate_level_weight(&batch, &s, 0, 1).unwrap().weight;
        let est = estimate_component_weights(&batch, &s, 0, 1).unwrap();
        for (sum, m) in w_sum.iter_mut().zip(&est.log_means) {
            *sum += m.exp();
        }
    }
    let tol = 3.0 / (n as f64).sqrt();
    let level = level_sum / 20.0;
    assert!(
        (level / exact_level - 1.0).abs() < tol,
        "{level} vs {exact_level}"
    );
    for k in 0..2 {
        let w = w_sum[k] / 20.0;
        assert!(
            (w / exact_means[k] - 1.0).abs() < tol,
            "component {k}: {w} vs {}",
            exact_means[k]
        );
    }
}

#[test]
fn target_level_passes_ks_on_a_single_gaussian() {
    let target = normal();
    let s = scheme(&target, vec![2.0, 0.0]);
    let family = ReAlps::new(&s, &target).unwrap();
    let mut rec = GridSampler::new(10.0, 3.0, 20_000, 2);
    simulate(
        &family,
        &kernel(2),
        ChainState::new(vec![0.0], 0),
        60_020.0,
        &mut rec,
    )
    .unwrap();
    let xs: Vec<f64> = rec.batch.at_level(1).map(|s| s.x[0]).collect();
    assert!(xs.len() > 5000);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let ks = ks_test(&xs, |x| n01.cdf(x));
    assert!(ks.p_value > 0.01, "{ks:?}");
}
