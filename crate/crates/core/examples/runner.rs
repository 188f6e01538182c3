//! The config-driven runner: train, sample, compare and diagnose into an output directory.
//!
//! The same JSON config works with the `realps` binary:
//! `realps compare --config run.json --out results`.

use realps::runner::{cmd_compare, cmd_diagnose, cmd_sample, cmd_train, ComparisonRow, RunConfig};

pub const CONFIG: &str = r#"{
  "target": {"type": "gaussian_mixture", "means": [[-5.0], [5.0]],
             "covariances": [[[0.25]], [[4.0]]], "weights": [0.5, 0.5]},
  "ladder": {"betas": [1000.0, 100.0, 10.0, 1.0, 0.1, 0.0]},
  "kernel": {"lambda_swap": 1.0, "gamma_leap": 1.0, "rwm_step_scale": 2.0, "steps_per_unit_time": 10},
  "learning": {"samples": 2000, "stage_duration": 1000.0},
  "sampling": {"duration": 2000.0, "burn_in": 200.0},
  "schemes": ["re_alps", "hat_alps", "naive_power_tempering"],
  "hat": {"betas": [64.0, 16.0, 4.0, 1.0]},
  "power": {"powers": [0.001, 0.01, 0.03, 0.1, 0.3, 1.0]},
  "grid": {"lo": [-25.0], "hi": [35.0], "points": 601},
  "replicas": 2
}"#;

pub fn run_example() -> realps::Result<Vec<ComparisonRow>> {
    let out = std::env::temp_dir().join("realps-runner-example");
    let config = RunConfig::from_json(CONFIG)?.with_overrides(Some(1), None, Some(out.clone()));

    let trained = cmd_train(&config)?;
    println!("trained, manifest hash {}", trained.manifest.config_sha256);
    let sampled = cmd_sample(&config)?;
    println!(
        "{} samples, occupancy error {:.3}",
        sampled.summary.samples, sampled.summary.occupancy_error
    );
    let diag = cmd_diagnose(&config)?;
    if let Some(b) = &diag.balance {
        println!(
            "H1 {:.2} (uniform {:.2})",
            b.trained.h1_max, b.uniform.h1_max
        );
    }

    let compare = config.with_overrides(None, None, Some(out.join("compare")));
    let rows = cmd_compare(&compare)?.rows;
    for r in &rows {
        println!("{:<22} {:?}", r.scheme.as_str(), r.occupancy_error);
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
