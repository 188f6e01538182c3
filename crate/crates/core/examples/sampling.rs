//! Replicated target-level sampling with burn-in and thinning, written as JSONL.

use realps::diagnostics::ks_test;
use realps::record::{read_jsonl_file, write_jsonl_file};
use realps::runner::{sample_family, SamplingConfig, StartLevel};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{KernelConfig, ReAlps, TemperatureLadder, TemperingScheme, WarmStartSet};

pub fn run_example() -> realps::Result<usize> {
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-4.0], vec![4.0]],
        covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let warm = WarmStartSet::new(target.component_means())?;
    // Symmetric target: uniform component weights are already balanced.
    let scheme = TemperingScheme::new(
        TemperatureLadder::new(vec![4.0, 1.0, 0.0])?,
        warm.clone(),
        vec![vec![1.0, 1.0]; 3],
        vec![0.2, 0.3, 0.5],
    )?;
    let family = ReAlps::new(&scheme, &target)?;
    let sampling = SamplingConfig {
        duration: 2000.0,
        burn_in: 100.0,
        thinning: 10,
        start_level: StartLevel::Coldest,
    };
    let starts: Vec<Vec<f64>> = warm.centers().iter().map(|c| c.0.clone()).collect();
    let run = sample_family(
        &family,
        &KernelConfig::default(),
        &sampling,
        &starts,
        &[1, 2, 3, 4],
    )?;

    let dir = std::env::temp_dir().join("realps-sampling-example");
    std::fs::create_dir_all(&dir).map_err(|e| realps::Error::Config(e.to_string()))?;
    let path = dir.join("samples.jsonl");
    write_jsonl_file(&path, &run.batch, Some("re_alps"))?;
    let back = read_jsonl_file(&path)?;
    assert_eq!(back.len(), run.batch.len());

    let xs: Vec<f64> = run.batch.samples.iter().map(|s| s.x[0]).collect();
    let ks = ks_test(&xs, |x| target.cdf_1d(x).unwrap());
    println!(
        "{} samples in {}, K-S statistic {:.4} (p = {:.3})",
        xs.len(),
        path.display(),
        ks.statistic,
        ks.p_value
    );
    Ok(xs.len())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
