use crate::error::{Error, Result};
use crate::record::SampleBatch;
use crate::tilting::WarmStartSet;

/// Nearest-warm-start index of every sample at `level`.
pub fn mode_assignments(
    batch: &SampleBatch,
    warm_starts: &WarmStartSet,
    level: usize,
) -> Vec<usize> {
    batch
        .at_level(level)
        .map(|s| warm_starts.nearest(&s.x))
        .collect()
}

/// Fraction of samples at `level` closest to each warm start.
pub fn mode_occupancy(
    batch: &SampleBatch,
    warm_starts: &WarmStartSet,
    level: usize,
) -> Result<Vec<f64>> {
    let assigned = mode_assignments(batch, warm_starts, level);
    if assigned.is_empty() {
        return Err(Error::Config(format!("no samples at level {}", level + 1)));
    }
    let mut counts = vec![0usize; warm_starts.len()];
    for k in &assigned {
        counts[*k] += 1;
    }
    let n = assigned.len() as f64;
    Ok(counts.iter().map(|c| *c as f64 / n).collect())
}

/// `max_k |occupancy_k - α_k|`.
pub fn occupancy_error(occupancy: &[f64], weights: &[f64]) -> f64 {
    occupancy
        .iter()
        .zip(weights)
        .map(|(o, a)| (o - a).abs())
        .fold(0.0, f64::max)
}

/// Fraction of samples at each of `levels` levels.
pub fn level_occupancy(batch: &SampleBatch, levels: usize) -> Vec<f64> {
    let counts = batch.level_counts(levels);
    let n: usize = counts.iter().sum();
    counts.iter().map(|c| *c as f64 / n.max(1) as f64).collect()
}
