use serde::{Deserialize, Serialize};

use crate::diagnostics::{level_occupancy, mode_occupancy, TvEstimate};
use crate::record::{EventCounts, SampleBatch};
use crate::tilting::WarmStartSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub samples: usize,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Asymptotic Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, converges quickly for small λ.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * c).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sn = nf.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    KsResult {
        statistic: d,
        samples: n,
        p_value: kolmogorov_pvalue(lambda),
    }
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k` with Sokal's automatic window (c = 5).
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let max_lag = (n / 2).min(20_000);
    let mut tau = 1.0;
    for lag in 1..max_lag {
        let c: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

pub fn effective_sample_size(series: &[f64]) -> f64 {
    series.len() as f64 / integrated_autocorrelation_time(series)
}

/// Summary of one run: occupancies, acceptance rates and level autocorrelation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub level_occupancy: Vec<f64>,
    /// Per level, nearest-warm-start occupancy (absent for unvisited levels).
    pub mode_occupancy: Vec<Option<Vec<f64>>>,
    pub rwm_acceptance: Option<f64>,
    pub swap_acceptance: Option<f64>,
    pub leap_acceptance: Option<f64>,
    pub level_autocorrelation_time: f64,
    pub tv: Option<TvEstimate>,
}

/// Builds a report from grid-spaced samples over all levels and the run's event counts.
pub fn mixing_report(
    batch: &SampleBatch,
    levels: usize,
    warm_starts: &WarmStartSet,
    counts: &EventCounts,
    tv: Option<TvEstimate>,
) -> MixingReport {
    let series: Vec<f64> = batch.samples.iter().map(|s| s.level as f64).collect();
    MixingReport {
        level_occupancy: level_occupancy(batch, levels),
        mode_occupancy: (0..levels)
            .map(|l| mode_occupancy(batch, warm_starts, l).ok())
            .collect(),
        rwm_acceptance: counts.rwm_acceptance(),
        swap_acceptance: counts.swap_acceptance(),
        leap_acceptance: counts.leap_acceptance(),
        level_autocorrelation_time: integrated_autocorrelation_time(&series),
        tv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_branches_agree() {
        for lambda in [1.0, 1.1, 1.18, 1.25, 1.5] {
            let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
            let theta = 1.0
                - (2.0 * std::f64::consts::PI).sqrt() / lambda
                    * (1..=20)
                        .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
                        .sum::<f64>();
            let alt = 2.0
                * (1..=100)
                    .map(|k| {
                        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                        s * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
                    })
                    .sum::<f64>();
            assert!((theta - alt).abs() < 1e-10);
        }
        // Classic critical value at the 5% level.
        assert!((kolmogorov_pvalue(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn uniform_samples_pass_and_shifted_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_test(&xs, cdf).passes(0.01));
        let shifted: Vec<f64> = xs.iter().map(|x| (x * 1.1).min(1.0)).collect();
        assert!(!ks_test(&shifted, cdf).passes(0.01));
    }

    #[test]
    fn autocorrelation_of_ar1() {
        // AR(1) with coefficient φ has τ = (1 + φ) / (1 - φ).
        let phi: f64 = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = 0.0;
        let series: Vec<f64> = (0..200_000)
            .map(|_| {
                x = phi * x + rng.sample::<f64, _>(rand_distr::StandardNormal);
                x
            })
            .collect();
        let tau = integrated_autocorrelation_time(&series);
        assert!((tau - 9.0).abs() < 1.0, "{tau}");
        assert_eq!(integrated_autocorrelation_time(&[2.0; 10]), 1.0);
    }
}
