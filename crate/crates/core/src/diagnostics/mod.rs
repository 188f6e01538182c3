//! Occupancy, balance, divergence and spectral-gap diagnostics.
//!
//! Quadrature-backed reports are limited to `d <= 2`.

mod balance;
mod divergence;
mod occupancy;
mod spectral;
mod stats;

pub use balance::{balance_report, component_log_partitions, BalanceReport};
pub use divergence::{
    adjacency_chi_square, chi_square_on_grid, tv_estimate, AdjacencyChiSquare, ChiSquare,
    TvEstimate, MIN_TV_SAMPLES,
};
pub use occupancy::{level_occupancy, mode_assignments, mode_occupancy, occupancy_error};
pub use spectral::{
    projected_chain, projected_spectral_gap, spectral_gap, ProjectedChain, ProjectionRates,
};
pub use stats::{
    effective_sample_size, integrated_autocorrelation_time, kolmogorov_pvalue, ks_test,
    mixing_report, KsResult, MixingReport,
};
