//! Reweighted ALPS: tilted simulated tempering with coldest-level mode
//! teleportation and Monte Carlo learned component and level weights.
//!
//! The crate also ships the Hessian-adjusted tempering baseline, a naive power
//! tempering control, quadrature-backed diagnostics and a small runner.

pub mod baseline;
pub mod diagnostics;
pub mod error;
pub mod hat;
pub mod kernels;
pub mod learning;
pub mod math;
pub mod quadrature;
pub mod record;
pub mod runner;
pub mod target;
pub mod tilting;

pub use error::{Error, Result};
pub use kernels::{simulate, Chain, ChainState, KernelConfig, ReAlps, TemperedFamily};
pub use record::{EventKind, EventRecord, Sample, SampleBatch};
pub use target::{Point, TargetModel, TargetSpec};
pub use tilting::{TemperatureLadder, TemperingScheme, WarmStartSet};
