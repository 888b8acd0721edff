//! Condition-based maintenance of systems degrading under a gamma process
//! with shock-driven random defects.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combined;
pub mod degradation;
pub mod error;
pub mod maintenance;
pub mod real;
pub mod rng;
pub mod shock_arrivals;
pub mod special_functions;

pub use error::{Error, Result};
pub use real::Real;

// Double-precision aliases for the common case.
pub type ShotNoise = shock_arrivals::ShotNoiseParams<f64>;
pub type Degradation = degradation::GammaModel<f64>;
pub type System = combined::SystemSpec<f64>;
pub type Lifetime = combined::LifetimeTable<f64>;
pub type Policy = maintenance::PolicyParams<f64>;
pub type Costs = maintenance::CostRates<f64>;
pub type Simulation = maintenance::SimControl<f64>;
pub type Cycle = maintenance::CycleOutcome<f64>;
pub type CostRate = maintenance::CostRateEstimate<f64>;
pub type CycleQuantities = maintenance::AnalyticCycleQuantities<f64>;
pub type Observations = degradation::DegradationObservations<f64>;
