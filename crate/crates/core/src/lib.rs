//! Time-average age of information for a blocking status-update system whose
//! service times or interarrival times are modulated by a two-state
//! Gilbert-Elliot Markov chain.
//!
//! A single sampler sends updates through a single server to a monitor. The
//! server blocks: an update enters service only if the server is idle, and
//! arrivals during a service are discarded. Either the service rate
//! (`ge-service`) or the sampling rate (`ge-arrival`) switches between a slow
//! *bad* state and a fast *good* state; the switch happens each time a packet
//! enters service.
//!
//! The crate provides:
//!
//! - [`chain`] — the two-state chain, its stationary distribution, and the
//!   average operating cost of a transition matrix,
//! - [`analytic`] — exact closed forms for the time-average age in both
//!   scenarios, the single-state baseline, and the budget-line objective,
//! - [`simulate`] — a seeded, replicated Monte Carlo estimator of the same
//!   quantity, used as an independent cross-check of every formula,
//! - [`optimize`] — age-optimal transition matrices with and without an
//!   average-cost budget, plus numerical monotonicity verification,
//! - [`cli`] — the `aoi` command-line tool built on top of the above.
//!
//! Core math is generic over the float type through [`Scalar`]; the type
//! aliases at the crate root fix `f64`, which is what the CLI and the test
//! suite use.
//!
//! ```
//! use aoi_core::{GEServiceScenario, TransitionMatrix};
//!
//! let scenario = GEServiceScenario::new(1.0, 0.1, 1.0).unwrap();
//! let matrix = TransitionMatrix::new(0.5, 0.5).unwrap();
//! let breakdown = aoi_core::analytic::age_ge_service(&scenario, &matrix);
//! assert!((breakdown.delta - 185.5 / 13.0).abs() < 1e-12);
//! ```

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

pub mod analytic;
pub mod chain;
pub mod cli;
pub mod optimize;
pub mod simulate;

pub use chain::State;

/// Float scalar the core math is generic over (`f32`, `f64`, ...).
pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Send + Sync + 'static {}

/// Errors reported by constructors and operations across the crate.
///
/// Offending values are carried as `f64` regardless of the scalar type so the
/// error type stays non-generic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {name} = {value} must lie in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("p = 0 and q = 0 leaves the chain with no unique stationary distribution")]
    NoStationaryDistribution,
    #[error("rate {name} = {value} must be positive and finite")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("{fast_name} = {fast} must be strictly greater than {slow_name} = {slow}")]
    RateOrdering {
        fast_name: &'static str,
        fast: f64,
        slow_name: &'static str,
        slow: f64,
    },
    #[error("costs must satisfy 0 <= c_b <= c_g, got c_b = {c_b}, c_g = {c_g}")]
    InvalidCosts { c_b: f64, c_g: f64 },
    #[error("budget {budget} must be finite")]
    NonFiniteBudget { budget: f64 },
    #[error("budget {budget} cannot be met: every transition matrix costs more than c_b = {c_b}")]
    InfeasibleBudget { budget: f64, c_b: f64 },
    #[error("epsilon = {value} must lie in (0, 0.5)")]
    InvalidEpsilon { value: f64 },
    #[error("alpha = {value} must be positive and finite")]
    InvalidAlpha { value: f64 },
    #[error("p = {p} must lie in (0, {max}] so that q = alpha * p stays in (0, 1]")]
    LineParameterOutOfRange { p: f64, max: f64 },
    #[error("num_cycles must be at least {min}, got {got}")]
    TooFewCycles { min: u64, got: u64 },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("grid resolution must be at least 3, got {got}")]
    GridTooSmall { got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

fn as_f64<T: Scalar>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `f64` instantiations of the generic core types.
pub type TransitionMatrix = chain::TransitionMatrix<f64>;
pub type StationaryDist = chain::StationaryDist<f64>;
pub type CostModel = chain::CostModel<f64>;
pub type GEServiceScenario = analytic::GEServiceScenario<f64>;
pub type GEArrivalScenario = analytic::GEArrivalScenario<f64>;
pub type Scenario = analytic::Scenario<f64>;
pub type ExpMoments = analytic::ExpMoments<f64>;
pub type AgeBreakdown = analytic::AgeBreakdown<f64>;
pub type SimConfig = simulate::SimConfig<f64>;
pub type SimResult = simulate::SimResult<f64>;
pub type OptimResult = optimize::OptimResult<f64>;
pub type Feasibility = optimize::Feasibility<f64>;
pub type MonotonicityReport = optimize::MonotonicityReport<f64>;
