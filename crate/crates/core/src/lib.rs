//! PAC learning from multiple strategic noisy annotators.
//!
//! The crate covers four layers:
//!
//! - [`pac`]: the information-rate function ψ, the feasibility condition
//!   `ln(N/δ) ≤ Σ mᵢ ψ(ηᵢ)`, the analytic bounds behind it and Monte Carlo
//!   oracles for the probabilities those bounds dominate.
//! - [`mda`]: a threshold concept class, noisy multi-annotator datasets, the
//!   minimum-disagreement learner and an empirical failure-rate estimator.
//! - [`plan`]: cost-optimal annotation plans under complete information.
//! - [`mechanism`] and [`harness`]: the single-winner procurement auction with
//!   virtual costs, critical bids and two payment rules, plus the strategic
//!   verification harness (best-response sweeps, Monte Carlo expected rules,
//!   ex-post audits).
//!
//! Closed-form code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the common `f64` instantiations.

// `!(a < b)` comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod mda;
pub mod mechanism;
pub mod pac;
pub mod plan;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type NoiseRateF64 = pac::NoiseRate<f64>;
pub type PacParamsF64 = pac::PacParams<f64>;
pub type LogBudgetF64 = pac::LogBudget<f64>;
pub type PlanProblemF64 = plan::PlanProblem<f64>;
pub type PlanSolutionF64 = plan::PlanSolution<f64>;
pub type CostModelF64 = mechanism::CostModel<f64>;
pub type PriorModelF64 = mechanism::PriorModel<f64>;
pub type BidIntervalF64 = mechanism::BidInterval<f64>;
pub type MechanismF64 = mechanism::Mechanism<f64>;
pub type AuctionOutcomeF64 = mechanism::AuctionOutcome<f64>;

pub type NoiseRateF32 = pac::NoiseRate<f32>;
pub type PacParamsF32 = pac::PacParams<f32>;
pub type CostModelF32 = mechanism::CostModel<f32>;
pub type PriorModelF32 = mechanism::PriorModel<f32>;
pub type MechanismF32 = mechanism::Mechanism<f32>;
