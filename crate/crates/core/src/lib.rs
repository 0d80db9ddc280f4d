//! Passive-beamforming design for IRS-assisted multi-user MIMO offloading
//! to an edge server.
//!
//! The crate covers the channel model, MMSE/SINR link quantities, the
//! offloading economics, a convex complex QCQP solver, the BCD feasibility
//! check for per-user rate floors, and the sum-of-ratios optimizer of the
//! server's transmission-cost objective.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to one of them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chanmodel;
pub mod econ;
pub mod error;
pub mod feasibility;
pub mod instances;
pub mod qcqp;
pub mod scalar;
pub mod signal;
pub mod sumratio;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::{CMat, CVec, Real};

pub type ChannelSet64 = chanmodel::ChannelSet<f64>;
pub type ChannelSet32 = chanmodel::ChannelSet<f32>;
pub type PhaseVector64 = signal::PhaseVector<f64>;
pub type PhaseVector32 = signal::PhaseVector<f32>;
pub type ReceiverBank64 = signal::ReceiverBank<f64>;
pub type ReceiverBank32 = signal::ReceiverBank<f32>;
pub type TaskProfile64 = econ::TaskProfile<f64>;
pub type TaskProfile32 = econ::TaskProfile<f32>;
pub type OffloadEconomy64 = econ::OffloadEconomy<f64>;
pub type OffloadEconomy32 = econ::OffloadEconomy<f32>;
pub type QcqpProblem64 = qcqp::QcqpProblem<f64>;
pub type QcqpProblem32 = qcqp::QcqpProblem<f32>;
pub type QcqpSolution64 = qcqp::QcqpSolution<f64>;
pub type QcqpSolution32 = qcqp::QcqpSolution<f32>;
pub type FeasibilityResult64 = feasibility::FeasibilityResult<f64>;
pub type FeasibilityResult32 = feasibility::FeasibilityResult<f32>;
pub type SolverState64 = sumratio::SolverState<f64>;
pub type SolverState32 = sumratio::SolverState<f32>;
pub type OptimizationResult64 = sumratio::OptimizationResult<f64>;
pub type OptimizationResult32 = sumratio::OptimizationResult<f32>;
