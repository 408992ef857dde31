//! Hard limits on disturbance rejection in autocatalytic metabolic pathways.
//!
//! The library models pathways in which producing the output species first
//! consumes it (glycolysis being the canonical case), linearizes them around
//! their operating point, and computes two controller-independent limits:
//!
//! * the worst-case L2 gain from disturbance to output deviation, which no
//!   causal feedback can push below a closed-form floor, and
//! * the minimum output transient energy incurred when recovering from an
//!   initial displacement.
//!
//! Both limits come from the unstable zero dynamics of the input/output pair,
//! so they are facts about the pathway's stoichiometry rather than about any
//! particular regulator. Closed forms are cross-checked against independent
//! numerical machinery: Riccati-based cheap-control costs, frequency sweeps,
//! and nonlinear simulation.
//!
//! Core types are generic over the scalar via [`real::Real`]; the aliases
//! below fix `f64` for everyday use.

pub mod config;
pub mod linearize;
pub mod limits;
pub mod model;
pub mod numerics;
pub mod real;
pub mod sim;
pub mod tolerances;
pub mod verify;

pub use real::Real;

/// Two-state pathway parameters over `f64`.
pub type TwoStateParams = model::TwoStateParams<f64>;
/// Chain pathway parameters over `f64`.
pub type ChainParams = model::ChainParams<f64>;
/// Cyclic network over `f64`.
pub type CyclicNetwork = model::CyclicNetwork<f64>;
/// Any pathway model over `f64`.
pub type PathwayModel = model::PathwayModel<f64>;
/// Linearized plant over `f64`.
pub type LinearPlant = linearize::LinearPlant<f64>;
/// Zero-dynamics realization over `f64`.
pub type ZeroDynamics = linearize::ZeroDynamics<f64>;
/// Hard-limit analysis report over `f64`.
pub type HardLimitReport = limits::HardLimitReport<f64>;
/// Dense matrix over `f64`.
pub type Matrix = numerics::Mat<f64>;
