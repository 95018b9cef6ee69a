//! Ground-state energy predictions for random regular k-NAE-SAT.
//!
//! This crate implements, and cross-validates against exact identities and
//! brute-force oracles at desk scale:
//!
//! - the configuration-model instance ensemble with exact small-N ground
//!   states ([`instance`]);
//! - warning propagation, local energy functionals, and the tree/Bethe
//!   ground-state formulas ([`wp`]);
//! - the univariate survey-propagation recursion and its binomial kernels
//!   ([`kernels`], [`sp`]);
//! - the one-step replica-symmetry-breaking (1RSB) free energy, energy, and
//!   complexity, with the root y⋆ where complexity vanishes ([`onersb`]);
//! - the first-moment (annealed) bound and its comparison with the 1RSB
//!   value ([`firstmoment`]);
//! - the Gardner (bug-proliferation) stability matrices, eigenvalue λ, and
//!   the instability threshold α_Ga where Đ·λ crosses 1 ([`gardner`]);
//! - the zero-temperature 2RSB functional on finite-support measures and the
//!   perturbation expansion whose sign flip detects the same threshold
//!   ([`tworsb`]).
//!
//! Everything is pure and deterministic given explicit seeds; Monte Carlo
//! parallelism never affects results.

pub mod error;
pub mod firstmoment;
pub mod gardner;
pub mod instance;
pub mod kernels;
pub mod onersb;
pub mod params;
pub mod rng;
pub mod sp;
pub mod tworsb;
pub mod wp;

pub use error::{Error, Result};
pub use params::ModelParams;
