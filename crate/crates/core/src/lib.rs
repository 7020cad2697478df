//! Numerical laboratory for Poisson brackets under C⁰ perturbation.
//!
//! The crate samples closed-form Hamiltonians on phase-space charts,
//! computes brackets, integrates Hamiltonian flows, measures the defect of
//! pseudo-representations of finite-dimensional normed Lie algebras, and
//! packages the counterexample gallery and the distributional checks as
//! reproducible experiments.

pub mod bracket;
pub mod chart;
pub mod flows;
pub mod error;
pub mod experiments;
pub mod function;
pub mod golden;
pub mod grid;
pub mod lie;
pub mod pseudo_rep;
pub mod stencil;

pub use error::{Error, Result};
