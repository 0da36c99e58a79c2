//! Numerical laboratory for nonlinear Vlasov equations in one space and one
//! velocity dimension on the periodic torus.
//!
//! The crate is organised bottom-up: [`phase_grid`] holds the grid, calculus
//! and norms; [`models`] the advection fields and force models;
//! [`characteristics`] the flows, Burgers straightening and Liouville
//! diagnostics; [`operators`] the second-order commuting operator;
//! [`averaging`] the kinetic averaging operator; [`solver`] the
//! semi-Lagrangian Picard solver.

pub mod averaging;
pub mod characteristics;
pub mod error;
pub mod fourier;
pub mod interp;
pub mod models;
pub mod operators;
pub mod phase_grid;
pub mod profiles;
pub mod solver;

pub use error::{KineticError, Result};
