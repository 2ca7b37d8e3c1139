//! Independent reference computations: adaptive quadrature and a
//! discretized Hamiltonian solved exactly on a finite grid.

pub mod hamiltonian;
pub mod quadrature;

pub use hamiltonian::{
    convergence_study, graded_grid, oracle_evolution, ConvergenceReport, DiscretizedHamiltonian, Eigenpair,
};
pub use quadrature::{integrate, integrate_scalar, principal_value, QuadResult, QuadTolerance};
