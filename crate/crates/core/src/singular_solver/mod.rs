//! Fine-grid reference solution of the oscillatory boundary problem in one
//! space dimension.
//!
//! The state is advanced in the characteristic variables of `A_1(0)`:
//! semi-Lagrangian transport along the constant speeds with quintic
//! interpolation, the nonlinear part of the flux and the zero-order term
//! treated as a source by the trapezoidal rule. The incoming variables at
//! `x = 0` come from a damped Newton solve of the nonlinear boundary
//! condition; the far end is a pure outflow boundary.

mod grid;
mod io;
mod solve;

pub use grid::{Characteristics, ExactConfig, FineGrid};
pub use io::{read_solution, write_solution};
pub use solve::{
    linear_oracle, picard_solve_singular, residual_norms, solve_exact, FineSolution, PicardLog, ResidualNorms,
    SolveStats,
};

#[cfg(test)]
mod tests;
