//! Leading-order profiles of the reflected pulses.
//!
//! Each incoming phase carries amplitudes `sigma_{m,k}(t, x_d, theta)` that
//! solve a Burgers-type transport equation along the straight rays of its
//! characteristic field, with boundary values fixed by the reflection
//! condition at `x_d = 0`. The nonlinear system is solved by Picard
//! iteration; each step is a linear transport problem integrated ray by ray.

mod coeffs;
mod grid;
mod io;
mod norms;
mod profiles;
mod pulse;
mod solve;

pub use coeffs::{d_omega, slow_derivative_matrix, InteractionCoeffs};
pub use grid::GridSpec;
pub use io::{read_profiles, write_profiles};
pub use norms::{weighted_norm, NormVariant};
pub use profiles::{leading_order_eval, GridFunction, ModeProfiles, ProfileSet};
pub use pulse::{smooth_step, BoundaryPulse, PulseShape};
pub use solve::{
    boundary_reflection_solve, solve_profiles, IterationLog, ProfileProblem, ProfileRun, ReflectionSolver,
    ResidualReport, SolverOptions, ThetaScheme,
};

/// Interaction coefficients of `spec` at the phase table `table`.
pub fn interaction_coefficients(
    spec: &crate::hyperbolic_model::SystemSpec,
    table: &crate::hyperbolic_model::PhaseTable,
) -> crate::Result<InteractionCoeffs> {
    InteractionCoeffs::new(spec, table)
}
