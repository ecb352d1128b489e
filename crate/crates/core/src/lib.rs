//! Weakly nonlinear geometric optics for pulses reflecting off a
//! noncharacteristic boundary.
//!
//! The crate builds the phase table of a quasilinear hyperbolic boundary
//! problem, solves the Burgers-type profile equations for the reflected
//! pulses, assembles the moment-zero corrector and computes a fine-grid
//! reference solution to measure the approximation error as `eps -> 0`.

pub mod config;
pub mod error;
pub mod hyperbolic_model;
pub mod interp;
pub mod linalg;
pub mod oscillatory_calculus;
pub mod profile_solver;
pub mod singular_solver;
pub mod sweep_harness;

pub use error::{Error, Result};
pub use hyperbolic_model::{
    dispersion_roots, phase_table, uniform_stability_scan, validate_system, FrequencyPoint, PhaseMode, PhaseTable,
    SystemSpec,
};
pub use oscillatory_calculus::{CorrectorRep, ThetaSignal, TypeFFunction};
pub use profile_solver::{BoundaryPulse, GridSpec, InteractionCoeffs, ProfileSet};
pub use singular_solver::{FineGrid, FineSolution};
pub use sweep_harness::{SweepConfig, SweepReport};

/// Number of worker threads requested through `PULSE_OPTICS_THREADS`.
pub fn configure_threads() {
    if let Ok(v) = std::env::var("PULSE_OPTICS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}
