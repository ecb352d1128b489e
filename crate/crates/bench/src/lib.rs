//! Fixtures shared by the benchmarks.

use pulse_optics::hyperbolic_model::{phase_table, PhaseTable, SystemSpec};
use pulse_optics::oscillatory_calculus::ThetaSignal;
use pulse_optics::profile_solver::{BoundaryPulse, GridSpec, InteractionCoeffs};

pub fn gaussian(theta_max: f64, n: usize) -> ThetaSignal {
    ThetaSignal::from_fn(theta_max, n, |t| (-t * t).exp()).expect("valid signal")
}

/// Nonlinear three-wave system with its phase table and coefficients.
pub fn burgers_system() -> (SystemSpec, PhaseTable, InteractionCoeffs) {
    let spec = SystemSpec::ex1_nonlinear();
    let table = phase_table(&spec, &[1.0]).expect("phase table");
    let coeffs = InteractionCoeffs::new(&spec, &table).expect("coefficients");
    (spec, table, coeffs)
}

pub fn pulse() -> BoundaryPulse {
    BoundaryPulse::gaussian(vec![0.2, 0.2])
}

pub fn profile_grid() -> GridSpec {
    GridSpec::new(2.0, 2.0, 12.0, 33, 33, 256).expect("valid grid")
}
