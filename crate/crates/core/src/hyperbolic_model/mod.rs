//! System description, phase table at the boundary frequency and
//! Kreiss-Lopatinskii stability checks.

mod phases;
mod stability;
mod system;

pub use phases::{dispersion_roots, phase_table, Component, Direction, FrequencyPoint, PhaseMode, PhaseTable};
pub use stability::{
    glancing_test, half_sphere_points, hyperbolic_region_test, incoming_basis, stable_limit_angle, script_a,
    stable_subspace, uniform_stability_scan, RegionDiagnostics, StabilityScan,
};
pub use system::{validate_system, Check, SystemSpec, ValidationReport};

#[cfg(test)]
mod tests;
