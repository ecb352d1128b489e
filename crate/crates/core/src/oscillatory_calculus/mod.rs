//! Fast-variable calculus for the first corrector.
//!
//! Functions of `(theta0, xi_d)` built from pulse profiles are kept as term
//! lists ([`TypeFFunction`]); the averaging operator and the bounded inverse
//! of `d_xi - omega d_theta0` then act by term surgery and one-dimensional
//! transforms of [`ThetaSignal`]s.

mod corrector;
mod quadrature;
mod signal;
mod typef;

pub use corrector::{build_corrector, corrector_source, CorrectorField, CorrectorOptions};
pub use quadrature::{integrate, transversal_integral, transversal_integral_tol, ENVELOPE_FLOOR};
pub use signal::{decaying_primitive, moment_zero, nontransversal_product, CutoffKernel, Primitive, ThetaSignal};
pub use typef::{
    apply_E, apply_R_infinity, remove_resonant, single_phase_terms, CorrectorPiece, CorrectorRep, SignalId,
    TermKind, TypeFFunction, TypeFTerm,
};

#[cfg(test)]
mod tests;
