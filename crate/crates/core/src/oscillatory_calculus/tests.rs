use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::*;
use crate::hyperbolic_model::{phase_table, SystemSpec};
use crate::profile_solver::{solve_profiles, BoundaryPulse, GridSpec, InteractionCoeffs, SolverOptions};

const OMEGAS: [f64; 3] = [-0.5, 1.0, -1.0];

fn gauss(shift: f64, width: f64) -> ThetaSignal {
    ThetaSignal::from_fn(12.0, 512, |t| (-((t - shift) / width).powi(2)).exp()).unwrap()
}

/// A function with every kind of non-resonant term plus resonant ones.
fn mixed_function() -> TypeFFunction {
    let mut f = TypeFFunction::new(vec![0, 1, 2], OMEGAS.to_vec());
    f.add_single(0, gauss(0.3, 1.0), 1, 1.5).unwrap();
    f.add_single(0, gauss(0.0, 1.0), 0, 2.0).unwrap();
    f.add_product(0, gauss(0.0, 1.0), 0, gauss(0.5, 0.8).derivative(), 2, -0.7).unwrap();
    f.add_product(0, gauss(-0.2, 1.0), 1, gauss(0.1, 1.2), 2, 0.9).unwrap();
    f.add_product(1, gauss(0.0, 1.0), 1, gauss(0.0, 0.5), 1, 1.0).unwrap();
    f.add_single(2, gauss(1.0, 0.7), 0, -1.1).unwrap();
    f.add_product(2, gauss(0.0, 1.0), 1, gauss(0.4, 1.0), 1, 0.6).unwrap();
    f
}

#[test]
fn averaging_keeps_matching_phases_only() {
    let f = mixed_function();
    let e = apply_E(&f);
    assert_eq!(e.terms.len(), 2);
    assert!(e.terms.iter().all(|t| match t.kind {
        TermKind::Single { phase, .. } => phase == f.comp_phase[t.component],
        TermKind::Product { phase_g, phase_h, .. } => {
            phase_g == f.comp_phase[t.component] && phase_h == f.comp_phase[t.component]
        }
    }));
    assert_eq!(apply_E(&e).terms, e.terms);
    assert_eq!(remove_resonant(&f).terms.len() + e.terms.len(), f.terms.len());
}

#[test]
fn averaging_of_single_own_phase_term_is_identity() {
    let mut f = TypeFFunction::new(vec![0, 1, 2], OMEGAS.to_vec());
    f.add_single(0, gauss(0.0, 1.0), 0, 1.0).unwrap();
    assert_eq!(apply_E(&f).terms, f.terms);
    let mut g = TypeFFunction::new(vec![0, 1, 2], OMEGAS.to_vec());
    g.add_product(0, gauss(0.0, 1.0), 0, gauss(0.0, 1.0), 1, 1.0).unwrap();
    assert!(apply_E(&g).is_empty());
}

#[test]
fn averaging_matches_long_time_mean() {
    let f = mixed_function();
    let e = apply_E(&f);
    let horizon = 1e3;
    for i in 0..3 {
        let w = OMEGAS[i];
        for &(theta0, xi) in &[(0.0, 0.0), (0.4, 0.3), (-0.6, 1.0)] {
            let mean = integrate(|s| f.eval(i, theta0 + w * (xi - s), s), 0.0, horizon, 1e-10).unwrap() / horizon;
            let want = e.eval(i, theta0, xi);
            assert!((mean - want).abs() < 10.0 / horizon, "component {i}: {mean} vs {want}");
        }
    }
}

#[test]
fn single_term_solution_matches_direct_quadrature() {
    let mut f = TypeFFunction::new(vec![0, 1, 2], OMEGAS.to_vec());
    let sig = moment_zero(&gauss(0.2, 1.0), 0.3, CutoffKernel::Smoothstep5).unwrap();
    f.add_single(0, sig.clone(), 1, 1.0).unwrap();
    let rep = apply_R_infinity(&f, 0.3).unwrap();
    let alpha = OMEGAS[1] - OMEGAS[0];
    let star = decaying_primitive(&sig).unwrap();
    for q in 0..20 {
        let theta0 = -3.0 + 0.3 * q as f64;
        let xi = 0.1 * q as f64;
        let got = rep.eval(0, theta0, xi).unwrap();
        let closed = (star.eval(theta0 + OMEGAS[1] * xi) - star.values()[0]) / alpha;
        // int_infinity^xi f(theta0 + omega_0 (xi - s) + omega_1 s) ds
        let z0 = theta0 + OMEGAS[0] * xi;
        let direct = -integrate(|s| sig.eval(z0 + alpha * s), xi, xi + 40.0, 1e-12).unwrap();
        assert!((got - closed).abs() < 1e-12);
        assert!((got - direct).abs() <= 1e-4 * direct.abs().max(1e-3), "{got} vs {direct}");
    }
}

#[test]
fn zero_function_gives_empty_corrector() {
    let f = TypeFFunction::new(vec![0, 1, 2], OMEGAS.to_vec());
    let rep = apply_R_infinity(&f, 0.5).unwrap();
    assert!(rep.is_empty());
    assert_eq!(rep.eval(0, 0.3, 0.2).unwrap(), 0.0);
}

#[test]
fn resonant_terms_are_rejected() {
    let f = mixed_function();
    assert!(matches!(apply_R_infinity(&f, 0.5), Err(crate::Error::Contract(_))));
}

#[test]
fn averaging_annihilates_the_solution() {
    let rep = apply_R_infinity(&remove_resonant(&mixed_function()), 0.5).unwrap();
    let back = single_phase_terms(&rep, 12.0, 512).unwrap();
    assert!(!back.is_empty());
    assert!(apply_E(&back).is_empty());
    for p in &rep.pieces {
        let own = rep.comp_phase[p.component()];
        assert!(!p.phases().iter().all(|&ph| ph == own));
    }
}

#[test]
fn solution_inverts_the_fast_operator() {
    let f = remove_resonant(&mixed_function());
    let rep = apply_R_infinity(&f, 0.5).unwrap();
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let theta0 = -2.0 + 1.3 * a as f64;
            let xi = 0.2 + 0.7 * b as f64;
            for i in 0..3 {
                let u = |t: f64, x: f64| rep.eval(i, t, x).unwrap();
                let lhs = (u(theta0, xi + h) - u(theta0, xi - h)) / (2.0 * h)
                    - OMEGAS[i] * (u(theta0 + h, xi) - u(theta0 - h, xi)) / (2.0 * h);
                worst = worst.max((lhs - f.eval(i, theta0, xi)).abs());
            }
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn transversal_gaussian_oracle() {
    let g = ThetaSignal::from_fn(12.0, 512, |t| (-t * t).exp()).unwrap();
    let v = transversal_integral(&g, &g, 0.0, 1.0, -1.0, 0.0, 0.0).unwrap();
    assert!((v + (PI / 8.0).sqrt()).abs() < 1e-6, "{v}");
}

#[test]
fn transversal_integral_is_bounded_in_xi() {
    let g = ThetaSignal::from_fn(12.0, 512, |t| (-t * t).exp()).unwrap();
    let vals: Vec<f64> = (0..=100)
        .map(|k| transversal_integral(&g, &g, 0.0, 1.0, -1.0, 0.0, k as f64).unwrap().abs())
        .collect();
    let (imax, vmax) = vals.iter().enumerate().fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    assert!(vmax.is_finite() && vmax < 1.0);
    assert_eq!(imax, 0);
}

#[test]
fn moment_zero_leaves_high_frequencies_alone() {
    // spectrum supported on |m| >= 2 pi * 8 / 24 > 2 p
    let s = ThetaSignal::from_fn(12.0, 256, |t| (2.0 * PI * 8.0 * t / 24.0).sin()).unwrap();
    let sp = moment_zero(&s, 0.5, CutoffKernel::Smoothstep5).unwrap();
    assert!(sp.sup_diff(&s) < 1e-13);
}

#[test]
fn cutoff_applied_twice_squares_the_multiplier() {
    let g = gauss(0.0, 1.0);
    let p = 0.4;
    let once = moment_zero(&g, p, CutoffKernel::Smoothstep5).unwrap();
    let twice = moment_zero(&once, p, CutoffKernel::Smoothstep5).unwrap();
    let direct = g.multiply_spectrum(false, |m| CutoffKernel::Smoothstep5.chi(m, p).powi(2));
    assert!(twice.sup_diff(&direct) < 1e-14);
    assert!(once.integral().abs() < 1e-14 && twice.integral().abs() < 1e-14);
}

#[test]
fn nontransversal_product_has_zero_mean() {
    let g = gauss(0.0, 1.0);
    let out = nontransversal_product(&g, &g.derivative(), 0.2, CutoffKernel::Smoothstep5).unwrap();
    assert!(out.mean().abs() < 1e-14);
    let zero = nontransversal_product(&g.zeros_like(), &g, 0.2, CutoffKernel::Smoothstep5).unwrap();
    assert!(zero.is_zero());
}

fn coupled_spec() -> SystemSpec {
    let mut spec = SystemSpec::ex1_nonlinear();
    spec.f0 = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.2, 0.1, 0.0, 0.0, -0.2, 0.0, 0.0]);
    // a cross term in the flux couples the two incoming phases
    spec.da[0][2][(0, 0)] = 0.5;
    spec.da[0][0][(2, 2)] = 0.5;
    spec
}

#[test]
fn decoupled_systems_have_no_corrector() {
    for spec in [SystemSpec::ex1(), SystemSpec::ex1_nonlinear()] {
        let table = phase_table(&spec, &[1.0]).unwrap();
        let coeffs = InteractionCoeffs::new(&spec, &table).unwrap();
        let grid = GridSpec::new(2.0, 2.0, 12.0, 17, 17, 256).unwrap();
        let pulse = BoundaryPulse::gaussian(vec![0.2, 0.2]);
        let run = solve_profiles(&spec, &table, &coeffs, &pulse, grid, SolverOptions::default()).unwrap();
        let rep =
            build_corrector(&run.previous, &run.profiles, &coeffs, &table, &CorrectorOptions::new(0.5), 1.0, 0.5).unwrap();
        assert!(rep.is_empty());
    }
}

#[test]
fn coupled_corrector_solves_its_equation() {
    let spec = coupled_spec();
    let table = phase_table(&spec, &[1.0]).unwrap();
    let coeffs = InteractionCoeffs::new(&spec, &table).unwrap();
    let grid = GridSpec::new(2.0, 2.0, 12.0, 33, 33, 512).unwrap();
    let pulse = BoundaryPulse::gaussian(vec![0.2, 0.1]);
    let run = solve_profiles(&spec, &table, &coeffs, &pulse, grid, SolverOptions::default()).unwrap();
    let opts = CorrectorOptions::new(0.5);
    let (t, x) = (1.2, 0.4);
    let rep = build_corrector(&run.previous, &run.profiles, &coeffs, &table, &opts, t, x).unwrap();
    assert!(!rep.is_empty());
    let source = remove_resonant(&corrector_source(&run.previous, &run.profiles, &coeffs, &table, &opts, t, x).unwrap());
    let h = 1e-3;
    let omegas: Vec<f64> = table.modes.iter().map(|m| m.omega).collect();
    let mut worst: f64 = 0.0;
    for &(theta0, xi) in &[(0.0, 0.5), (-1.0, 1.0), (0.7, 0.1)] {
        for i in 0..3 {
            let w = omegas[rep.comp_phase[i]];
            let u = |a: f64, b: f64| rep.eval(i, a, b).unwrap();
            let lhs = (u(theta0, xi + h) - u(theta0, xi - h)) / (2.0 * h) - w * (u(theta0 + h, xi) - u(theta0 - h, xi)) / (2.0 * h);
            worst = worst.max((lhs + source.eval(i, theta0, xi)).abs());
        }
    }
    assert!(worst < 1e-4, "{worst}");
}
