use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;

fn wave_pair() -> SystemSpec {
    // symbol eigenvalues +-sqrt(eta^2 + xi^2)
    let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let b0 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    SystemSpec::new(vec![a1, a2], None, None, b0, None).unwrap()
}

#[test]
fn ex1_validates_with_two_boundary_conditions() {
    let spec = SystemSpec::ex1();
    let rep = validate_system(&spec).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert_eq!(spec.p, 2);
}

#[test]
fn characteristic_boundary_fails_validation() {
    let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0]));
    let b0 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let spec = SystemSpec::new(vec![a1], None, None, b0, None).unwrap();
    let rep = validate_system(&spec).unwrap();
    assert!(!rep.get("noncharacteristic").unwrap().passed);
}

#[test]
fn rank_deficient_boundary_fails_validation() {
    let mut spec = SystemSpec::ex1();
    spec.b0 = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    let rep = validate_system(&spec).unwrap();
    assert!(!rep.get("boundary_rank").unwrap().passed);
}

#[test]
fn bad_p_is_structural_error() {
    let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 1.0]));
    let b0 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(SystemSpec::new(vec![a1], None, None, b0, None).is_err());
}

#[test]
fn ex1_dispersion_roots() {
    let spec = SystemSpec::ex1();
    // 1 + omega a_i = 0 per diagonal entry
    let roots = dispersion_roots(&spec, &[1.0]).unwrap();
    let want = [-1.0, -0.5, 1.0];
    for (r, w) in roots.iter().zip(want) {
        assert!((r.0 - w).abs() < 1e-12);
        assert_eq!(r.1, 1);
    }
    let doubled = dispersion_roots(&spec, &[2.0]).unwrap();
    for (r, w) in doubled.iter().zip(want) {
        assert!((r.0 - 2.0 * w).abs() < 1e-12);
    }
}

#[test]
fn identity_coefficient_gives_single_root() {
    let a1 = DMatrix::identity(3, 3);
    let b0 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let spec = SystemSpec { n: 3, d: 1, p: 2, a0: vec![a1], da: vec![vec![DMatrix::zeros(3, 3); 3]], f0: DMatrix::zeros(3, 3), b0, db: None };
    let roots = dispersion_roots(&spec, &[1.0]).unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0].0 + 1.0).abs() < 1e-12);
    assert_eq!(roots[0].1, 3);
}

#[test]
fn ex1_phase_table() {
    let spec = SystemSpec::ex1();
    let t = phase_table(&spec, &[1.0]).unwrap();
    let omegas = t.omegas();
    let want = [-0.5, 1.0, -1.0];
    let speeds = [2.0, -1.0, 1.0];
    for m in 0..3 {
        assert!((omegas[m] - want[m]).abs() < 1e-12);
        assert!((t.modes[m].group_velocity[0] - speeds[m]).abs() < 1e-8);
        let mut e = DMatrix::zeros(3, 3);
        e[(m, m)] = 1.0;
        assert!((&t.projectors[m] - e).abs().max() < 1e-12);
        // X = d/dx + (1/a) d/dt
        assert!((t.modes[m].x_field[0] - 1.0 / speeds[m]).abs() < 1e-14);
    }
    assert_eq!(t.incoming, vec![0, 2]);
    assert_eq!(t.outgoing, vec![1]);
    assert!(t.projector_sum_error() < 1e-12);
    assert!(t.projector_orthogonality_error() < 1e-12);
    assert!(t.biorthogonality_error() < 1e-12);
}

#[test]
fn x_field_matches_group_velocity() {
    // X is a multiple of d/dt + v.grad, so x_field = (1, v_1) / v_d
    let spec = wave_pair();
    let t = phase_table(&spec, &[1.0, 0.5]).unwrap();
    for m in &t.modes {
        let v = &m.group_velocity;
        assert!((m.x_field[0] - 1.0 / v[1]).abs() < 1e-8, "{m:?}");
        assert!((m.x_field[1] - v[0] / v[1]).abs() < 1e-8, "{m:?}");
    }
}

#[test]
fn region_tests() {
    let spec = SystemSpec::ex1();
    assert!(hyperbolic_region_test(&spec, 1.0, &[]).unwrap().hyperbolic);
    assert!(hyperbolic_region_test(&spec, 0.0, &[]).is_err());
    let w = wave_pair();
    // eigenvalues^2 = tau^2 - eta^2
    assert!(!hyperbolic_region_test(&w, 0.5, &[1.0]).unwrap().hyperbolic);
    assert!(hyperbolic_region_test(&w, 1.0, &[0.5]).unwrap().hyperbolic);
}

#[test]
fn glancing_detection() {
    let spec = SystemSpec::ex1();
    assert!(!glancing_test(&spec, 1.0, &[], 1e-8).unwrap());
    assert!(!glancing_test(&spec, 1e6, &[], 1e-8).unwrap());
    let w = wave_pair();
    assert!(glancing_test(&w, -1.0, &[1.0], 1e-8).unwrap());
    assert!(!glancing_test(&w, -2.0, &[1.0], 1e-8).unwrap());
}

#[test]
fn ex1_stable_subspace_is_e1_e3() {
    let spec = SystemSpec::ex1();
    for gamma in [1.0, 50.0] {
        let b = stable_subspace(&spec, &FrequencyPoint::new(1.0, gamma, vec![])).unwrap();
        assert_eq!(b.ncols(), 2);
        // the span has no e_2 component
        let row2: f64 = (0..2).map(|k| b[(1, k)].norm()).sum();
        assert!(row2 < 1e-12);
    }
    assert!(stable_subspace(&spec, &FrequencyPoint::new(1.0, 0.0, vec![])).is_err());
}

#[test]
fn advection_pair_has_one_dimensional_stable_subspace() {
    let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0]));
    let b0 = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
    let spec = SystemSpec::new(vec![a1], None, None, b0, None).unwrap();
    let b = stable_subspace(&spec, &FrequencyPoint::new(0.3, 0.7, vec![])).unwrap();
    assert_eq!(b.ncols(), 1);
}

#[test]
fn ex1_uniform_stability() {
    let spec = SystemSpec::ex1();
    let scan = uniform_stability_scan(&spec, 64, 1e-8).unwrap();
    assert!((scan.min_singular_value - 1.0).abs() < 1e-10, "{scan:?}");
}

#[test]
fn degenerate_boundary_operator_is_unstable() {
    let mut spec = SystemSpec::ex1();
    spec.b0 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let scan = uniform_stability_scan(&spec, 16, 1e-8).unwrap();
    assert!(scan.min_singular_value < 1e-10);
}

#[test]
fn swapped_boundary_rows_match_determinant() {
    let mut spec = SystemSpec::ex1();
    spec.b0 = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
    let scan = uniform_stability_scan(&spec, 32, 1e-8).unwrap();
    // [B e_1, B e_3] = [[0, 1], [1, 0]]: |det| = 1 and both singular values are 1
    let m = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!((m.determinant().abs() - 1.0).abs() < 1e-15);
    assert!((scan.min_singular_value - 1.0).abs() < 1e-10);
}

#[test]
fn stable_subspace_tends_to_incoming_span() {
    let spec = SystemSpec::ex1();
    assert!(stable_limit_angle(&spec, &[1.0], 1e-6).unwrap() < 1e-4);
    let w = wave_pair();
    assert!(stable_limit_angle(&w, &[1.0, 0.5], 1e-6).unwrap() < 1e-4);
}

#[test]
fn range_of_characteristic_operator_is_kernel_of_projector() {
    let spec = wave_pair();
    let t = phase_table(&spec, &[1.0, 0.3]).unwrap();
    let inv = spec.a_d_inv().unwrap();
    for m in &t.modes {
        let mut l = DMatrix::identity(2, 2) * t.beta[0];
        l += &spec.a0[0] * t.beta[1] + &spec.a0[1] * m.omega;
        for w in [DVector::from_vec(vec![0.3, -1.2]), DVector::from_vec(vec![2.0, 0.7])] {
            let v = &t.projectors[m.index] * (&inv * &l * w);
            assert!(v.norm() < 1e-10);
        }
    }
}

fn random_system(seed: &[f64]) -> SystemSpec {
    // symmetric A_1 with distinct eigenvalues of mixed sign, two incoming
    let q = DMatrix::from_row_slice(3, 3, &seed[0..9]).qr().q();
    let lam = DVector::from_vec(vec![1.5 + seed[9].abs(), -1.0 - seed[10].abs(), 0.5 + seed[11].abs()]);
    let a1 = &q * DMatrix::from_diagonal(&lam) * q.transpose();
    let r = [q.column(0).into_owned(), q.column(2).into_owned()];
    // B = [r_1 r_3]^T restricted to the incoming span is the identity
    let b0 = DMatrix::from_rows(&[r[0].transpose(), r[1].transpose()]);
    SystemSpec::new(vec![a1], None, None, b0, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projectors_are_a_resolution_of_identity(seed in prop::collection::vec(-1.0f64..1.0, 12)) {
        let spec = random_system(&seed);
        let t = phase_table(&spec, &[1.0]).unwrap();
        prop_assert!(t.projector_sum_error() < 1e-12);
        prop_assert!(t.projector_orthogonality_error() < 1e-12);
        prop_assert!(t.biorthogonality_error() < 1e-12);
        prop_assert_eq!(t.incoming.len(), 2);
        for m in &t.modes {
            let mut l = DMatrix::identity(3, 3) * t.beta[0];
            l += &spec.a0[0] * m.omega;
            prop_assert!((&l * &m.r[0]).norm() < 1e-10);
        }
    }

    #[test]
    fn roots_are_homogeneous(seed in prop::collection::vec(-1.0f64..1.0, 12), c in 0.1f64..10.0) {
        let spec = random_system(&seed);
        let r1 = dispersion_roots(&spec, &[1.0]).unwrap();
        let rc = dispersion_roots(&spec, &[c]).unwrap();
        for (a, b) in r1.iter().zip(rc.iter()) {
            prop_assert!((c * a.0 - b.0).abs() < 1e-10 * c.max(1.0));
        }
    }

    #[test]
    fn stable_dimension_equals_p(tau in -1.0f64..1.0, gamma in 1e-3f64..10.0, eta in -2.0f64..2.0) {
        let w = wave_pair();
        let b = stable_subspace(&w, &FrequencyPoint::new(tau, gamma, vec![eta])).unwrap();
        prop_assert_eq!(b.ncols(), w.p);
    }
}
