use super::*;
use crate::error::Error;
use crate::hyperbolic_model::SystemSpec;
use crate::profile_solver::BoundaryPulse;

const BETA: [f64; 1] = [1.0];

fn cfg() -> ExactConfig {
    ExactConfig { t_max: 1.5, x_max: 1.0, ppw: 12.0, store_levels: 30, ..ExactConfig::default() }
}

fn grid(spec: &SystemSpec, eps: f64) -> FineGrid {
    FineGrid::for_eps(spec, 1.0, eps, &cfg()).unwrap()
}

fn pulse(a: f64) -> BoundaryPulse {
    BoundaryPulse::gaussian(vec![a, -0.5 * a])
}

#[test]
fn zero_data_gives_zero() {
    let spec = SystemSpec::ex1_nonlinear();
    let sol = solve_exact(&spec, &BoundaryPulse::zero(2), &BETA, 0.1, grid(&spec, 0.1), &cfg()).unwrap();
    assert_eq!(sol.sup_norm(), 0.0);
    assert_eq!(sol.times.len(), sol.levels.len());
}

#[test]
fn characteristics_of_ex1() {
    let c = Characteristics::new(&SystemSpec::ex1()).unwrap();
    assert_eq!(c.incoming().len(), 2);
    assert_eq!(c.outgoing().len(), 1);
    assert!((c.max_speed() - 2.0).abs() < 1e-12);
}

#[test]
fn stored_levels_are_consistent() {
    let spec = SystemSpec::ex1();
    let g = grid(&spec, 0.1);
    let sol = solve_exact(&spec, &pulse(1.0), &BETA, 0.1, g, &cfg()).unwrap();
    assert_eq!(sol.steps, g.stored_steps());
    assert!((sol.times.last().unwrap() - cfg().t_max).abs() < 1e-12);
}

#[test]
fn linear_problem_matches_characteristic_oracle() {
    let spec = SystemSpec::ex1();
    let eps = 0.1;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let g = grid(&spec, eps);
    let sol = solve_exact(&spec, &pulse(1.0), &BETA, eps, g, &cfg()).unwrap();
    for (lv, &t) in sol.times.iter().enumerate() {
        for j in (0..g.nx).step_by(3) {
            let want = linear_oracle(&spec, &pulse(1.0), &BETA, eps, t, g.x(j)).unwrap();
            worst = worst.max((sol.value(lv, j) - &want).amax());
            scale = scale.max(want.amax());
        }
    }
    assert!(scale > 0.5);
    assert!(worst < 2e-3 * scale, "{worst}");
}

#[test]
fn outgoing_variable_stays_zero_for_linear_data() {
    let spec = SystemSpec::ex1();
    let chars = Characteristics::new(&spec).unwrap();
    let sol = solve_exact(&spec, &pulse(1.0), &BETA, 0.1, grid(&spec, 0.1), &cfg()).unwrap();
    let out = chars.outgoing()[0];
    for lv in 0..sol.levels.len() {
        for j in 0..sol.grid.nx {
            let w = &chars.l * sol.value(lv, j);
            assert!(w[out].abs() < 1e-12);
        }
    }
}

#[test]
fn self_convergence_is_second_order() {
    let spec = SystemSpec::ex1_nonlinear();
    let eps = 0.2;
    let p = pulse(0.3);
    let g0 = grid(&spec, eps);
    let s0 = solve_exact(&spec, &p, &BETA, eps, g0, &cfg()).unwrap();
    let s1 = solve_exact(&spec, &p, &BETA, eps, g0.refined(), &cfg()).unwrap();
    let s2 = solve_exact(&spec, &p, &BETA, eps, g0.refined().refined(), &cfg()).unwrap();
    let e0 = s0.sup_diff(&s1).unwrap();
    let e1 = s1.sup_diff(&s2).unwrap();
    let order = (e0 / e1).log2();
    assert!(order >= 1.7, "{e0} {e1} {order}");
}

#[test]
fn boundary_condition_is_met() {
    let spec = SystemSpec::ex1_nonlinear();
    let eps = 0.1;
    let p = pulse(0.3);
    let sol = solve_exact(&spec, &p, &BETA, eps, grid(&spec, eps), &cfg()).unwrap();
    let res = residual_norms(&sol, &spec, &p, &BETA).unwrap();
    assert!(res.bc_residual_sup <= 1e-10, "{res:?}");
    assert!(sol.stats.bc_residual_max <= 1e-10);
}

#[test]
fn pde_residual_shrinks_with_the_grid() {
    let spec = SystemSpec::ex1_nonlinear();
    let eps = 0.2;
    let p = pulse(0.3);
    let c = ExactConfig { store_levels: usize::MAX, ..cfg() };
    let g = FineGrid::for_eps(&spec, 1.0, eps, &c).unwrap();
    let r0 = residual_norms(&solve_exact(&spec, &p, &BETA, eps, g, &c).unwrap(), &spec, &p, &BETA).unwrap();
    let r1 = residual_norms(&solve_exact(&spec, &p, &BETA, eps, g.refined(), &c).unwrap(), &spec, &p, &BETA).unwrap();
    assert!(r0.pde_residual_sup > 0.0);
    assert!(r1.pde_residual_sup < 0.4 * r0.pde_residual_sup, "{r0:?} {r1:?}");
}

#[test]
fn picard_agrees_with_direct_march() {
    let spec = SystemSpec::ex1_nonlinear();
    let eps = 0.2;
    let p = pulse(0.3);
    let g = grid(&spec, eps);
    let tol = 1e-10;
    let direct = solve_exact(&spec, &p, &BETA, eps, g, &cfg()).unwrap();
    let (pic, log) = picard_solve_singular(&spec, &p, &BETA, eps, g, &cfg(), tol, 40).unwrap();
    assert!(direct.sup_diff(&pic).unwrap() < 5.0 * tol);
    assert!(log.max_ratio(1) < 1.0);
}

#[test]
fn picard_ratios_are_uniform_in_eps() {
    let spec = SystemSpec::ex1_nonlinear();
    let p = pulse(0.3);
    let ratio = |eps: f64| {
        let (_, log) = picard_solve_singular(&spec, &p, &BETA, eps, grid(&spec, eps), &cfg(), 1e-9, 40).unwrap();
        log.max_ratio(1)
    };
    let (a, b) = (ratio(0.2), ratio(0.1));
    assert!(a > 0.0 && b > 0.0);
    assert!(a.max(b) / a.min(b) < 2.0, "{a} {b}");
}

#[test]
fn reruns_are_bitwise_equal() {
    let spec = SystemSpec::ex1_nonlinear();
    let p = pulse(0.3);
    let g = grid(&spec, 0.2);
    let a = solve_exact(&spec, &p, &BETA, 0.2, g, &cfg()).unwrap();
    let b = solve_exact(&spec, &p, &BETA, 0.2, g, &cfg()).unwrap();
    assert_eq!(a.levels, b.levels);
}

#[test]
fn oracle_rejects_nonlinear_systems() {
    let spec = SystemSpec::ex1_nonlinear();
    assert!(matches!(linear_oracle(&spec, &pulse(1.0), &BETA, 0.1, 1.0, 0.5), Err(Error::Contract(_))));
}

#[test]
fn validity_ball_is_enforced() {
    let spec = SystemSpec::ex1_nonlinear();
    let c = ExactConfig { delta: 0.05, ..cfg() };
    let g = FineGrid::for_eps(&spec, 1.0, 0.2, &c).unwrap();
    let r = solve_exact(&spec, &pulse(1.0), &BETA, 0.2, g, &c);
    assert!(matches!(r, Err(Error::ValidityBall(_))));
}

#[test]
fn higher_dimensions_are_rejected() {
    let spec = SystemSpec::ex1();
    let mut spec2 = spec.clone();
    spec2.d = 2;
    assert!(Characteristics::new(&spec2).is_err());
    assert!(solve_exact(&spec, &pulse(1.0), &[1.0, 0.0], 0.1, grid(&spec, 0.1), &cfg()).is_err());
}

#[test]
fn solution_container_roundtrips() {
    let spec = SystemSpec::ex1_nonlinear();
    let sol = solve_exact(&spec, &pulse(0.3), &BETA, 0.2, grid(&spec, 0.2), &cfg()).unwrap();
    let dir = std::env::temp_dir().join(format!("pulse-fsl-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sol.bin");
    write_solution(&sol, &path).unwrap();
    let back = read_solution(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back.levels, sol.levels);
    assert_eq!(back.times, sol.times);
    assert_eq!(back.grid, sol.grid);
}

#[test]
fn small_amplitude_departs_quadratically_from_the_oracle() {
    let nonlinear = SystemSpec::ex1_nonlinear();
    let linear = SystemSpec::ex1();
    let eps = 0.2;
    let g = grid(&nonlinear, eps);
    let gap = |a: f64| {
        let n = solve_exact(&nonlinear, &pulse(a), &BETA, eps, g, &cfg()).unwrap();
        let l = solve_exact(&linear, &pulse(a), &BETA, eps, g, &cfg()).unwrap();
        n.sup_diff(&l).unwrap() / (a * a)
    };
    let (g1, g2) = (gap(0.02), gap(0.01));
    assert!(g1 > 0.0 && (g1 / g2 - 1.0).abs() < 0.1, "{g1} {g2}");
}

#[test]
fn disturbance_stays_inside_the_domain_of_dependence() {
    let spec = SystemSpec::ex1_nonlinear();
    let g = grid(&spec, 0.1);
    let sol = solve_exact(&spec, &pulse(0.3), &BETA, 0.1, g, &cfg()).unwrap();
    let speed = Characteristics::new(&spec).unwrap().max_speed();
    let mut outside = 0.0f64;
    let mut checked = 0;
    for (lv, &t) in sol.times.iter().enumerate() {
        for j in 0..g.nx {
            if g.x(j) > speed * t + 0.05 {
                outside = outside.max(sol.value(lv, j).amax());
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
    assert!(outside < 1e-8 * sol.sup_norm(), "{outside:e}");
}

#[test]
fn oracle_data_has_second_order_residual() {
    let spec = SystemSpec::ex1();
    let eps = 0.2;
    let c = ExactConfig { store_levels: usize::MAX, ..cfg() };
    let residual = |g: FineGrid| {
        let mut sol = solve_exact(&spec, &BoundaryPulse::zero(2), &BETA, eps, g, &c).unwrap();
        for (lv, &t) in sol.times.clone().iter().enumerate() {
            for j in 0..g.nx {
                let u = linear_oracle(&spec, &pulse(1.0), &BETA, eps, t, g.x(j)).unwrap();
                for k in 0..3 {
                    sol.levels[lv][k * g.nx + j] = u[k];
                }
            }
        }
        residual_norms(&sol, &spec, &pulse(1.0), &BETA).unwrap()
    };
    let g = FineGrid::for_eps(&spec, 1.0, eps, &c).unwrap();
    let (r0, r1) = (residual(g), residual(g.refined()));
    let order = (r0.pde_residual_sup / r1.pde_residual_sup).log2();
    assert!(order > 1.7, "{r0:?} {r1:?}");
    assert!(r1.bc_residual_sup < 1e-14);
}
