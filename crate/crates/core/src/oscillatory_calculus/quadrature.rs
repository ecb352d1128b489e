use super::signal::ThetaSignal;
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and |Kronrod - Gauss| on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`, bisecting the interval with the largest error estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (k, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, k, e)];
    let mut total = k;
    let mut err = e;
    let mut evals = 1;
    while err > tol {
        if evals > 20_000 {
            return Err(Error::Contract(format!("quadrature did not reach tolerance {tol:.1e} (error {err:.2e})")));
        }
        let (worst, _) = parts.iter().enumerate().fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pk, pe) = parts.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (k1, e1) = gk15(&f, pa, mid);
        let (k2, e2) = gk15(&f, mid, pb);
        total += k1 + k2 - pk;
        err += e1 + e2 - pe;
        parts.push((pa, mid, k1, e1));
        parts.push((mid, pb, k2, e2));
        evals += 2;
        if err <= tol {
            // recompute from scratch to shed accumulated rounding
            total = parts.iter().map(|p| p.2).sum();
            err = parts.iter().map(|p| p.3).sum();
        }
    }
    Ok(total)
}

/// Floor below which a signal is treated as zero when truncating integrals.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Interval of `s` where `theta0 + omega_i xi + s (omega - omega_i)` stays inside `[lo, hi]`.
fn s_interval(base: f64, alpha: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (lo - base) / alpha;
    let b = (hi - base) / alpha;
    (a.min(b), a.max(b))
}

/// `int_infinity^{xi_d} g(theta0 + omega_i xi_d + s (omega_l - omega_i))
///  h(theta0 + omega_i xi_d + s (omega_m - omega_i)) ds`
/// for pairwise distinct phase speeds.
pub fn transversal_integral(
    sig_l: &ThetaSignal,
    sig_m: &ThetaSignal,
    omega_i: f64,
    omega_l: f64,
    omega_m: f64,
    theta0: f64,
    xi_d: f64,
) -> Result<f64> {
    transversal_integral_tol(sig_l, sig_m, omega_i, omega_l, omega_m, theta0, xi_d, 1e-9)
}

#[allow(clippy::too_many_arguments)]
pub fn transversal_integral_tol(
    sig_l: &ThetaSignal,
    sig_m: &ThetaSignal,
    omega_i: f64,
    omega_l: f64,
    omega_m: f64,
    theta0: f64,
    xi_d: f64,
    tol: f64,
) -> Result<f64> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    if close(omega_l, omega_i) || close(omega_m, omega_i) || close(omega_l, omega_m) {
        return Err(Error::Contract(format!(
            "transversal integral needs distinct phase speeds, got {omega_i}, {omega_l}, {omega_m}"
        )));
    }
    let (Some((la, lb)), Some((ma, mb))) = (sig_l.envelope(ENVELOPE_FLOOR), sig_m.envelope(ENVELOPE_FLOOR)) else {
        return Ok(0.0);
    };
    let base = theta0 + omega_i * xi_d;
    let al = omega_l - omega_i;
    let am = omega_m - omega_i;
    let (l0, l1) = s_interval(base, al, la, lb);
    let (m0, m1) = s_interval(base, am, ma, mb);
    let lo = l0.max(m0).max(xi_d);
    let hi = l1.min(m1);
    if lo >= hi {
        return Ok(0.0);
    }
    let f = |s: f64| sig_l.eval(base + s * al) * sig_m.eval(base + s * am);
    // integrating from infinity down to xi_d flips the sign
    Ok(-integrate(f, lo, hi, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn integrates_gaussian_tail() {
        let v = integrate(|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12).unwrap();
        assert!((v - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_coincident_speeds() {
        let g = ThetaSignal::from_fn(12.0, 512, |t| (-t * t).exp()).unwrap();
        assert!(transversal_integral(&g, &g, 0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(transversal_integral(&g, &g, 1.0, 1.0, 2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_signal_gives_zero() {
        let g = ThetaSignal::from_fn(12.0, 512, |t| (-t * t).exp()).unwrap();
        let z = g.zeros_like();
        assert_eq!(transversal_integral(&g, &z, 0.0, 1.0, -1.0, 0.3, 0.2).unwrap(), 0.0);
    }
}
