use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::phases::{phase_table, FrequencyPoint};
use super::system::SystemSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

#[derive(Debug, Clone, Serialize)]
pub struct RegionDiagnostics {
    pub hyperbolic: bool,
    pub max_real_part: f64,
    pub eigenvector_condition: f64,
}

fn check_nonzero(tau: f64, eta: &[f64]) -> Result<()> {
    if tau == 0.0 && eta.iter().all(|&e| e == 0.0) {
        return Err(Error::Contract("(tau, eta) must be nonzero".into()));
    }
    Ok(())
}

/// `A(zeta) = -i A_d^{-1}((tau - i gamma) I + sum eta_j A_j)`.
pub fn script_a(spec: &SystemSpec, zeta: &FrequencyPoint) -> Result<CMatrix> {
    let n = spec.n;
    let inv = linalg::to_complex(&spec.a_d_inv()?);
    let mut m = CMatrix::identity(n, n) * Complex::new(zeta.tau, -zeta.gamma);
    for (j, &e) in zeta.eta.iter().enumerate() {
        m += linalg::to_complex(&spec.a0[j]) * Complex::new(e, 0.0);
    }
    Ok(inv * m * Complex::new(0.0, -1.0))
}

/// Whether `A(tau, eta)` is diagonalizable with purely imaginary spectrum.
pub fn hyperbolic_region_test(spec: &SystemSpec, tau: f64, eta: &[f64]) -> Result<RegionDiagnostics> {
    check_nonzero(tau, eta)?;
    // A = -i M with M real, so imaginary spectrum of A <=> real spectrum of M
    let m = spec.boundary_matrix(tau, eta)?;
    let ev = m.clone().complex_eigenvalues();
    let max_real_part = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let scale = linalg::frobenius_scale(&m);
    let (cond, diag) = match linalg::real_eigen_clusters(&m, 1e-10) {
        Ok(clusters) => {
            let cols: Vec<_> = clusters
                .iter()
                .flat_map(|c| (0..c.basis.ncols()).map(move |k| c.basis.column(k).into_owned()))
                .collect();
            let r = DMatrix::from_columns(&cols);
            (linalg::condition_number(&r), true)
        }
        Err(_) => (f64::INFINITY, false),
    };
    Ok(RegionDiagnostics {
        hyperbolic: diag && max_real_part < 1e-10 * scale && cond < 1e8,
        max_real_part,
        eigenvector_condition: cond,
    })
}

/// Scan `xi_d` for a branch with `tau + lambda_k(eta, xi_d) = 0` and
/// `d lambda_k / d xi_d = 0` simultaneously.
pub fn glancing_test(spec: &SystemSpec, tau: f64, eta: &[f64], tol: f64) -> Result<bool> {
    check_nonzero(tau, eta)?;
    let n = spec.n;
    let branch = |xd: f64| -> Vec<f64> {
        let mut xi = eta.to_vec();
        xi.push(xd);
        let ev = spec.symbol(&xi).complex_eigenvalues();
        let mut v: Vec<f64> = ev.iter().map(|z| z.re).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    // all real roots lie in |xi_d| <= |A_d^{-1}| (|tau| + sum |eta_j||A_j|)
    let inv_norm = linalg::singular_values(&spec.a_d_inv()?)[0];
    let mut bound = tau.abs();
    for (j, e) in eta.iter().enumerate() {
        bound += e.abs() * linalg::singular_values(&spec.a0[j])[0];
    }
    let radius = 1.5 * inv_norm * bound + 1.0;
    let samples = 4001;
    let h = 2.0 * radius / (samples - 1) as f64;
    let vals: Vec<Vec<f64>> = (0..samples).map(|i| branch(-radius + i as f64 * h)).collect();
    let deriv = |xd: f64, k: usize| -> f64 {
        let dh = 1e-6 * (1.0 + xd.abs());
        (branch(xd + dh)[k] - branch(xd - dh)[k]) / (2.0 * dh)
    };
    for k in 0..n {
        let f = |i: usize| tau + vals[i][k];
        for i in 1..samples - 1 {
            let (a, b, c) = (f(i - 1), f(i), f(i + 1));
            let sign_change = a.signum() != c.signum();
            let local_min = b.abs() <= a.abs() && b.abs() <= c.abs();
            if !(sign_change || local_min) {
                continue;
            }
            // golden-section minimization of |tau + lambda_k| on the bracket
            let (mut lo, mut hi) = (-radius + (i - 1) as f64 * h, -radius + (i + 1) as f64 * h);
            let g = |x: f64| (tau + branch(x)[k]).abs();
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let x1 = hi - phi * (hi - lo);
                let x2 = lo + phi * (hi - lo);
                if g(x1) < g(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            let x = 0.5 * (lo + hi);
            if g(x) < tol && deriv(x, k).abs() < tol.sqrt() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Orthonormal basis of the stable subspace of `A(zeta)` for `gamma > 0`.
pub fn stable_subspace(spec: &SystemSpec, zeta: &FrequencyPoint) -> Result<CMatrix> {
    if zeta.gamma <= 0.0 {
        return Err(Error::Contract("stable_subspace requires gamma > 0".into()));
    }
    let a = script_a(spec, zeta)?;
    let scale = a.norm().max(1e-300);
    let ev = a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Contract("complex Schur form did not converge".into()))?;
    let min_re = ev.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    if min_re < 1e-12 * scale.max(1.0) {
        return Err(Error::NearImaginary(min_re));
    }
    let basis = stable_basis_unchecked(&a)?;
    if basis.ncols() != spec.p {
        return Err(Error::StableDimension { found: basis.ncols(), expected: spec.p });
    }
    Ok(basis)
}

fn stable_basis_unchecked(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let sign = linalg::matrix_sign(a, 200)?;
    let proj = (CMatrix::identity(n, n) - sign) * Complex::new(0.5, 0.0);
    Ok(linalg::complex_range_basis(&proj, 1e-6))
}

/// Basis of `E^s` at a hyperbolic point with `gamma = 0`: the span of the
/// eigenvectors of the incoming modes.
pub fn incoming_basis(spec: &SystemSpec, tau: f64, eta: &[f64]) -> Result<CMatrix> {
    let mut beta = vec![tau];
    beta.extend_from_slice(eta);
    let table = phase_table(spec, &beta)?;
    let cols: Vec<_> = table
        .incoming
        .iter()
        .flat_map(|&m| table.modes[m].r.iter().cloned())
        .collect();
    if cols.is_empty() {
        return Ok(CMatrix::zeros(spec.n, 0));
    }
    let r = linalg::orthonormalize(&DMatrix::from_columns(&cols));
    Ok(linalg::to_complex(&r))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityScan {
    pub min_singular_value: f64,
    pub argmin: FrequencyPoint,
    pub points: usize,
    pub skipped_glancing: usize,
    pub warnings: Vec<String>,
}

impl StabilityScan {
    pub fn uniformly_stable(&self, threshold: f64) -> bool {
        self.min_singular_value > threshold
    }
}

/// Unit points `(tau, gamma, eta)` with `gamma >= 0`, from a product grid in
/// spherical coordinates with `density` samples per angle.
pub fn half_sphere_points(d: usize, density: usize) -> Vec<FrequencyPoint> {
    let density = density.max(2);
    let mut out = Vec::new();
    // gamma = cos(a0) with a0 in [0, pi/2]; the remaining (tau, eta) live on a
    // sphere of radius sin(a0) and dimension d - 1
    for i in 0..=density {
        let a0 = 0.5 * std::f64::consts::PI * i as f64 / density as f64;
        let gamma = a0.cos();
        let rad = a0.sin();
        if d == 1 {
            for tau in [rad, -rad] {
                out.push(FrequencyPoint::new(tau, gamma, vec![]));
                if rad == 0.0 {
                    break;
                }
            }
            continue;
        }
        for dir in super::system::sphere_directions(d, density) {
            out.push(FrequencyPoint::new(rad * dir[0], gamma, dir[1..].iter().map(|x| rad * x).collect()));
            if rad == 0.0 {
                break;
            }
        }
    }
    out
}

fn sigma_min_restricted(spec: &SystemSpec, basis: &CMatrix) -> f64 {
    let b = linalg::to_complex(&spec.b0) * basis;
    linalg::singular_values_c(&b).last().copied().unwrap_or(0.0)
}

/// Minimum over sampled unit frequencies with `gamma >= 0` of the smallest
/// singular value of `B(0)` restricted to the stable subspace.
pub fn uniform_stability_scan(spec: &SystemSpec, density: usize, glancing_tol: f64) -> Result<StabilityScan> {
    let mut best = f64::INFINITY;
    let mut argmin = FrequencyPoint::new(0.0, 1.0, vec![0.0; spec.d - 1]);
    let mut skipped = 0;
    let mut warnings = Vec::new();
    let pts = half_sphere_points(spec.d, density);
    for z in &pts {
        let basis = if z.gamma > 1e-12 {
            match stable_subspace(spec, z) {
                Ok(b) => b,
                Err(e) => {
                    warnings.push(format!("point {z:?}: {e}"));
                    continue;
                }
            }
        } else {
            if glancing_test(spec, z.tau, &z.eta, glancing_tol)? {
                skipped += 1;
                warnings.push(format!("glancing point {z:?} skipped"));
                continue;
            }
            let region = hyperbolic_region_test(spec, z.tau, &z.eta)?;
            if region.hyperbolic {
                incoming_basis(spec, z.tau, &z.eta)?
            } else {
                // mixed or elliptic boundary point: approach it from gamma > 0
                let zz = FrequencyPoint::new(z.tau, 1e-7, z.eta.clone());
                match stable_subspace(spec, &zz) {
                    Ok(b) => b,
                    Err(e) => {
                        warnings.push(format!("point {z:?}: {e}"));
                        continue;
                    }
                }
            }
        };
        if basis.ncols() != spec.p {
            return Err(Error::StableDimension { found: basis.ncols(), expected: spec.p });
        }
        let s = sigma_min_restricted(spec, &basis);
        if s < best {
            best = s;
            argmin = z.clone();
        }
    }
    Ok(StabilityScan {
        min_singular_value: best,
        argmin,
        points: pts.len(),
        skipped_glancing: skipped,
        warnings,
    })
}

/// Largest principal angle between the incoming eigenvector span at `beta`
/// and the stable subspace at `beta - i gamma`.
pub fn stable_limit_angle(spec: &SystemSpec, beta: &[f64], gamma: f64) -> Result<f64> {
    let inc = incoming_basis(spec, beta[0], &beta[1..])?;
    let st = stable_subspace(spec, &FrequencyPoint::new(beta[0], gamma, beta[1..].to_vec()))?;
    Ok(linalg::principal_angles(&inc, &st).into_iter().fold(0.0, f64::max))
}
