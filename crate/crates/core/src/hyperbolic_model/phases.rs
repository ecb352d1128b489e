use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::system::SystemSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, EigenCluster};

/// Point `zeta = (tau - i gamma, eta)` of the frequency half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub tau: f64,
    pub gamma: f64,
    pub eta: Vec<f64>,
}

impl FrequencyPoint {
    pub fn new(tau: f64, gamma: f64, eta: Vec<f64>) -> Self {
        FrequencyPoint { tau, gamma, eta }
    }

    pub fn norm(&self) -> f64 {
        (self.tau * self.tau + self.gamma * self.gamma + self.eta.iter().map(|e| e * e).sum::<f64>()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let r = self.norm();
        FrequencyPoint {
            tau: self.tau / r,
            gamma: self.gamma / r,
            eta: self.eta.iter().map(|e| e / r).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Incoming,
    Outgoing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseMode {
    pub index: usize,
    pub omega: f64,
    pub nu: usize,
    pub r: Vec<DVector<f64>>,
    pub l: Vec<DVector<f64>>,
    pub group_velocity: Vec<f64>,
    pub direction: Direction,
    /// Coefficients of the characteristic field
    /// `X = d/dx_d + sum_{j<d} x_field[j] d/dx_j`.
    pub x_field: Vec<f64>,
}

impl PhaseMode {
    pub fn is_incoming(&self) -> bool {
        self.direction == Direction::Incoming
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTable {
    pub beta: Vec<f64>,
    pub modes: Vec<PhaseMode>,
    pub projectors: Vec<DMatrix<f64>>,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

/// A single eigen-direction `(mode, k)` in flattened order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub mode: usize,
    pub k: usize,
}

impl PhaseTable {
    pub fn n(&self) -> usize {
        self.modes.iter().map(|m| m.nu).sum()
    }

    pub fn components(&self) -> Vec<Component> {
        self.modes
            .iter()
            .flat_map(|m| (0..m.nu).map(move |k| Component { mode: m.index, k }))
            .collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn r(&self, c: Component) -> &DVector<f64> {
        &self.modes[c.mode].r[c.k]
    }

    pub fn l(&self, c: Component) -> &DVector<f64> {
        &self.modes[c.mode].l[c.k]
    }

    /// Rescale `r_{m,k} -> s r_{m,k}` and `l_{m,k} -> l_{m,k}/s`, one factor per
    /// component in flattened order. Biorthogonality and projectors are kept.
    pub fn rescaled(&self, factors: &[f64]) -> PhaseTable {
        let mut t = self.clone();
        let mut i = 0;
        for m in t.modes.iter_mut() {
            for k in 0..m.nu {
                m.r[k] *= factors[i];
                m.l[k] /= factors[i];
                i += 1;
            }
        }
        t
    }

    /// Matrix whose columns are all `r_{m,k}` in flattened order.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.modes.iter().flat_map(|m| m.r.iter().cloned()).collect();
        DMatrix::from_columns(&cols)
    }

    pub fn projector_sum_error(&self) -> f64 {
        let n = self.n();
        let mut s = DMatrix::zeros(n, n);
        for p in &self.projectors {
            s += p;
        }
        (s - DMatrix::<f64>::identity(n, n)).abs().max()
    }

    pub fn projector_orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, pa) in self.projectors.iter().enumerate() {
            for (b, pb) in self.projectors.iter().enumerate() {
                let prod = pa * pb;
                let target = if a == b { pa.clone() } else { DMatrix::zeros(pa.nrows(), pa.ncols()) };
                worst = worst.max((prod - target).abs().max());
            }
        }
        worst
    }

    pub fn biorthogonality_error(&self) -> f64 {
        let comps = self.components();
        let mut worst: f64 = 0.0;
        for a in &comps {
            for b in &comps {
                let v = self.l(*a).dot(self.r(*b));
                let t = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((v - t).abs());
            }
        }
        worst
    }
}

fn split_beta(spec: &SystemSpec, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if beta.len() != spec.d {
        return Err(Error::Structural(format!("beta has length {}, expected d = {}", beta.len(), spec.d)));
    }
    if beta.iter().all(|&b| b == 0.0) {
        return Err(Error::Contract("beta must be nonzero".into()));
    }
    Ok((beta[0], beta[1..].to_vec()))
}

fn boundary_clusters(spec: &SystemSpec, beta: &[f64]) -> Result<Vec<EigenCluster>> {
    let (tau, eta) = split_beta(spec, beta)?;
    let m = spec.boundary_matrix(tau, &eta)?;
    linalg::real_eigen_clusters(&m, 1e-9).map_err(|_| Error::NotHyperbolic(beta.to_vec()))
}

/// Real roots `omega` of `det[tau I + sum eta_j A_j + omega A_d] = 0` with their
/// multiplicities, sorted ascending.
pub fn dispersion_roots(spec: &SystemSpec, beta: &[f64]) -> Result<Vec<(f64, usize)>> {
    let clusters = boundary_clusters(spec, beta)?;
    let mut roots: Vec<(f64, usize)> = clusters.iter().map(|c| (-c.value, c.basis.ncols())).collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(roots)
}

fn dominant_index(v: &DVector<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, x)| if x.abs() > acc.1 + 1e-12 { (i, x.abs()) } else { acc })
        .0
}

const FD_STEP: f64 = 1e-5;

/// Gradient of the eigenvalue branch of `sum xi_j A_j(0)` through `(xi0, lambda0)`,
/// tracked across the stencil by eigenspace overlap.
fn branch_gradient(spec: &SystemSpec, xi0: &[f64], base: &DMatrix<f64>, mode: usize) -> Result<Vec<f64>> {
    let q = linalg::orthonormalize(base);
    let nu = base.ncols();
    let mut grad = vec![0.0; spec.d];
    for j in 0..spec.d {
        let mut vals = [0.0; 2];
        for (s, sign) in [1.0, -1.0].iter().enumerate() {
            let mut xi = xi0.to_vec();
            xi[j] += sign * FD_STEP;
            let clusters = linalg::real_eigen_clusters(&spec.symbol(&xi), 1e-8).map_err(|e| {
                Error::BranchTracking { mode, detail: e.to_string() }
            })?;
            let mut scored: Vec<(f64, &EigenCluster)> = clusters
                .iter()
                .map(|c| {
                    let ov = linalg::singular_values(&(q.transpose() * &c.basis));
                    let score = if c.basis.ncols() == nu { ov.last().copied().unwrap_or(0.0) } else { 0.0 };
                    (score, c)
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            let best = scored[0];
            let runner = scored.get(1).map_or(0.0, |s| s.0);
            if best.0 < 0.9 || runner > 0.5 {
                return Err(Error::BranchTracking {
                    mode,
                    detail: format!("overlap {:.3} (runner-up {:.3}) in direction {j}", best.0, runner),
                });
            }
            vals[s] = best.1.value;
        }
        grad[j] = (vals[0] - vals[1]) / (2.0 * FD_STEP);
    }
    Ok(grad)
}

/// Phase table at the boundary frequency `beta = (tau, eta)`.
///
/// Modes are ordered by the dominant coordinate of their first eigenvector,
/// then by `omega`; `r_{m,k}` are orthonormal within each eigenspace and the
/// `l_{m,k}` are the rows of the inverse eigenvector matrix.
pub fn phase_table(spec: &SystemSpec, beta: &[f64]) -> Result<PhaseTable> {
    let (tau, eta) = split_beta(spec, beta)?;
    let mut clusters = boundary_clusters(spec, beta)?;
    clusters.sort_by(|a, b| {
        let ka = dominant_index(&a.basis.column(0).into_owned());
        let kb = dominant_index(&b.basis.column(0).into_owned());
        ka.cmp(&kb).then((-a.value).total_cmp(&-b.value))
    });
    let cols: Vec<DVector<f64>> = clusters
        .iter()
        .flat_map(|c| (0..c.basis.ncols()).map(move |k| c.basis.column(k).into_owned()))
        .collect();
    let rmat = DMatrix::from_columns(&cols);
    let lmat = rmat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Contract("eigenvector matrix is singular".into()))?;
    let bmat = spec.boundary_matrix(tau, &eta)?;
    let tilde: Vec<DMatrix<f64>> = (0..spec.d).map(|j| spec.tilde_coef(j)).collect::<Result<_>>()?;

    let mut modes = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    let mut offset = 0;
    for (idx, c) in clusters.iter().enumerate() {
        let nu = c.basis.ncols();
        let r: Vec<DVector<f64>> = (0..nu).map(|k| rmat.column(offset + k).into_owned()).collect();
        let l: Vec<DVector<f64>> = (0..nu).map(|k| lmat.row(offset + k).transpose()).collect();
        let mut proj = DMatrix::zeros(spec.n, spec.n);
        let mut lam = 0.0;
        for k in 0..nu {
            proj += &r[k] * l[k].transpose();
            lam += l[k].dot(&(&bmat * &r[k]));
        }
        let omega = -lam / nu as f64;
        let mut xi0 = eta.clone();
        xi0.push(omega);
        let base = DMatrix::from_columns(&r);
        let gv = branch_gradient(spec, &xi0, &base, idx)?;
        let direction = if *gv.last().unwrap() > 0.0 { Direction::Incoming } else { Direction::Outgoing };
        let x_field: Vec<f64> = tilde
            .iter()
            .map(|a| (0..nu).map(|k| l[k].dot(&(a * &r[k]))).sum::<f64>() / nu as f64)
            .collect();
        modes.push(PhaseMode { index: idx, omega, nu, r, l, group_velocity: gv, direction, x_field });
        projectors.push(proj);
        offset += nu;
    }
    let incoming = modes.iter().filter(|m| m.is_incoming()).map(|m| m.index).collect();
    let outgoing = modes.iter().filter(|m| !m.is_incoming()).map(|m| m.index).collect();
    Ok(PhaseTable { beta: beta.to_vec(), modes, projectors, incoming, outgoing })
}
