use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::hyperbolic_model::PhaseTable;
use crate::interp;

/// Points per direction of the slow interpolation stencil.
const STENCIL: usize = 4;

/// Profiles of one phase, stored along the rays of its characteristic field.
///
/// Values are indexed by `(t0, x_d, theta)` where `t0 = t - kappa x_d` is the
/// time at which the ray through `(t, x_d)` leaves the boundary; rays with
/// `t0 < 0` carry zero. Outgoing modes have empty storage (identically zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeProfiles {
    pub mode: usize,
    pub omega: f64,
    pub kappa: f64,
    pub incoming: bool,
    pub nu: usize,
    #[serde(skip)]
    pub sigma: Vec<Vec<f64>>,
}

impl ModeProfiles {
    pub fn is_stored(&self) -> bool {
        !self.sigma.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSet {
    pub grid: GridSpec,
    pub beta: Vec<f64>,
    /// Time at which the boundary phase vanishes.
    pub phase_origin: f64,
    pub modes: Vec<ModeProfiles>,
    pub iterations: usize,
    pub diffs: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl ProfileSet {
    pub fn zeros(grid: GridSpec, table: &PhaseTable, phase_origin: f64) -> Result<ProfileSet> {
        let mut modes = Vec::with_capacity(table.modes.len());
        for m in &table.modes {
            let kappa = m.x_field[0];
            if m.is_incoming() && !(kappa > 0.0) {
                return Err(Error::Contract(format!(
                    "incoming mode {} has non-positive time coefficient {kappa:.3e} in its characteristic field",
                    m.index
                )));
            }
            let sigma = if m.is_incoming() { vec![vec![0.0; grid.len()]; m.nu] } else { vec![] };
            modes.push(ModeProfiles { mode: m.index, omega: m.omega, kappa, incoming: m.is_incoming(), nu: m.nu, sigma });
        }
        Ok(ProfileSet {
            grid,
            beta: table.beta.clone(),
            phase_origin,
            modes,
            iterations: 0,
            diffs: vec![],
            ratios: vec![],
        })
    }

    /// Largest pointwise difference over all stored profiles.
    pub fn sup_diff(&self, other: &ProfileSet) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.modes.iter().zip(&other.modes) {
            for (sa, sb) in a.sigma.iter().zip(&b.sigma) {
                for (x, y) in sa.iter().zip(sb) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }

    pub fn sup_norm(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|m| m.sigma.iter())
            .flat_map(|s| s.iter())
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    /// Sup norm of the outgoing profiles.
    pub fn outgoing_sup(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| !m.incoming)
            .flat_map(|m| m.sigma.iter())
            .flat_map(|s| s.iter())
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    /// Largest value at `t <= t_cut` over all profiles.
    pub fn sup_before(&self, t_cut: f64) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for m in self.modes.iter().filter(|m| m.is_stored()) {
            for s in &m.sigma {
                for it in 0..g.nt {
                    for ix in 0..g.nx {
                        if g.t(it) + m.kappa * g.x(ix) > t_cut {
                            continue;
                        }
                        let base = g.idx(it, ix, 0);
                        for v in &s[base..base + g.ntheta] {
                            worst = worst.max(v.abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Largest magnitude at the two ends of the theta window.
    pub fn theta_edge_sup(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for s in self.modes.iter().flat_map(|m| m.sigma.iter()) {
            for b in 0..g.nt * g.nx {
                let row = &s[b * g.ntheta..(b + 1) * g.ntheta];
                worst = worst.max(row[0].abs()).max(row[g.ntheta - 1].abs());
            }
        }
        worst
    }

    /// Tensor cubic Lagrange weights in `(t0, x)` of the ray-grid nodes around
    /// `(t, x)`, or `None` when the ray starts before `t = 0`.
    fn corners(&self, mode: usize, t: f64, x: f64) -> Result<Option<Vec<(usize, usize, f64)>>> {
        let g = &self.grid;
        let tol = 1e-9;
        if t < -tol || t > g.t_max + tol || x < -tol || x > g.x_max + tol {
            return Err(Error::Contract(format!("point (t, x) = ({t}, {x}) is outside the profile grid")));
        }
        let m = &self.modes[mode];
        let x = x.clamp(0.0, g.x_max);
        let t0 = t - m.kappa * x;
        if t0 <= 0.0 {
            return Ok(None);
        }
        let (st, wt) = interp::clamped_stencil(g.nt, t0.min(g.t_max) / g.dt(), STENCIL);
        let (sx, wx) = interp::clamped_stencil(g.nx, x / g.dx(), STENCIL);
        let mut out = Vec::with_capacity(STENCIL * STENCIL);
        for (a, wa) in wt.iter().enumerate() {
            for (b, wb) in wx.iter().enumerate() {
                out.push((st + a, sx + b, wa * wb));
            }
        }
        Ok(Some(out))
    }

    /// `sigma_{m,k}(t, x_d, theta)`: cubic in `(t0, x_d)` and in `theta`,
    /// zero outside the theta window.
    pub fn sample(&self, mode: usize, k: usize, t: f64, x: f64, theta: f64) -> Result<f64> {
        let m = &self.modes[mode];
        if !m.is_stored() {
            return Ok(0.0);
        }
        let g = &self.grid;
        let Some(corners) = self.corners(mode, t, x)? else { return Ok(0.0) };
        let s = &m.sigma[k];
        let mut acc = 0.0;
        for (it, ix, w) in corners {
            if w == 0.0 {
                continue;
            }
            let base = g.idx(it, ix, 0);
            acc += w * interp::cubic_zero_padded(&s[base..base + g.ntheta], -g.theta_max, g.dtheta(), theta);
        }
        Ok(acc)
    }

    /// The whole theta row of `sigma_{m,k}` at `(t, x_d)`.
    pub fn theta_row(&self, mode: usize, k: usize, t: f64, x: f64) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut out = vec![0.0; g.ntheta];
        let m = &self.modes[mode];
        if !m.is_stored() {
            return Ok(out);
        }
        let Some(corners) = self.corners(mode, t, x)? else { return Ok(out) };
        let s = &m.sigma[k];
        for (it, ix, w) in corners {
            if w == 0.0 {
                continue;
            }
            let base = g.idx(it, ix, 0);
            for (o, v) in out.iter_mut().zip(&s[base..base + g.ntheta]) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Resample `sigma_{m,k}` onto the `(t, x_d, theta)` grid.
    pub fn grid_function(&self, mode: usize, k: usize) -> Result<GridFunction> {
        let g = self.grid;
        let mut values = vec![0.0; g.len()];
        for it in 0..g.nt {
            for ix in 0..g.nx {
                let row = self.theta_row(mode, k, g.t(it), g.x(ix))?;
                let base = g.idx(it, ix, 0);
                values[base..base + g.ntheta].copy_from_slice(&row);
            }
        }
        Ok(GridFunction { grid: g, values })
    }
}

/// Scalar function sampled on a `(t, x_d, theta)` grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> GridFunction {
        let mut values = vec![0.0; grid.len()];
        for it in 0..grid.nt {
            for ix in 0..grid.nx {
                for ik in 0..grid.ntheta {
                    values[grid.idx(it, ix, ik)] = f(grid.t(it), grid.x(ix), grid.theta(ik));
                }
            }
        }
        GridFunction { grid, values }
    }
}

/// `u^a(t, x_d) = sum_{m incoming} sum_k sigma_{m,k}(t, x_d, phi_m / eps) r_{m,k}`
/// with `phi_m = beta_0 (t - t_c) + eta.y + omega_m x_d`.
///
/// `point` is `(t, y_1, ..., y_{d-1}, x_d)`.
pub fn leading_order_eval(profiles: &ProfileSet, table: &PhaseTable, eps: f64, point: &[f64]) -> Result<DVector<f64>> {
    let d = table.beta.len();
    if point.len() != d + 1 {
        return Err(Error::Contract(format!("point has {} coordinates, expected d + 1 = {}", point.len(), d + 1)));
    }
    let t = point[0];
    let x = point[d];
    let mut phi0 = table.beta[0] * (t - profiles.phase_origin);
    for j in 1..d {
        phi0 += table.beta[j] * point[j];
    }
    let n = table.n();
    let mut u = DVector::zeros(n);
    for m in table.incoming.iter().copied() {
        let mode = &table.modes[m];
        let theta = (phi0 + mode.omega * x) / eps;
        for k in 0..mode.nu {
            let s = profiles.sample(m, k, t, x, theta)?;
            if s != 0.0 {
                u += &mode.r[k] * s;
            }
        }
    }
    Ok(u)
}
