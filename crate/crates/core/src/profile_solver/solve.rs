use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coeffs::InteractionCoeffs;
use super::grid::GridSpec;
use super::profiles::ProfileSet;
use super::pulse::BoundaryPulse;
use crate::error::{Error, Result};
use crate::hyperbolic_model::{Component, PhaseTable, SystemSpec};
use crate::interp;
use crate::linalg;

/// Solver for `B(0) (sum_I sigma r) = G - B(0) (sum_O sigma r)`.
#[derive(Debug, Clone)]
pub struct ReflectionSolver {
    incoming: Vec<Component>,
    outgoing: Vec<Component>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    b_out: DMatrix<f64>,
    pub min_singular_value: f64,
}

impl ReflectionSolver {
    pub fn new(spec: &SystemSpec, table: &PhaseTable) -> Result<ReflectionSolver> {
        let comps = table.components();
        let incoming: Vec<Component> = comps.iter().copied().filter(|c| table.modes[c.mode].is_incoming()).collect();
        let outgoing: Vec<Component> = comps.iter().copied().filter(|c| !table.modes[c.mode].is_incoming()).collect();
        if incoming.len() != spec.p {
            return Err(Error::Structural(format!(
                "{} incoming eigen-directions but p = {} boundary conditions",
                incoming.len(),
                spec.p
            )));
        }
        let cols: Vec<DVector<f64>> = incoming.iter().map(|&c| &spec.b0 * table.r(c)).collect();
        let m = DMatrix::from_columns(&cols);
        let sv = linalg::singular_values(&m);
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin <= 1e-12 * sv[0].max(1.0) {
            return Err(Error::SingularReflection(smin));
        }
        let out_cols: Vec<DVector<f64>> = outgoing.iter().map(|&c| &spec.b0 * table.r(c)).collect();
        let b_out = if out_cols.is_empty() { DMatrix::zeros(spec.p, 0) } else { DMatrix::from_columns(&out_cols) };
        Ok(ReflectionSolver { incoming, outgoing, lu: m.lu(), b_out, min_singular_value: smin })
    }

    pub fn incoming(&self) -> &[Component] {
        &self.incoming
    }

    pub fn outgoing(&self) -> &[Component] {
        &self.outgoing
    }

    /// Incoming boundary values, in the order of `incoming()`.
    pub fn solve(&self, g: &DVector<f64>, outgoing_traces: &DVector<f64>) -> DVector<f64> {
        let rhs = g - &self.b_out * outgoing_traces;
        self.lu.solve(&rhs).expect("reflection matrix was checked to be invertible")
    }
}

/// Incoming boundary values for one boundary datum and given outgoing traces.
pub fn boundary_reflection_solve(
    spec: &SystemSpec,
    table: &PhaseTable,
    g: &DVector<f64>,
    outgoing_traces: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(ReflectionSolver::new(spec, table)?.solve(g, outgoing_traces))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaScheme {
    /// First-order upwind with interface speeds; needs `max|v| dx <= dtheta`.
    Upwind,
    /// Second-order semi-Lagrangian: trapezoidal feet, cubic interpolation.
    SemiLagrangian,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: ThetaScheme,
    /// Bound on `max|d_theta v| * X` for the theta-speed `v`.
    pub gradient_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 40, scheme: ThetaScheme::SemiLagrangian, gradient_cap: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub diff_sup: f64,
    pub ratio: f64,
}

/// Result of the profile iteration: the last iterate, the one before it, and the log.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub profiles: ProfileSet,
    pub previous: ProfileSet,
    pub log: Vec<IterationLog>,
}

impl ProfileRun {
    pub fn final_ratio(&self) -> f64 {
        self.log.last().map_or(0.0, |l| l.ratio)
    }

    pub fn write_log(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for l in &self.log {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    pub sup: f64,
    pub dx: f64,
    pub dtheta: f64,
    /// `sup / (dx + dtheta)`.
    pub constant: f64,
}

/// Everything needed to iterate the profile equations on a grid.
pub struct ProfileProblem<'a> {
    pub table: &'a PhaseTable,
    pub coeffs: &'a InteractionCoeffs,
    pub pulse: &'a BoundaryPulse,
    pub grid: GridSpec,
    pub options: SolverOptions,
    /// `boundary[m][k][it * ntheta + ik]`, empty for outgoing modes.
    boundary: Vec<Vec<Vec<f64>>>,
}

struct ModeData<'b> {
    nu: usize,
    speed: &'b [f64],
    /// `e_block[l][k] = e^{(m,k)}_{(m,l)}`.
    e_block: Vec<Vec<f64>>,
}

impl<'a> ProfileProblem<'a> {
    pub fn new(
        spec: &SystemSpec,
        table: &'a PhaseTable,
        coeffs: &'a InteractionCoeffs,
        pulse: &'a BoundaryPulse,
        grid: GridSpec,
        options: SolverOptions,
    ) -> Result<ProfileProblem<'a>> {
        if pulse.p() != spec.p {
            return Err(Error::Config(format!("pulse has {} amplitudes, expected p = {}", pulse.p(), spec.p)));
        }
        let reflect = ReflectionSolver::new(spec, table)?;
        let zero_out = DVector::zeros(reflect.outgoing().len());
        let mut boundary: Vec<Vec<Vec<f64>>> = table
            .modes
            .iter()
            .map(|m| if m.is_incoming() { vec![vec![0.0; grid.nt * grid.ntheta]; m.nu] } else { vec![] })
            .collect();
        for it in 0..grid.nt {
            for ik in 0..grid.ntheta {
                let g = pulse.value(grid.t(it), grid.theta(ik));
                let vals = reflect.solve(&g, &zero_out);
                for (q, c) in reflect.incoming().iter().enumerate() {
                    boundary[c.mode][c.k][it * grid.ntheta + ik] = vals[q];
                }
            }
        }
        Ok(ProfileProblem { table, coeffs, pulse, grid, options, boundary })
    }

    fn mode_data(&self, m: usize) -> ModeData<'_> {
        let comps = self.table.components();
        let first = comps.iter().position(|c| c.mode == m).unwrap();
        let nu = self.table.modes[m].nu;
        let e_block = (0..nu)
            .map(|l| (0..nu).map(|k| self.coeffs.e[(first + l, first + k)]).collect())
            .collect();
        ModeData { nu, speed: &self.coeffs.speed[m], e_block }
    }

    pub fn zero_set(&self) -> Result<ProfileSet> {
        ProfileSet::zeros(self.grid, self.table, self.pulse.center)
    }

    /// Largest `|d_theta v| * X` of the theta-speed generated by `set`.
    pub fn gradient_indicator(&self, set: &ProfileSet) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for m in set.modes.iter().filter(|m| m.is_stored()) {
            let md = self.mode_data(m.mode);
            let rows = g.nt * g.nx;
            let local = (0..rows)
                .into_par_iter()
                .map(|b| {
                    let v = speed_row(&md, &m.sigma, b * g.ntheta, g.ntheta);
                    let mut w: f64 = 0.0;
                    for i in 1..g.ntheta - 1 {
                        w = w.max(((v[i + 1] - v[i - 1]) / (2.0 * g.dtheta())).abs());
                    }
                    w
                })
                .reduce(|| 0.0, f64::max);
            worst = worst.max(local);
        }
        worst * g.x_max
    }

    /// One step of the profile iteration: transport each incoming profile
    /// along the rays of its characteristic field with theta-speed and
    /// source frozen at `prev`.
    pub fn picard_step(&self, prev: &ProfileSet) -> Result<ProfileSet> {
        let g = self.grid;
        let indicator = self.gradient_indicator(prev);
        if indicator >= self.options.gradient_cap {
            return Err(Error::PreShockHorizon(indicator));
        }
        let mut next = self.zero_set()?;
        for (m, out_mode) in next.modes.iter_mut().enumerate() {
            if !out_mode.is_stored() {
                continue;
            }
            let md = self.mode_data(m);
            let prev_sigma = &prev.modes[m].sigma;
            let bnd = &self.boundary[m];
            let block = g.block();
            let mut per_ray: Vec<Vec<&mut [f64]>> = (0..g.nt).map(|_| Vec::with_capacity(md.nu)).collect();
            for buf in out_mode.sigma.iter_mut() {
                for (it, ch) in buf.chunks_mut(block).enumerate() {
                    per_ray[it].push(ch);
                }
            }
            per_ray.into_par_iter().enumerate().try_for_each(|(it, mut out)| {
                let prev_ray: Vec<&[f64]> = prev_sigma.iter().map(|s| &s[it * block..(it + 1) * block]).collect();
                let bnd_row: Vec<&[f64]> =
                    bnd.iter().map(|b| &b[it * g.ntheta..(it + 1) * g.ntheta]).collect();
                march_ray(&g, &md, self.options.scheme, &prev_ray, &bnd_row, &mut out)
            })?;
        }
        Ok(next)
    }

    /// Iterate from zero until successive iterates differ by less than `tol`.
    pub fn solve(&self) -> Result<ProfileRun> {
        let mut current = self.zero_set()?;
        let mut previous: Option<ProfileSet> = None;
        let mut log = Vec::new();
        let mut last_diff = f64::NAN;
        let mut growing = 0;
        for iter in 1..=self.options.max_iter {
            // only two iterates are kept alive at any time
            drop(previous.take());
            let next = self.picard_step(&current)?;
            let diff = next.sup_diff(&current);
            let ratio = if iter == 1 || last_diff == 0.0 { 0.0 } else { diff / last_diff };
            log.push(IterationLog { iter, diff_sup: diff, ratio });
            if iter > 1 && ratio >= 1.0 {
                growing += 1;
                if growing >= 3 {
                    return Err(Error::NonContraction(format!(
                        "difference ratio >= 1 for 3 consecutive iterations (last {ratio:.3})"
                    )));
                }
            } else {
                growing = 0;
            }
            if next.outgoing_sup() != 0.0 {
                return Err(Error::Contract("outgoing profile became nonzero".into()));
            }
            last_diff = diff;
            previous = Some(current);
            current = next;
            if diff < self.options.tol {
                break;
            }
        }
        current.iterations = log.len();
        current.diffs = log.iter().map(|l| l.diff_sup).collect();
        current.ratios = log.iter().map(|l| l.ratio).collect();
        let previous = previous.unwrap_or_else(|| current.clone());
        Ok(ProfileRun { profiles: current, previous, log })
    }

    /// Finite-difference residual of the nonlinear profile equations at `set`:
    /// centered at `x_{j+1/2}` along each ray, central differences in theta.
    pub fn residual(&self, set: &ProfileSet) -> ResidualReport {
        let g = self.grid;
        let dx = g.dx();
        let dth = g.dtheta();
        let mut worst: f64 = 0.0;
        for m in set.modes.iter().filter(|m| m.is_stored()) {
            let md = self.mode_data(m.mode);
            let local = (0..g.nt)
                .into_par_iter()
                .map(|it| {
                    let mut w: f64 = 0.0;
                    for ix in 0..g.nx - 1 {
                        let b0 = g.idx(it, ix, 0);
                        let b1 = g.idx(it, ix + 1, 0);
                        let v0 = speed_row(&md, &m.sigma, b0, g.ntheta);
                        let v1 = speed_row(&md, &m.sigma, b1, g.ntheta);
                        for l in 0..md.nu {
                            let s = &m.sigma[l];
                            for i in 1..g.ntheta - 1 {
                                let dxs = (s[b1 + i] - s[b0 + i]) / dx;
                                let th0 = (s[b0 + i + 1] - s[b0 + i - 1]) / (2.0 * dth);
                                let th1 = (s[b1 + i + 1] - s[b1 + i - 1]) / (2.0 * dth);
                                let adv = 0.5 * (v0[i] * th0 + v1[i] * th1);
                                let mut src = 0.0;
                                for k in 0..md.nu {
                                    src += md.e_block[l][k] * 0.5 * (m.sigma[k][b0 + i] + m.sigma[k][b1 + i]);
                                }
                                w = w.max((dxs + adv - src).abs());
                            }
                        }
                    }
                    w
                })
                .reduce(|| 0.0, f64::max);
            worst = worst.max(local);
        }
        ResidualReport { sup: worst, dx, dtheta: dth, constant: worst / (dx + dth) }
    }
}

fn speed_row(md: &ModeData<'_>, sigma: &[Vec<f64>], base: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for k in 0..md.nu {
        let c = md.speed[k];
        if c == 0.0 {
            continue;
        }
        for (vi, s) in v.iter_mut().zip(&sigma[k][base..base + n]) {
            *vi += c * s;
        }
    }
    v
}

fn source_rows(md: &ModeData<'_>, sigma: &[&[f64]], base: usize, n: usize) -> Vec<Vec<f64>> {
    (0..md.nu)
        .map(|l| {
            let mut s = vec![0.0; n];
            for k in 0..md.nu {
                let e = md.e_block[l][k];
                if e == 0.0 {
                    continue;
                }
                for (si, x) in s.iter_mut().zip(&sigma[k][base..base + n]) {
                    *si += e * x;
                }
            }
            s
        })
        .collect()
}

/// March one ray block from `x = 0` to `x = X`.
fn march_ray(
    g: &GridSpec,
    md: &ModeData<'_>,
    scheme: ThetaScheme,
    prev: &[&[f64]],
    boundary: &[&[f64]],
    out: &mut [&mut [f64]],
) -> Result<()> {
    let n = g.ntheta;
    let dx = g.dx();
    let dth = g.dtheta();
    let th0 = -g.theta_max;
    for l in 0..md.nu {
        out[l][..n].copy_from_slice(boundary[l]);
    }
    let speed_at = |base: usize| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for k in 0..md.nu {
            let c = md.speed[k];
            if c == 0.0 {
                continue;
            }
            for (vi, s) in v.iter_mut().zip(&prev[k][base..base + n]) {
                *vi += c * s;
            }
        }
        v
    };
    let mut v_cur = speed_at(0);
    let mut s_cur = source_rows(md, prev, 0, n);
    for ix in 0..g.nx - 1 {
        let b0 = ix * n;
        let b1 = (ix + 1) * n;
        let v_next = speed_at(b1);
        let s_next = source_rows(md, prev, b1, n);
        match scheme {
            ThetaScheme::SemiLagrangian => {
                let mut feet = vec![0.0; n];
                for i in 0..n {
                    let th = th0 + i as f64 * dth;
                    let v1 = v_next[i];
                    let guess = th - dx * v1;
                    let v0 = interp::cubic_zero_padded(&v_cur, th0, dth, guess);
                    feet[i] = th - 0.5 * dx * (v0 + v1);
                }
                for l in 0..md.nu {
                    let (done, rest) = out[l].split_at_mut(b1);
                    let row = &done[b0..b0 + n];
                    let new = &mut rest[..n];
                    for i in 0..n {
                        let f = feet[i];
                        let transported = interp::cubic_zero_padded(row, th0, dth, f);
                        let src_foot = interp::cubic_zero_padded(&s_cur[l], th0, dth, f);
                        new[i] = transported + 0.5 * dx * (src_foot + s_next[l][i]);
                    }
                }
            }
            ThetaScheme::Upwind => {
                let vmax = v_cur.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let courant = vmax * dx / dth;
                if courant > 1.0 {
                    return Err(Error::Cfl(courant));
                }
                let lam = dx / dth;
                for l in 0..md.nu {
                    let (done, rest) = out[l].split_at_mut(b1);
                    let row = &done[b0..b0 + n];
                    let new = &mut rest[..n];
                    for i in 0..n {
                        let left = if i > 0 { row[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { row[i + 1] } else { 0.0 };
                        let vl = if i > 0 { 0.5 * (v_cur[i - 1] + v_cur[i]) } else { v_cur[i] };
                        let vr = if i + 1 < n { 0.5 * (v_cur[i] + v_cur[i + 1]) } else { v_cur[i] };
                        let flux = vl.max(0.0) * (row[i] - left) + vr.min(0.0) * (right - row[i]);
                        new[i] = row[i] - lam * flux + dx * s_cur[l][i];
                    }
                }
            }
        }
        v_cur = v_next;
        s_cur = s_next;
    }
    Ok(())
}

/// Iterate the profile equations to convergence.
pub fn solve_profiles(
    spec: &SystemSpec,
    table: &PhaseTable,
    coeffs: &InteractionCoeffs,
    pulse: &BoundaryPulse,
    grid: GridSpec,
    options: SolverOptions,
) -> Result<ProfileRun> {
    ProfileProblem::new(spec, table, coeffs, pulse, grid, options)?.solve()
}
