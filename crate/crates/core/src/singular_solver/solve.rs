use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::{Characteristics, ExactConfig, FineGrid};
use crate::error::{Error, Result};
use crate::hyperbolic_model::SystemSpec;
use crate::linalg::{fd_weights, lagrange_weights};
use crate::profile_solver::BoundaryPulse;

/// Solver statistics.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub newton_iter_max: usize,
    pub bc_residual_max: f64,
    pub inner_iter_max: usize,
    pub eps_u_max: f64,
}

/// Reference solution on stored time levels; each level holds `u` component
/// by component, `level[c * nx + j] = u_c(t, x_j)`.
#[derive(Debug, Clone)]
pub struct FineSolution {
    pub eps: f64,
    pub grid: FineGrid,
    pub n: usize,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub stats: SolveStats,
}

impl FineSolution {
    pub fn value(&self, level: usize, j: usize) -> DVector<f64> {
        let nx = self.grid.nx;
        DVector::from_iterator(self.n, (0..self.n).map(|c| self.levels[level][c * nx + j]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Sup of the difference over levels stored by both solutions at equal
    /// times, sampling `other` at the nodes of `self`.
    pub fn sup_diff(&self, other: &FineSolution) -> Result<f64> {
        let ratio = (other.grid.nx - 1) / (self.grid.nx - 1);
        if ratio * (self.grid.nx - 1) != other.grid.nx - 1 {
            return Err(Error::Contract("grids are not nested".into()));
        }
        let mut worst: f64 = 0.0;
        let mut matched = 0;
        for (a, &ta) in self.times.iter().enumerate() {
            let Some(b) = other.times.iter().position(|&tb| (tb - ta).abs() < 1e-12 * (1.0 + ta)) else { continue };
            matched += 1;
            for c in 0..self.n {
                for j in 0..self.grid.nx {
                    let x = self.levels[a][c * self.grid.nx + j];
                    let y = other.levels[b][c * other.grid.nx + j * ratio];
                    worst = worst.max((x - y).abs());
                }
            }
        }
        if matched == 0 {
            return Err(Error::Contract("solutions share no stored time level".into()));
        }
        Ok(worst)
    }
}

/// Successive differences of the Picard iteration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PicardLog {
    pub diffs: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl PicardLog {
    /// Largest ratio after the first `skip` iterations.
    pub fn max_ratio(&self, skip: usize) -> f64 {
        self.ratios.iter().skip(skip).fold(0.0, |a: f64, &r| a.max(r))
    }
}

struct Stepper<'a> {
    spec: &'a SystemSpec,
    chars: Characteristics,
    pulse: &'a BoundaryPulse,
    eps: f64,
    grid: FineGrid,
    cfg: ExactConfig,
    tau: f64,
    /// Interpolation stencil `(start, weights)` of each characteristic foot.
    feet: Vec<Vec<(usize, [f64; 6])>>,
    /// First-derivative weights, by position of the node in its 7-point stencil.
    fd: Vec<[f64; 7]>,
    incoming: Vec<usize>,
}

const INNER_TOL: f64 = 1e-14;
const INNER_MAX: usize = 60;

impl<'a> Stepper<'a> {
    fn new(
        spec: &'a SystemSpec,
        pulse: &'a BoundaryPulse,
        tau: f64,
        eps: f64,
        grid: FineGrid,
        cfg: ExactConfig,
    ) -> Result<Stepper<'a>> {
        let chars = Characteristics::new(spec)?;
        let incoming = chars.incoming();
        if incoming.len() != spec.p {
            return Err(Error::Structural(format!(
                "{} incoming characteristics but p = {} boundary conditions",
                incoming.len(),
                spec.p
            )));
        }
        if pulse.p() != spec.p {
            return Err(Error::Config(format!("pulse has {} amplitudes, expected p = {}", pulse.p(), spec.p)));
        }
        let nx = grid.nx;
        let dx = grid.dx();
        let dt = grid.dt();
        let courant = chars.max_speed() * dt / dx;
        if courant > 1.0 {
            return Err(Error::Cfl(courant));
        }
        let feet = chars
            .lambda
            .iter()
            .map(|&lam| {
                (0..nx)
                    .map(|j| {
                        let s = (j as f64 - lam * dt / dx).clamp(0.0, (nx - 1) as f64);
                        let start = (s.floor() as isize - 2).clamp(0, nx as isize - 6) as usize;
                        let nodes: Vec<f64> = (0..6).map(|q| (start + q) as f64).collect();
                        let w = lagrange_weights(s, &nodes);
                        (start, [w[0], w[1], w[2], w[3], w[4], w[5]])
                    })
                    .collect()
            })
            .collect();
        let nodes: Vec<f64> = (0..7).map(|q| q as f64).collect();
        let fd = (0..7)
            .map(|c| {
                let w = fd_weights(c as f64, &nodes, 1);
                let mut a = [0.0; 7];
                for q in 0..7 {
                    a[q] = w[q] / dx;
                }
                a
            })
            .collect();
        Ok(Stepper { spec, chars, pulse, eps, grid, cfg, tau, feet, fd, incoming })
    }

    fn n(&self) -> usize {
        self.spec.n
    }

    fn u_from_w(&self, w: &[f64]) -> Vec<f64> {
        let (n, nx) = (self.n(), self.grid.nx);
        let mut u = vec![0.0; n * nx];
        for c in 0..n {
            for i in 0..n {
                let rci = self.chars.r[(c, i)];
                if rci == 0.0 {
                    continue;
                }
                for j in 0..nx {
                    u[c * nx + j] += rci * w[i * nx + j];
                }
            }
        }
        u
    }

    fn dx_u(&self, u: &[f64]) -> Vec<f64> {
        let nx = self.grid.nx;
        let mut du = vec![0.0; u.len()];
        for c in 0..self.n() {
            let row = &u[c * nx..(c + 1) * nx];
            for j in 0..nx {
                let start = (j as isize - 3).clamp(0, nx as isize - 7) as usize;
                let w = &self.fd[j - start];
                du[c * nx + j] = (0..7).map(|q| w[q] * row[start + q]).sum();
            }
        }
        du
    }

    /// Characteristic source `L0 [-(A(eps v) - A(0)) d_x u + F0 w]`, where `v`
    /// is the coefficient state and `w` the source state.
    fn source(&self, u: &[f64], coef: &[f64], src: &[f64]) -> Vec<f64> {
        let (n, nx) = (self.n(), self.grid.nx);
        let du = self.dx_u(u);
        let da = &self.spec.da[0];
        let f0 = &self.spec.f0;
        let l = &self.chars.l;
        let mut s = vec![0.0; n * nx];
        let mut v = vec![0.0; n];
        for j in 0..nx {
            v.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..n {
                let ck = self.eps * coef[k * nx + j];
                if ck == 0.0 {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n {
                        v[a] -= ck * da[k][(a, b)] * du[b * nx + j];
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    v[a] += f0[(a, b)] * src[b * nx + j];
                }
            }
            for i in 0..n {
                s[i * nx + j] = (0..n).map(|a| l[(i, a)] * v[a]).sum();
            }
        }
        s
    }

    /// Semi-Lagrangian trapezoidal update of every value not fixed by a
    /// boundary condition.
    fn transport(&self, w_old: &[f64], s_old: &[f64], s_new: &[f64], w_new: &mut [f64]) {
        let (n, nx) = (self.n(), self.grid.nx);
        let half_dt = 0.5 * self.grid.dt();
        for i in 0..n {
            let lam = self.chars.lambda[i];
            let wi = &w_old[i * nx..(i + 1) * nx];
            let si = &s_old[i * nx..(i + 1) * nx];
            for j in 0..nx {
                if (lam > 0.0 && j == 0) || (lam < 0.0 && j == nx - 1) {
                    continue;
                }
                let (start, w) = &self.feet[i][j];
                let mut a = 0.0;
                let mut b = 0.0;
                for q in 0..6 {
                    a += w[q] * wi[start + q];
                    b += w[q] * si[start + q];
                }
                w_new[i * nx + j] = a + half_dt * (b + s_new[i * nx + j]);
            }
        }
    }

    /// Newton solve for the incoming values at `x = 0`; returns iterations and residual.
    fn boundary(&self, w: &mut [f64], t: f64, frozen: Option<&[f64]>) -> Result<(usize, f64)> {
        let (n, nx) = (self.n(), self.grid.nx);
        let g = self.pulse.oscillatory(self.tau, t, self.eps);
        let r = &self.chars.r;
        let r_in = r.select_columns(self.incoming.iter());
        let frozen_b = frozen.map(|f| {
            let uf = DVector::from_iterator(n, (0..n).map(|c| f[c * nx]));
            self.spec.b_at(&(uf * self.eps))
        });
        let node = |w: &[f64]| DVector::from_iterator(n, (0..n).map(|i| w[i * nx]));
        let residual = |w: &[f64]| -> (DVector<f64>, DVector<f64>) {
            let u = r * node(w);
            let b = match &frozen_b {
                Some(b) => b.clone(),
                None => self.spec.b_at(&(&u * self.eps)),
            };
            (&b * &u - &g, u)
        };
        let (mut res, mut u) = residual(w);
        let mut norm = res.amax();
        let mut iters = 0;
        while norm > self.cfg.newton_tol {
            if iters >= self.cfg.newton_max_iter {
                return Err(Error::Newton { t, residual: norm });
            }
            iters += 1;
            let jac = match &frozen_b {
                Some(b) => b * &r_in,
                None => {
                    let mut j = self.spec.b_at(&(&u * self.eps));
                    if let Some(db) = &self.spec.db {
                        for (k, m) in db.iter().enumerate() {
                            let col = (m * &u) * self.eps;
                            for a in 0..self.spec.p {
                                j[(a, k)] += col[a];
                            }
                        }
                    }
                    j * &r_in
                }
            };
            let step = jac
                .lu()
                .solve(&(-&res))
                .ok_or(Error::SingularReflection(0.0))?;
            let base: Vec<f64> = self.incoming.iter().map(|&i| w[i * nx]).collect();
            let mut mu = 1.0;
            loop {
                for (q, &i) in self.incoming.iter().enumerate() {
                    w[i * nx] = base[q] + mu * step[q];
                }
                let (r2, u2) = residual(w);
                if r2.amax() < norm || mu < 1e-3 {
                    res = r2;
                    u = u2;
                    break;
                }
                mu *= 0.5;
            }
            norm = res.amax();
        }
        Ok((iters, norm))
    }

    fn outflow(&self, w: &mut [f64]) {
        let nx = self.grid.nx;
        for (i, &lam) in self.chars.lambda.iter().enumerate() {
            if lam < 0.0 {
                w[i * nx + nx - 1] = 0.0;
            }
        }
    }

    /// March from zero data. With `frozen`, coefficients, source and boundary
    /// operator are taken from that solution (all time levels stored).
    fn march(&self, frozen: Option<&FineSolution>) -> Result<FineSolution> {
        let (n, nx) = (self.n(), self.grid.nx);
        let dt = self.grid.dt();
        let stride = if frozen.is_some() { 1 } else { self.grid.stride };
        let mut w = vec![0.0; n * nx];
        let u0 = vec![0.0; n * nx];
        let mut s = match frozen {
            Some(f) => self.source(&u0, &f.levels[0], &f.levels[0]),
            None => vec![0.0; n * nx],
        };
        let mut stats = SolveStats::default();
        let mut steps = vec![0];
        let mut times = vec![0.0];
        let mut levels = vec![u0];
        let mut w_new = vec![0.0; n * nx];
        for step in 0..self.grid.steps {
            let t_new = (step + 1) as f64 * dt;
            let fz = frozen.map(|f| f.levels[step + 1].as_slice());
            let mut s_new = s.clone();
            self.transport(&w, &s, &s_new, &mut w_new);
            self.outflow(&mut w_new);
            let (it, _) = self.boundary(&mut w_new, t_new, fz)?;
            stats.newton_iter_max = stats.newton_iter_max.max(it);
            let mut inner = 0;
            loop {
                inner += 1;
                let u = self.u_from_w(&w_new);
                s_new = match fz {
                    Some(f) => self.source(&u, f, f),
                    None => self.source(&u, &u, &u),
                };
                let prev = w_new.clone();
                self.transport(&w, &s, &s_new, &mut w_new);
                let (it, _) = self.boundary(&mut w_new, t_new, fz)?;
                stats.newton_iter_max = stats.newton_iter_max.max(it);
                let diff = prev.iter().zip(&w_new).fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()));
                let size = w_new.iter().fold(1.0, |a: f64, x| a.max(x.abs()));
                if diff <= INNER_TOL * size {
                    break;
                }
                if inner >= INNER_MAX {
                    return Err(Error::Contract(format!("implicit step at t = {t_new:.6} did not settle ({diff:.2e})")));
                }
            }
            stats.inner_iter_max = stats.inner_iter_max.max(inner);
            let u = self.u_from_w(&w_new);
            s = match fz {
                Some(f) => self.source(&u, f, f),
                None => self.source(&u, &u, &u),
            };
            let eps_u = self.eps * u.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
            stats.eps_u_max = stats.eps_u_max.max(eps_u);
            if eps_u > self.cfg.delta {
                return Err(Error::ValidityBall(eps_u));
            }
            let bc = self.bc_residual(&u, t_new, fz);
            stats.bc_residual_max = stats.bc_residual_max.max(bc);
            std::mem::swap(&mut w, &mut w_new);
            if (step + 1) % stride == 0 || step + 1 == self.grid.steps {
                steps.push(step + 1);
                times.push(t_new);
                levels.push(u);
            }
        }
        Ok(FineSolution { eps: self.eps, grid: self.grid, n, steps, times, levels, stats })
    }

    fn bc_residual(&self, u: &[f64], t: f64, frozen: Option<&[f64]>) -> f64 {
        let (n, nx) = (self.n(), self.grid.nx);
        let u0 = DVector::from_iterator(n, (0..n).map(|c| u[c * nx]));
        let coef = match frozen {
            Some(f) => DVector::from_iterator(n, (0..n).map(|c| f[c * nx])),
            None => u0.clone(),
        };
        (self.spec.b_at(&(coef * self.eps)) * u0 - self.pulse.oscillatory(self.tau, t, self.eps)).amax()
    }
}

/// Boundary frequency `tau` of a `d = 1` problem.
fn tau_of(beta: &[f64]) -> Result<f64> {
    match beta {
        [tau] => Ok(*tau),
        _ => Err(Error::Contract("the reference solver needs a single boundary frequency".into())),
    }
}

/// Solve `du/dt + A(eps u) du/dx = F0 u`, `B(eps u) u = G(t, tau (t - t_c) / eps)`
/// on `[0, T] x [0, X]` from zero data.
pub fn solve_exact(
    spec: &SystemSpec,
    pulse: &BoundaryPulse,
    beta: &[f64],
    eps: f64,
    grid: FineGrid,
    cfg: &ExactConfig,
) -> Result<FineSolution> {
    Stepper::new(spec, pulse, tau_of(beta)?, eps, grid, *cfg)?.march(None)
}

/// Picard iteration on the linearized problems: coefficients, source and
/// boundary operator frozen at the previous iterate. All time levels are kept.
pub fn picard_solve_singular(
    spec: &SystemSpec,
    pulse: &BoundaryPulse,
    beta: &[f64],
    eps: f64,
    grid: FineGrid,
    cfg: &ExactConfig,
    tol: f64,
    max_iter: usize,
) -> Result<(FineSolution, PicardLog)> {
    let grid = FineGrid { stride: 1, ..grid };
    let stepper = Stepper::new(spec, pulse, tau_of(beta)?, eps, grid, *cfg)?;
    let n = spec.n;
    let zero_levels = vec![vec![0.0; n * grid.nx]; grid.steps + 1];
    let mut current = FineSolution {
        eps,
        grid,
        n,
        steps: (0..=grid.steps).collect(),
        times: (0..=grid.steps).map(|s| s as f64 * grid.dt()).collect(),
        levels: zero_levels,
        stats: SolveStats::default(),
    };
    let mut log = PicardLog::default();
    let mut growing = 0;
    for _ in 0..max_iter {
        let next = stepper.march(Some(&current))?;
        let diff = next.sup_diff(&current)?;
        let ratio = match log.diffs.last() {
            Some(&d) if d > 0.0 => diff / d,
            _ => 0.0,
        };
        log.diffs.push(diff);
        log.ratios.push(ratio);
        growing = if log.diffs.len() > 1 && ratio >= 1.0 { growing + 1 } else { 0 };
        if growing >= 3 {
            return Err(Error::NonContraction(format!("T too large for the fixed-point regime (ratio {ratio:.3})")));
        }
        current = next;
        if diff < tol {
            return Ok((current, log));
        }
    }
    Err(Error::NonContraction(format!(
        "no convergence in {max_iter} iterations (last difference {:.3e})",
        log.diffs.last().copied().unwrap_or(f64::NAN)
    )))
}

/// Closed-form solution of the constant-coefficient problem by tracing
/// characteristics back to the boundary.
pub fn linear_oracle(
    spec: &SystemSpec,
    pulse: &BoundaryPulse,
    beta: &[f64],
    eps: f64,
    t: f64,
    x: f64,
) -> Result<DVector<f64>> {
    let zero_f = spec.f0.iter().all(|&v| v == 0.0);
    if !spec.is_linear() || !zero_f {
        return Err(Error::Contract("linear oracle needs dA = 0, dB = 0 and F0 = 0".into()));
    }
    let tau = tau_of(beta)?;
    let chars = Characteristics::new(spec)?;
    let incoming = chars.incoming();
    let m: DMatrix<f64> = &spec.b0 * chars.r.select_columns(incoming.iter());
    let lu = m.lu();
    let mut u = DVector::zeros(spec.n);
    for (q, &i) in incoming.iter().enumerate() {
        let t0 = t - x / chars.lambda[i];
        if t0 <= 0.0 {
            continue;
        }
        let wi = lu
            .solve(&pulse.oscillatory(tau, t0, eps))
            .ok_or(Error::SingularReflection(0.0))?;
        u += chars.r.column(i) * wi[q];
    }
    Ok(u)
}

/// Sup norms of the interior and boundary residuals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub pde_residual_sup: f64,
    pub bc_residual_sup: f64,
}

/// Second-order central-difference residual of the system at interior nodes
/// of consecutive stored levels, and the boundary residual at every level.
pub fn residual_norms(sol: &FineSolution, spec: &SystemSpec, pulse: &BoundaryPulse, beta: &[f64]) -> Result<ResidualNorms> {
    let tau = tau_of(beta)?;
    let nx = sol.grid.nx;
    let dx = sol.grid.dx();
    let mut pde: f64 = 0.0;
    for lv in 1..sol.levels.len().saturating_sub(1) {
        let (a, b) = (lv - 1, lv + 1);
        if sol.steps[b] - sol.steps[a] != 2 * (sol.steps[lv] - sol.steps[a]) {
            continue;
        }
        let ht = sol.times[b] - sol.times[a];
        for j in 1..nx - 1 {
            let u = sol.value(lv, j);
            let ut = (sol.value(b, j) - sol.value(a, j)) / ht;
            let ux = (sol.value(lv, j + 1) - sol.value(lv, j - 1)) / (2.0 * dx);
            let a1 = spec.coef_at(1, &(&u * sol.eps));
            let r = ut + a1 * ux - &spec.f0 * &u;
            pde = pde.max(r.amax());
        }
    }
    let mut bc: f64 = 0.0;
    for (lv, &t) in sol.times.iter().enumerate() {
        let u0 = sol.value(lv, 0);
        let r = spec.b_at(&(&u0 * sol.eps)) * &u0 - pulse.oscillatory(tau, t, sol.eps);
        bc = bc.max(r.amax());
    }
    Ok(ResidualNorms { pde_residual_sup: pde, bc_residual_sup: bc })
}
