use nalgebra::DVector;
use rayon::prelude::*;

use super::signal::{moment_zero, nontransversal_product, CutoffKernel, ThetaSignal};
use super::typef::{apply_R_infinity, remove_resonant, CorrectorRep, TypeFFunction};
use crate::error::{Error, Result};
use crate::hyperbolic_model::PhaseTable;
use crate::interp;
use crate::profile_solver::{InteractionCoeffs, ProfileSet};

/// Cutoff parameter and kernel used for the corrector.
#[derive(Debug, Clone, Copy)]
pub struct CorrectorOptions {
    pub p: f64,
    pub kernel: CutoffKernel,
    pub quad_tol: f64,
}

impl CorrectorOptions {
    pub fn new(p: f64) -> CorrectorOptions {
        CorrectorOptions { p, kernel: CutoffKernel::Smoothstep5, quad_tol: 1e-9 }
    }
}

struct NodeSignals {
    /// `sigma^n_{c,p}` per flattened component.
    prev: Vec<ThetaSignal>,
    /// `d_theta sigma^{n+1}_{c,p}`.
    next_theta: Vec<ThetaSignal>,
    /// `d_t sigma^{n+1}_{c,p}`.
    next_t: Vec<ThetaSignal>,
}

fn row_signal(set: &ProfileSet, mode: usize, k: usize, t: f64, x: f64) -> Result<ThetaSignal> {
    ThetaSignal::new(set.grid.theta_max, set.theta_row(mode, k, t, x)?)
}

fn node_signals(
    prev: &ProfileSet,
    next: &ProfileSet,
    table: &PhaseTable,
    opts: &CorrectorOptions,
    t: f64,
    x: f64,
) -> Result<NodeSignals> {
    let g = next.grid;
    let h = g.dt();
    let (ta, tb) = if t - h < 0.0 {
        (t, t + h)
    } else if t + h > g.t_max {
        (t - h, t)
    } else {
        (t - h, t + h)
    };
    let mut out = NodeSignals { prev: vec![], next_theta: vec![], next_t: vec![] };
    for c in table.components() {
        let mz = |s: ThetaSignal| moment_zero(&s, opts.p, opts.kernel);
        out.prev.push(mz(row_signal(prev, c.mode, c.k, t, x)?)?);
        out.next_theta.push(mz(row_signal(next, c.mode, c.k, t, x)?)?.derivative());
        let a = row_signal(next, c.mode, c.k, ta, x)?;
        let b = row_signal(next, c.mode, c.k, tb, x)?;
        out.next_t.push(mz(b.axpy(-1.0, &a)?.scaled(1.0 / (tb - ta)))?);
    }
    Ok(out)
}

/// The interaction terms driving the corrector at one slow point `(t, x_d)`,
/// before removal of the resonant part.
pub fn corrector_source(
    prev: &ProfileSet,
    next: &ProfileSet,
    coeffs: &InteractionCoeffs,
    table: &PhaseTable,
    opts: &CorrectorOptions,
    t: f64,
    x: f64,
) -> Result<TypeFFunction> {
    let comps = table.components();
    let comp_phase: Vec<usize> = comps.iter().map(|c| c.mode).collect();
    let omegas: Vec<f64> = table.modes.iter().map(|m| m.omega).collect();
    let mut f = TypeFFunction::new(comp_phase.clone(), omegas);
    let sig = node_signals(prev, next, table, opts, t, x)?;
    let live = |c: usize| table.modes[comp_phase[c]].is_incoming();
    let n = comps.len();
    for i in 0..n {
        let own = comp_phase[i];
        for k in (0..n).filter(|&k| live(k) && comp_phase[k] != own) {
            // tangential transport of other phases; only d_t survives since
            // profiles do not depend on y
            let v = coeffs.v[0][(i, k)];
            if v != 0.0 {
                f.add_single(i, sig.next_t[k].clone(), comp_phase[k], v)?;
            }
            let e = coeffs.e[(i, k)];
            if e != 0.0 {
                f.add_single(i, sig.prev[k].clone(), comp_phase[k], -e)?;
            }
        }
        for a in (0..n).filter(|&a| live(a)) {
            for b in (0..n).filter(|&b| live(b)) {
                let w = coeffs.dd[i][(a, b)];
                if w == 0.0 {
                    continue;
                }
                let (pa, pb) = (comp_phase[a], comp_phase[b]);
                if pa == pb {
                    if pa == own {
                        continue;
                    }
                    let prod = nontransversal_product(&sig.prev[a], &sig.next_theta[b], opts.p, opts.kernel)?;
                    f.add_single(i, prod, pa, w)?;
                } else {
                    f.add_product(i, sig.prev[a].clone(), pa, sig.next_theta[b].clone(), pb, w)?;
                }
            }
        }
    }
    Ok(f)
}

/// `U^1_p = -R_infinity((I - E) G_p)` at one slow point.
pub fn build_corrector(
    prev: &ProfileSet,
    next: &ProfileSet,
    coeffs: &InteractionCoeffs,
    table: &PhaseTable,
    opts: &CorrectorOptions,
    t: f64,
    x: f64,
) -> Result<CorrectorRep> {
    if prev.grid != next.grid {
        return Err(Error::Contract("profile iterates live on different grids".into()));
    }
    let g = corrector_source(prev, next, coeffs, table, opts, t, x)?;
    let mut rep = apply_R_infinity(&remove_resonant(&g), opts.p)?;
    rep.quad_tol = opts.quad_tol;
    rep.scale(-1.0);
    Ok(rep)
}

/// Corrector representations on a coarse `(t, x_d)` lattice, bilinearly
/// interpolated in between.
#[derive(Debug, Clone)]
pub struct CorrectorField {
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    pub nt: usize,
    pub nx: usize,
    pub reps: Vec<CorrectorRep>,
    /// `r` of each flattened component.
    pub r: Vec<DVector<f64>>,
}

impl CorrectorField {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        prev: &ProfileSet,
        next: &ProfileSet,
        coeffs: &InteractionCoeffs,
        table: &PhaseTable,
        opts: &CorrectorOptions,
        t_range: (f64, f64),
        x_range: (f64, f64),
        nt: usize,
        nx: usize,
    ) -> Result<CorrectorField> {
        if nt < 2 || nx < 2 {
            return Err(Error::Config("corrector lattice needs at least 2 x 2 nodes".into()));
        }
        let node = |i: usize, n: usize, r: (f64, f64)| r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64;
        let reps = (0..nt * nx)
            .into_par_iter()
            .map(|q| {
                let (it, ix) = (q / nx, q % nx);
                build_corrector(prev, next, coeffs, table, opts, node(it, nt, t_range), node(ix, nx, x_range))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = table.components().into_iter().map(|c| table.r(c).clone()).collect();
        Ok(CorrectorField { t_range, x_range, nt, nx, reps, r })
    }

    pub fn is_empty(&self) -> bool {
        self.reps.iter().all(|r| r.is_empty())
    }

    /// `sum_i U^1_i(t, x_d, theta0, xi_d) r_i`.
    pub fn eval(&self, t: f64, x: f64, theta0: f64, xi_d: f64) -> Result<DVector<f64>> {
        let n = self.r[0].len();
        let mut out = DVector::zeros(n);
        if self.is_empty() {
            return Ok(out);
        }
        let ht = (self.t_range.1 - self.t_range.0) / (self.nt - 1) as f64;
        let hx = (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64;
        let (Some((it, ft)), Some((ix, fx))) = (
            interp::locate(self.t_range.0, ht, self.nt, t),
            interp::locate(self.x_range.0, hx, self.nx, x),
        ) else {
            return Err(Error::Contract(format!("({t}, {x}) lies outside the corrector lattice")));
        };
        for (a, b, w) in [
            (it, ix, (1.0 - ft) * (1.0 - fx)),
            (it + 1, ix, ft * (1.0 - fx)),
            (it, ix + 1, (1.0 - ft) * fx),
            (it + 1, ix + 1, ft * fx),
        ] {
            if w == 0.0 {
                continue;
            }
            let vals = self.reps[a * self.nx + b].eval_all(theta0, xi_d)?;
            for (v, r) in vals.iter().zip(&self.r) {
                out.axpy(w * v, r, 1.0);
            }
        }
        Ok(out)
    }
}
