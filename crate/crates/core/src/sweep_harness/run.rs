use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_rate, RateFit};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::hyperbolic_model::{phase_table, uniform_stability_scan, validate_system, PhaseTable, SystemSpec};
use crate::oscillatory_calculus::{CorrectorField, CorrectorOptions, CutoffKernel};
use crate::profile_solver::{
    leading_order_eval, BoundaryPulse, GridSpec, InteractionCoeffs, ProfileProblem, ProfileRun, SolverOptions,
};
use crate::singular_solver::{solve_exact, ExactConfig, FineGrid, FineSolution};

/// `M_1`: the smallest integer `>= d / 2 + 3`.
pub fn m1(d: usize) -> usize {
    (d as f64 / 2.0 + 3.0).ceil() as usize
}

/// Default exponent in `p = eps^b`.
pub fn default_b(d: usize) -> f64 {
    2.0 / (2.0 * m1(d) as f64 + 5.0)
}

/// Everything an eps-sweep needs.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spec: SystemSpec,
    pub beta: Vec<f64>,
    pub pulse: BoundaryPulse,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub exact: ExactConfig,
    pub eps: Vec<f64>,
    pub b: f64,
    /// `[t_min, t_max, x_min, x_max]`.
    pub window: [f64; 4],
    pub corrector: bool,
    pub corrector_nt: usize,
    pub corrector_nx: usize,
    pub cutoff: CutoffKernel,
    pub floor: f64,
    pub stability_density: usize,
    pub stability_threshold: f64,
    pub glancing_tol: f64,
    pub config_hash: String,
}

impl SweepConfig {
    pub fn from_config(cfg: &Config) -> Result<SweepConfig> {
        let spec = cfg.system_spec()?;
        let w = &cfg.sweep.window;
        let out = SweepConfig {
            pulse: cfg.pulse(spec.p)?,
            beta: cfg.beta().to_vec(),
            grid: cfg.grid()?,
            solver: SolverOptions {
                tol: cfg.profiles.tol,
                max_iter: cfg.profiles.max_iter,
                scheme: cfg.scheme()?,
                gradient_cap: cfg.profiles.gradient_cap,
            },
            exact: cfg.exact(),
            eps: cfg.sweep.eps.clone(),
            b: cfg.sweep.b.unwrap_or_else(|| default_b(spec.d)),
            window: [w[0], w[1], w[2], w[3]],
            corrector: cfg.sweep.corrector,
            corrector_nt: cfg.sweep.corrector_nt,
            corrector_nx: cfg.sweep.corrector_nx,
            cutoff: cfg.cutoff()?,
            floor: cfg.sweep.floor,
            stability_density: cfg.stability.density,
            stability_threshold: cfg.stability.threshold,
            glancing_tol: cfg.stability.glancing_tol,
            config_hash: cfg.hash(),
            spec,
        };
        out.check()?;
        Ok(out)
    }

    pub fn check(&self) -> Result<()> {
        if self.eps.windows(2).any(|w| w[1] >= w[0]) || self.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("eps list must lie in (0, 1) and decrease strictly".into()));
        }
        let [t0, t1, x0, x1] = self.window;
        let inside = |lo: f64, hi: f64, max: f64| 0.0 <= lo && lo < hi && hi <= max + 1e-12;
        if !inside(t0, t1, self.grid.t_max.min(self.exact.t_max)) || !inside(x0, x1, self.grid.x_max.min(self.exact.x_max)) {
            return Err(Error::Config("comparison window must lie inside both solver domains".into()));
        }
        Ok(())
    }

    pub fn p(&self, eps: f64) -> f64 {
        eps.powf(self.b)
    }
}

/// One eps of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub p: f64,
    pub err_leading_sup: f64,
    pub err_corrected_sup: f64,
    #[serde(rename = "err_L2")]
    pub err_l2: f64,
    /// Leading error below the configured floor.
    pub floor: bool,
    /// `ok` or the reason the row failed.
    pub status: String,
    #[serde(skip)]
    pub runtime_exact_s: f64,
    #[serde(skip)]
    pub runtime_eval_s: f64,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub b: f64,
    pub fit_leading: Option<RateFit>,
    pub fit_corrected: Option<RateFit>,
    /// Why a fit is missing.
    pub fit_notes: Vec<String>,
    pub profile_iterations: usize,
    pub profile_final_ratio: f64,
    pub corrector_empty: bool,
    pub config_hash: String,
    pub version: String,
}

impl SweepReport {
    pub fn ok_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_ok())
    }

    /// `err(eps_{i+1}) <= (1 + slack) err(eps_i)` along the leading errors.
    pub fn leading_decreasing(&self, slack: f64) -> bool {
        let errs: Vec<f64> = self.ok_rows().map(|r| r.err_leading_sup).collect();
        errs.len() == self.rows.len() && errs.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
    }

    pub fn smallest_eps_row(&self) -> Option<&SweepRow> {
        self.rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps))
    }
}

/// Errors of `approx` against `sol` over the window.
pub struct WindowErrors {
    pub leading_sup: f64,
    pub corrected_sup: f64,
    pub leading_l2: f64,
}

/// Shared, eps-independent part of a sweep.
pub struct SweepSetup {
    pub table: PhaseTable,
    pub coeffs: InteractionCoeffs,
    pub run: ProfileRun,
}

impl SweepSetup {
    pub fn new(cfg: &SweepConfig) -> Result<SweepSetup> {
        let report = validate_system(&cfg.spec)?;
        if !report.passed() {
            return Err(Error::Structural(format!("system validation failed: {report:?}")));
        }
        let scan = uniform_stability_scan(&cfg.spec, cfg.stability_density, cfg.glancing_tol)?;
        if !scan.uniformly_stable(cfg.stability_threshold) {
            return Err(Error::Structural(format!(
                "uniform Lopatinskii condition fails: min singular value {:.3e}",
                scan.min_singular_value
            )));
        }
        let table = phase_table(&cfg.spec, &cfg.beta)?;
        let coeffs = InteractionCoeffs::new(&cfg.spec, &table)?;
        let run = ProfileProblem::new(&cfg.spec, &table, &coeffs, &cfg.pulse, cfg.grid, cfg.solver)?.solve()?;
        Ok(SweepSetup { table, coeffs, run })
    }

    pub fn corrector(&self, cfg: &SweepConfig, eps: f64) -> Result<Option<CorrectorField>> {
        if !cfg.corrector {
            return Ok(None);
        }
        let [t0, t1, x0, x1] = cfg.window;
        let opts = CorrectorOptions { p: cfg.p(eps), kernel: cfg.cutoff, quad_tol: 1e-9 };
        let field = CorrectorField::build(
            &self.run.previous,
            &self.run.profiles,
            &self.coeffs,
            &self.table,
            &opts,
            (t0, t1),
            (x0, x1),
            cfg.corrector_nt,
            cfg.corrector_nx,
        )?;
        Ok(Some(field))
    }

    /// Leading-order and corrected errors on the fine-grid nodes in the window.
    pub fn window_errors(
        &self,
        cfg: &SweepConfig,
        sol: &FineSolution,
        corrector: Option<&CorrectorField>,
    ) -> Result<WindowErrors> {
        let [t0, t1, x0, x1] = cfg.window;
        let eps = sol.eps;
        let g = &sol.grid;
        let tol = 1e-12;
        let cols: Vec<usize> = (0..g.nx).filter(|&j| g.x(j) >= x0 - tol && g.x(j) <= x1 + tol).collect();
        let levels: Vec<usize> = (0..sol.times.len()).filter(|&l| sol.times[l] >= t0 - tol && sol.times[l] <= t1 + tol).collect();
        let skip_corrector = corrector.is_none_or(|c| c.is_empty());
        let per_level = levels
            .par_iter()
            .map(|&lv| {
                let t = sol.times[lv];
                let mut lead: f64 = 0.0;
                let mut corr: f64 = 0.0;
                let mut l2 = 0.0;
                for &j in &cols {
                    let x = g.x(j);
                    let u = sol.value(lv, j);
                    let ua = leading_order_eval(&self.run.profiles, &self.table, eps, &[t, x])?;
                    let e = (&u - &ua).amax();
                    lead = lead.max(e);
                    l2 += (&u - &ua).norm_squared();
                    let ec = if skip_corrector {
                        e
                    } else {
                        let theta0 = cfg.beta[0] * (t - self.run.profiles.phase_origin) / eps;
                        let u1: DVector<f64> = corrector.unwrap().eval(t, x, theta0, x / eps)?;
                        (&u - &ua - u1 * eps).amax()
                    };
                    corr = corr.max(ec);
                }
                Ok((lead, corr, l2))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = WindowErrors { leading_sup: 0.0, corrected_sup: 0.0, leading_l2: 0.0 };
        let mut sum = 0.0;
        for (a, b, c) in per_level {
            out.leading_sup = out.leading_sup.max(a);
            out.corrected_sup = out.corrected_sup.max(b);
            sum += c;
        }
        // rectangle rule over the stored nodes of the window
        let dt_store = if levels.len() > 1 { (t1 - t0) / (levels.len() - 1) as f64 } else { 1.0 };
        out.leading_l2 = (sum * dt_store * g.dx()).sqrt();
        Ok(out)
    }

    fn row(&self, cfg: &SweepConfig, eps: f64) -> SweepRow {
        let p = cfg.p(eps);
        let mut row = SweepRow {
            eps,
            p,
            err_leading_sup: f64::NAN,
            err_corrected_sup: f64::NAN,
            err_l2: f64::NAN,
            floor: false,
            status: "ok".into(),
            runtime_exact_s: 0.0,
            runtime_eval_s: 0.0,
        };
        let result = (|| -> Result<()> {
            let omega_max = self.table.modes.iter().fold(0.0, |a: f64, m| a.max(m.omega.abs()));
            let grid = FineGrid::for_eps(&cfg.spec, omega_max, eps, &cfg.exact)?;
            let start = Instant::now();
            let sol = solve_exact(&cfg.spec, &cfg.pulse, &cfg.beta, eps, grid, &cfg.exact)?;
            row.runtime_exact_s = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let corrector = self.corrector(cfg, eps)?;
            let errs = self.window_errors(cfg, &sol, corrector.as_ref())?;
            row.runtime_eval_s = start.elapsed().as_secs_f64();
            row.err_leading_sup = errs.leading_sup;
            row.err_corrected_sup = errs.corrected_sup;
            row.err_l2 = errs.leading_l2;
            row.floor = errs.leading_sup <= cfg.floor;
            Ok(())
        })();
        if let Err(e) = result {
            row.status = format!("failed: {e}");
        }
        row
    }
}

/// Run the eps-sweep: one profile solve, then one reference solve and error
/// evaluation per eps.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let setup = SweepSetup::new(cfg)?;
    let rows: Vec<SweepRow> = cfg.eps.par_iter().map(|&eps| setup.row(cfg, eps)).collect();
    let corrector_empty = match cfg.eps.last() {
        Some(&e) if cfg.corrector => setup.corrector(cfg, e)?.is_none_or(|c| c.is_empty()),
        _ => true,
    };
    Ok(assemble_report(cfg, rows, setup.run.log.len(), setup.run.final_ratio(), corrector_empty))
}

pub fn assemble_report(
    cfg: &SweepConfig,
    rows: Vec<SweepRow>,
    profile_iterations: usize,
    profile_final_ratio: f64,
    corrector_empty: bool,
) -> SweepReport {
    let mut fit_notes = Vec::new();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let mut fit = |name: &str, f: &dyn Fn(&SweepRow) -> f64| -> Option<RateFit> {
        let pts: Vec<(f64, f64, bool)> = ok.iter().map(|r| (r.eps, f(r), r.floor)).collect();
        match fit_rate(&pts) {
            Ok(fit) => Some(fit),
            Err(e) => {
                let floor = ok.iter().any(|r| r.floor);
                fit_notes.push(format!("{name}: {e}{}", if floor { " (floor)" } else { "" }));
                None
            }
        }
    };
    let fit_leading = fit("err_leading_sup", &|r| r.err_leading_sup);
    let fit_corrected = fit("err_corrected_sup", &|r| r.err_corrected_sup);
    SweepReport {
        rows,
        b: cfg.b,
        fit_leading,
        fit_corrected,
        fit_notes,
        profile_iterations,
        profile_final_ratio,
        corrector_empty,
        config_hash: cfg.config_hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}
