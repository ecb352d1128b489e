use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pulse_optics::config::Config;
use pulse_optics::hyperbolic_model::{phase_table, uniform_stability_scan, validate_system};
use pulse_optics::profile_solver::{write_profiles, InteractionCoeffs, ProfileProblem, SolverOptions};
use pulse_optics::singular_solver::{residual_norms, solve_exact, write_solution, FineGrid};
use pulse_optics::sweep_harness::{emit_report, run_sweep, ReportFormats, SweepConfig};

#[derive(Parser)]
#[command(name = "pulse-optics", version, about = "Reflected pulses in weakly nonlinear hyperbolic boundary problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural checks, phase table and uniform stability scan.
    Check(Common),
    /// Solve the profile equations.
    Profiles(Common),
    /// Run the fine-grid reference solver.
    Exact(Common),
    /// Compare approximate and reference solutions over a list of eps.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override the eps list, e.g. `--eps 0.1,0.05`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    eps: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Verdict {
    failures: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { failures: Vec::new() }
    }

    fn assert(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        println!("{} {what}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(what);
        }
    }
}

fn load(args: &Common) -> Result<Config> {
    let mut cfg = Config::load(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(eps) = &args.eps {
        cfg.sweep.eps = eps.clone();
    }
    Ok(cfg)
}

fn out_dir(args: &Common) -> Result<Option<&Path>> {
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(args.out.as_deref())
}

fn check(args: &Common, v: &mut Verdict) -> Result<()> {
    let cfg = load(args)?;
    let spec = cfg.system_spec()?;
    let report = validate_system(&spec)?;
    for c in &report.checks {
        v.assert(c.passed, format!("{}: {:.3e} {}", c.name, c.measured, c.detail));
    }
    let table = phase_table(&spec, cfg.beta())?;
    for (m, mode) in table.modes.iter().enumerate() {
        println!(
            "mode {m}: omega = {:+.12} multiplicity {} {}",
            mode.omega,
            mode.nu,
            if mode.is_incoming() { "incoming" } else { "outgoing" }
        );
    }
    v.assert(table.projector_sum_error() < 1e-12, format!("projector sum error {:.2e}", table.projector_sum_error()));
    let scan = uniform_stability_scan(&spec, cfg.stability.density, cfg.stability.glancing_tol)?;
    for w in &scan.warnings {
        println!("warning: {w}");
    }
    v.assert(
        scan.uniformly_stable(cfg.stability.threshold),
        format!("uniform stability: min singular value {:.6} over {} points", scan.min_singular_value, scan.points),
    );
    if let Some(dir) = out_dir(args)? {
        std::fs::write(dir.join("check.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn profiles(args: &Common, v: &mut Verdict) -> Result<()> {
    let cfg = load(args)?;
    let spec = cfg.system_spec()?;
    let table = phase_table(&spec, cfg.beta())?;
    let coeffs = InteractionCoeffs::new(&spec, &table)?;
    let pulse = cfg.pulse(spec.p)?;
    let opts = SolverOptions {
        tol: cfg.profiles.tol,
        max_iter: cfg.profiles.max_iter,
        scheme: cfg.scheme()?,
        gradient_cap: cfg.profiles.gradient_cap,
    };
    let problem = ProfileProblem::new(&spec, &table, &coeffs, &pulse, cfg.grid()?, opts)?;
    let run = problem.solve()?;
    for l in &run.log {
        println!("iteration {:3}: diff {:.3e} ratio {:.4}", l.iter, l.diff_sup, l.ratio);
    }
    v.assert(run.final_ratio() < 1.0, format!("contraction ratio {:.4}", run.final_ratio()));
    v.assert(run.profiles.outgoing_sup() < 1e-12, format!("outgoing sup {:.2e}", run.profiles.outgoing_sup()));
    v.assert(
        run.profiles.sup_before(0.0) == 0.0,
        format!("zero before the pulse arrives: {:.2e}", run.profiles.sup_before(0.0)),
    );
    let res = problem.residual(&run.profiles);
    println!("residual {:.3e} (dx {:.3e}, dtheta {:.3e}, C {:.3})", res.sup, res.dx, res.dtheta, res.constant);
    v.assert(res.sup.is_finite(), "finite fixed-point residual");
    if let Some(dir) = out_dir(args)? {
        write_profiles(&run.profiles, dir.join("profiles.bin"))?;
        run.write_log(dir.join("iterations.csv"))?;
    }
    Ok(())
}

fn exact(args: &Common, v: &mut Verdict) -> Result<()> {
    let cfg = load(args)?;
    let spec = cfg.system_spec()?;
    let pulse = cfg.pulse(spec.p)?;
    let table = phase_table(&spec, cfg.beta())?;
    let omega_max = table.modes.iter().fold(0.0, |a: f64, m| a.max(m.omega.abs()));
    let ecfg = cfg.exact();
    let dir = out_dir(args)?;
    let mut residuals = match dir {
        Some(d) => {
            let mut w = csv::Writer::from_path(d.join("residual.csv"))?;
            w.write_record(["eps", "nx", "steps", "pde_residual_sup", "bc_residual_sup"])?;
            Some(w)
        }
        None => None,
    };
    for &eps in &cfg.sweep.eps {
        let grid = FineGrid::for_eps(&spec, omega_max, eps, &ecfg)?;
        let start = std::time::Instant::now();
        let sol = solve_exact(&spec, &pulse, cfg.beta(), eps, grid, &ecfg)?;
        let res = residual_norms(&sol, &spec, &pulse, cfg.beta())?;
        println!(
            "eps {eps:.5}: nx {} steps {} sup {:.4e} |eps u| {:.3e} newton {} residual {:.3e} in {:.1} s",
            grid.nx,
            grid.steps,
            sol.sup_norm(),
            sol.stats.eps_u_max,
            sol.stats.newton_iter_max,
            res.pde_residual_sup,
            start.elapsed().as_secs_f64()
        );
        v.assert(res.bc_residual_sup <= 1e-10, format!("eps {eps}: boundary residual {:.2e}", res.bc_residual_sup));
        if let (Some(dir), Some(w)) = (dir, residuals.as_mut()) {
            write_solution(&sol, dir.join(format!("solution_{eps}.bin")))?;
            w.write_record([
                format!("{eps:e}"),
                grid.nx.to_string(),
                grid.steps.to_string(),
                format!("{:e}", res.pde_residual_sup),
                format!("{:e}", res.bc_residual_sup),
            ])?;
        }
    }
    if let Some(mut w) = residuals {
        w.flush()?;
    }
    Ok(())
}

fn sweep(args: &Common, v: &mut Verdict) -> Result<()> {
    let cfg = load(args)?;
    let scfg = SweepConfig::from_config(&cfg)?;
    let report = run_sweep(&scfg)?;
    for r in &report.rows {
        println!(
            "eps {:.5} p {:.4}: leading {:.4e} corrected {:.4e} L2 {:.4e}{} {}",
            r.eps,
            r.p,
            r.err_leading_sup,
            r.err_corrected_sup,
            r.err_l2,
            if r.floor { " floor" } else { "" },
            r.status
        );
    }
    for note in &report.fit_notes {
        println!("note: {note}");
    }
    v.assert(report.ok_rows().count() == report.rows.len(), "every row completed");
    if report.rows.iter().all(|r| r.floor) {
        v.assert(true, "all errors at the numerical floor");
    } else {
        v.assert(report.leading_decreasing(0.1), "leading error decreases with eps");
        match &report.fit_leading {
            Some(f) => v.assert(f.slope > 0.05, format!("fitted slope {:.4} +- {:.4}", f.slope, f.stderr)),
            None => v.assert(false, "fitted slope available"),
        }
        if let Some(r) = report.smallest_eps_row() {
            v.assert(
                r.err_corrected_sup <= r.err_leading_sup,
                format!("corrected {:.4e} <= leading {:.4e} at eps {}", r.err_corrected_sup, r.err_leading_sup, r.eps),
            );
        }
    }
    if let Some(dir) = out_dir(args)? {
        let formats = ReportFormats { svg: cfg.sweep.svg, ..ReportFormats::default() };
        for p in emit_report(&report, dir, formats)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    pulse_optics::configure_threads();
    let cli = Cli::parse();
    let mut v = Verdict::new();
    let result = match &cli.command {
        Command::Check(a) => check(a, &mut v),
        Command::Profiles(a) => profiles(a, &mut v),
        Command::Exact(a) => exact(a, &mut v),
        Command::Sweep(a) => sweep(a, &mut v),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if v.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} assertion(s) failed", v.failures.len());
        ExitCode::FAILURE
    }
}
