//! Convergence sweeps of the leading-order and corrected approximations
//! against the reference solver.

mod fit;
mod report;
mod run;

pub use fit::{fit_rate, RateFit};
pub use report::{emit_report, report_csv, report_json, report_svg, ReportFormats, CSV_HEADER};
pub use run::{
    assemble_report, default_b, m1, run_sweep, SweepConfig, SweepReport, SweepRow, SweepSetup, WindowErrors,
};
