use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::run::SweepReport;
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct ReportFormats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats { csv: true, json: true, svg: true }
    }
}

pub const CSV_HEADER: [&str; 7] = ["eps", "p", "err_leading_sup", "err_corrected_sup", "err_L2", "floor", "status"];

/// Table of the sweep rows; deterministic for a given report.
pub fn report_csv(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            format!("{:e}", r.eps),
            format!("{:e}", r.p),
            format!("{:e}", r.err_leading_sup),
            format!("{:e}", r.err_corrected_sup),
            format!("{:e}", r.err_l2),
            r.floor.to_string(),
            r.status.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Summary with fits, runtimes and a timestamp.
pub fn report_json(report: &SweepReport) -> serde_json::Value {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "rows": report.rows.len(),
        "b": report.b,
        "fit_leading": report.fit_leading,
        "fit_corrected": report.fit_corrected,
        "fit_notes": report.fit_notes,
        "profile_iterations": report.profile_iterations,
        "profile_final_ratio": report.profile_final_ratio,
        "corrector_empty": report.corrector_empty,
        "runtimes_s": report.rows.iter().map(|r| json!({
            "eps": r.eps, "exact": r.runtime_exact_s, "evaluation": r.runtime_eval_s
        })).collect::<Vec<_>>(),
        "config_hash": report.config_hash,
        "version": report.version,
        "timestamp": stamp,
    })
}

/// Log-log plot of the two error columns against `eps`.
pub fn report_svg(report: &SweepReport) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let pts = |f: &dyn Fn(&super::run::SweepRow) -> f64| -> Vec<(f64, f64)> {
        report
            .rows
            .iter()
            .filter(|r| r.is_ok() && r.eps > 0.0 && f(r) > 0.0)
            .map(|r| (r.eps.log10(), f(r).log10()))
            .collect()
    };
    let lead = pts(&|r| r.err_leading_sup);
    let corr = pts(&|r| r.err_corrected_sup);
    let all: Vec<&(f64, f64)> = lead.iter().chain(corr.iter()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &all {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (-2.0, -1.0, -6.0, -1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 eps</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 error</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (x, anchor_y) in [(x0, h - m + 18.0), (x1, h - m + 18.0)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{anchor_y}" text-anchor="middle">{x:.2}</text>"#, sx(x));
    }
    for y in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.2}</text>"#, m - 6.0, sy(y) + 4.0);
    }
    for (series, color, name) in [(&lead, "#1f77b4", "leading"), (&corr, "#d62728", "corrected")] {
        if series.is_empty() {
            continue;
        }
        let path: Vec<String> = series.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for p in series.iter() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, sx(p.0), sy(p.1));
        }
        let ly = if name == "leading" { m + 20.0 } else { m + 40.0 };
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, m + 10.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Write `sweep.csv`, `summary.json` and `sweep.svg` into `dir`.
pub fn emit_report(report: &SweepReport, dir: impl AsRef<Path>, formats: ReportFormats) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    if formats.csv {
        let p = dir.join("sweep.csv");
        std::fs::write(&p, report_csv(report)?)?;
        out.push(p);
    }
    if formats.json {
        let p = dir.join("summary.json");
        std::fs::write(&p, serde_json::to_string_pretty(&report_json(report))?)?;
        out.push(p);
    }
    if formats.svg {
        let p = dir.join("sweep.svg");
        std::fs::write(&p, report_svg(report))?;
        out.push(p);
    }
    Ok(out)
}
