//! `report.json`, `report.csv` and `plotdata/*.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::RunReport;
use crate::error::Result;

const COLUMNS: [&str; 13] = [
    "suite", "case", "identity", "spacetime", "embedding", "point", "measured", "predicted", "abs_error", "rel_error", "tolerance",
    "order", "pass",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

/// The CSV text: a `#` header with the conventions and seed, then one row
/// per report and one per failed case. Timings are left out so the text is
/// a function of the configuration alone.
pub fn csv_body(report: &RunReport) -> String {
    let h = &report.header;
    let mut out = String::new();
    let _ = writeln!(out, "# run_id = {}", report.run_id);
    let _ = writeln!(out, "# seed = {}", report.config.seed);
    let _ = writeln!(out, "# kappa = {}", h.kappa);
    let _ = writeln!(out, "# mu = {}", h.mu);
    let _ = writeln!(out, "# truncation_order = {}", h.truncation_order);
    let _ = writeln!(out, "# alpha = {:e}", h.alpha);
    let _ = writeln!(out, "# tol_scale = {}", report.config.tol_scale);
    let _ = writeln!(out, "# signature = {}", h.signature);
    let _ = writeln!(out, "# curvature = {}", h.curvature);
    let _ = writeln!(out, "# wave_operator = {}", h.wave_operator);
    let _ = writeln!(out, "# parametrix = {}", h.parametrix);
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(COLUMNS);
    for s in &report.suites {
        for c in &s.cases {
            for r in &c.reports {
                let point = r.point.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
                let _ = w.write_record([
                    s.suite.name().to_string(),
                    c.case.clone(),
                    r.identity.clone(),
                    r.spacetime.clone(),
                    r.embedding.clone().unwrap_or_default(),
                    point,
                    num(r.measured),
                    num(r.predicted),
                    num(r.abs_error),
                    num(r.rel_error),
                    num(r.tolerance),
                    num(r.order_estimate),
                    r.pass.to_string(),
                ]);
            }
        }
        for f in &s.failures {
            let mut row = vec![String::new(); COLUMNS.len()];
            row[0] = s.suite.name().to_string();
            row[1] = f.case.clone();
            row[2] = format!("error: {}", f.error);
            row[12] = "false".into();
            let _ = w.write_record(row);
        }
    }
    out.push_str(&String::from_utf8_lossy(&w.into_inner().unwrap_or_default()));
    out
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("__")
}

/// Writes the three outputs into `dir`, creating it if needed.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| crate::error::Error::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("report.csv"), csv_body(report))?;
    let plots = dir.join("plotdata");
    fs::create_dir_all(&plots)?;
    for s in &report.suites {
        for c in &s.cases {
            for (i, r) in c.reports.iter().enumerate() {
                let Some(p) = &r.probe else { continue };
                let mut body = String::from("s,value\n");
                for (s_val, v) in p.s_schedule.iter().zip(&p.samples) {
                    let _ = writeln!(body, "{s_val:e},{v:e}");
                }
                let name = file_stem(&[s.suite.name(), &c.case, &format!("{}{}", r.identity, if i > 0 { format!("_{i}") } else { String::new() })]);
                fs::write(plots.join(format!("{name}.csv")), body)?;
            }
        }
    }
    Ok(())
}
