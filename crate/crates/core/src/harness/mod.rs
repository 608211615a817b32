//! Catalog loading, suite orchestration and report output.

pub mod catalog;
pub mod output;
pub mod suites;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use catalog::{catalog_load, Catalog, DEFAULT_CATALOG};
pub use output::{csv_body, write_report};
pub use suites::Suite;

use crate::covcheck::{alpha, CovarianceReport};
use crate::error::Result;
use crate::hadamard::HadamardConfig;

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub hadamard: HadamardConfig,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { suites: Suite::ALL.to_vec(), seed: 42, hadamard: HadamardConfig::default(), tol_scale: 1.0 }
    }
}

/// Conventions every number in a report depends on.
#[derive(Clone, Debug, Serialize)]
pub struct ConventionHeader {
    pub kappa: f64,
    pub mu: f64,
    pub truncation_order: usize,
    pub alpha: f64,
    pub signature: &'static str,
    pub curvature: &'static str,
    pub wave_operator: &'static str,
    pub parametrix: &'static str,
}

impl ConventionHeader {
    pub fn new(cfg: &HadamardConfig) -> Self {
        ConventionHeader {
            kappa: cfg.kappa,
            mu: cfg.mu,
            truncation_order: cfg.p,
            alpha: alpha(cfg.kappa),
            signature: "(-,+,+,+)",
            curvature: "R^a_bcd = d_c Gamma^a_db - ..., R_bd = R^a_bad; de Sitter has R > 0",
            wave_operator: "P = -box + R/6",
            parametrix: "H = kappa/(8 pi^2) (u/sigma + v log(sigma/mu^2)), u = 2 Delta^(1/2), v = v0 + v1 sigma",
        }
    }
}

/// One case that could not produce reports.
#[derive(Clone, Debug, Serialize)]
pub struct CaseFailure {
    pub case: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub reports: Vec<CovarianceReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub wall_clock_s: f64,
    pub cases: Vec<CaseReport>,
    pub failures: Vec<CaseFailure>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub run_id: String,
    pub config: RunConfig,
    pub header: ConventionHeader,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

impl RunReport {
    /// Rows in output order: suite, case, then report order.
    pub fn rows(&self) -> impl Iterator<Item = (&SuiteReport, &CaseReport, &CovarianceReport)> {
        self.suites.iter().flat_map(|s| s.cases.iter().flat_map(move |c| c.reports.iter().map(move |r| (s, c, r))))
    }
}

/// A named unit of work inside a suite.
pub struct Case<'a> {
    pub id: String,
    pub run: Box<dyn Fn() -> Result<Vec<CovarianceReport>> + Send + Sync + 'a>,
}

impl<'a> Case<'a> {
    pub fn new(id: impl Into<String>, run: impl Fn() -> Result<Vec<CovarianceReport>> + Send + Sync + 'a) -> Self {
        Case { id: id.into(), run: Box::new(run) }
    }
}

/// Runs the cases of one suite on the worker pool; results keep the case
/// order and a failing case does not stop its siblings.
pub fn run_cases(suite: Suite, cases: Vec<Case<'_>>, tol_scale: f64) -> SuiteReport {
    let start = Instant::now();
    let results: Vec<(String, Result<Vec<CovarianceReport>>)> = cases.par_iter().map(|c| (c.id.clone(), (c.run)())).collect();
    let mut out = SuiteReport { suite, wall_clock_s: 0.0, cases: Vec::new(), failures: Vec::new(), pass: true };
    for (case, res) in results {
        match res {
            Ok(reports) => {
                let reports: Vec<_> = reports.into_iter().map(|r| r.rescaled(tol_scale)).collect();
                out.pass &= reports.iter().all(|r| r.pass);
                out.cases.push(CaseReport { case, reports });
            }
            Err(e) => {
                out.pass = false;
                out.failures.push(CaseFailure { case, error: e.to_string() });
            }
        }
    }
    out.wall_clock_s = start.elapsed().as_secs_f64();
    out
}

/// Runs the configured suites against `catalog`.
pub fn run_suite(catalog: &Catalog, cfg: &RunConfig) -> RunReport {
    let suites: Vec<SuiteReport> = cfg.suites.iter().map(|&s| run_cases(s, suites::cases(s, catalog, cfg), cfg.tol_scale)).collect();
    let names: Vec<&str> = cfg.suites.iter().map(|s| s.name()).collect();
    RunReport {
        run_id: format!("{}-seed{}-kappa{}-mu{}", names.join("+"), cfg.seed, cfg.hadamard.kappa, cfg.hadamard.mu),
        config: cfg.clone(),
        header: ConventionHeader::new(&cfg.hadamard),
        pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

#[cfg(test)]
mod tests;
