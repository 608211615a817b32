use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chlab::covcheck::{alpha, Checker, LimitProbe};
use chlab::hadamard::HadamardConfig;
use chlab::harness::suites::{case_rng, random_spacelike};
use chlab::harness::{catalog_load, run_suite, write_report, Catalog, RunConfig, Suite};
use chlab::wickalg::{reorder_prescription, wick_expand, wick_inverse, MAX_POWER};
use chlab::Error;

#[derive(Parser)]
#[command(name = "chlab", version, about = "Conformal covariance checks for the Hadamard parametrix and Wick powers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write report.json, report.csv and plotdata/.
    Run {
        /// Catalog file; the built-in catalog when omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// A suite name, a comma-separated list, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "chlab-out")]
        out: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Probe the coincidence limits of one embedding at one point.
    Limits {
        #[arg(long)]
        embedding: String,
        /// Target-chart coordinates `x0,x1,x2,x3`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print the Wick expansion, its inverse and the reordering formula for `φⁿ`.
    Expand {
        #[arg(long)]
        n: usize,
    },
}

fn load(path: Option<&PathBuf>) -> chlab::Result<Catalog> {
    match path {
        Some(p) => catalog_load(p),
        None => Catalog::builtin(),
    }
}

fn run(
    catalog: Option<PathBuf>,
    suite: &str,
    seed: u64,
    out: PathBuf,
    mu: Option<f64>,
    kappa: Option<f64>,
    tol_scale: f64,
) -> chlab::Result<bool> {
    let suites = Suite::parse_selection(suite)?;
    let catalog = load(catalog.as_ref())?;
    let mut hadamard = HadamardConfig::default();
    hadamard.mu = mu.unwrap_or(hadamard.mu);
    hadamard.kappa = kappa.unwrap_or(hadamard.kappa);
    let cfg = RunConfig { suites, seed, hadamard, tol_scale };
    let report = run_suite(&catalog, &cfg);
    for s in &report.suites {
        let rows: usize = s.cases.iter().map(|c| c.reports.len()).sum();
        let failed: usize = s.cases.iter().flat_map(|c| &c.reports).filter(|r| !r.pass).count();
        println!(
            "{:<11} {}  {rows} rows, {failed} failed, {} errored, {:.1} s",
            s.suite.name(),
            if s.pass { "PASS" } else { "FAIL" },
            s.failures.len(),
            s.wall_clock_s
        );
        for c in &s.cases {
            for r in c.reports.iter().filter(|r| !r.pass) {
                println!("  fail {} {}: measured {:e}, predicted {:e}, tolerance {:e}", c.case, r.identity, r.measured, r.predicted, r.tolerance);
            }
        }
        for f in &s.failures {
            println!("  error {}: {}", f.case, f.error);
        }
    }
    write_report(&report, &out)?;
    println!("{} written to {}", if report.pass { "PASS" } else { "FAIL" }, out.display());
    Ok(report.pass)
}

fn limits(embedding: &str, point: &[f64], catalog: Option<PathBuf>, seed: u64) -> chlab::Result<bool> {
    let catalog = load(catalog.as_ref())?;
    let e = catalog.embedding(embedding)?;
    let x: [f64; 4] = point.try_into().map_err(|_| Error::Domain("--point needs four coordinates".into()))?;
    if !e.image().contains(&x) {
        return Err(Error::OutsideDomain(x));
    }
    let mut rng = case_rng(seed, embedding);
    let probe = LimitProbe::new(e.target(), x, random_spacelike(&mut rng, e.target(), &x)?)?;
    let checker = Checker::new(HadamardConfig::default());
    let kappa = checker.kappa();
    let mut rows: Vec<_> = checker.hadamard_difference_limit(e, &probe)?.into();
    rows.push(checker.phi2_covariance(e, alpha(kappa), &probe)?);
    rows.push(checker.wick_kernel_covariance(e, &probe)?);
    println!("embedding {} at {:?}, direction {:?}", e.name(), x, probe.w);
    println!("{:<22} {:>14} {:>14} {:>11} {:>7}  pass", "identity", "measured", "predicted", "tolerance", "order");
    for r in &rows {
        println!(
            "{:<22} {:>14.6e} {:>14.6e} {:>11.3e} {:>7.2}  {}",
            r.identity, r.measured, r.predicted, r.tolerance, r.order_estimate, r.pass
        );
        if let Some(p) = &r.probe {
            for (s, v) in p.s_schedule.iter().zip(&p.samples) {
                println!("    s = {s:<10.3e} {v:.12e}");
            }
        }
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn expand(n: usize) -> chlab::Result<bool> {
    if n > MAX_POWER {
        return Err(Error::Domain(format!("n = {n} exceeds the maximum power {MAX_POWER}")));
    }
    println!("{}", wick_expand(n)?);
    println!("{}", wick_inverse(n)?);
    println!("{}", reorder_prescription(n, "B")?);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { catalog, suite, seed, out, mu, kappa, tol_scale } => run(catalog, &suite, seed, out, mu, kappa, tol_scale),
        Command::Limits { embedding, point, catalog, seed } => limits(&embedding, &point, catalog, seed),
        Command::Expand { n } => expand(n),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::UnknownSuite(_)) => {
            eprintln!("error: {e}; expected one of {} or `all`", Suite::ALL.map(|s| s.name()).join(", "));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
