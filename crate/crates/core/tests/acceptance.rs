//! Runs every suite on the default catalog and prints one line per
//! acceptance criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;

use chlab::covcheck::CovarianceReport;
use chlab::harness::{csv_body, run_suite, Catalog, RunConfig, RunReport, Suite};

struct Criterion {
    number: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn rows<'a>(r: &'a RunReport, suite: Suite, identities: &[&str]) -> Vec<&'a CovarianceReport> {
    r.rows().filter(|(s, _, row)| s.suite == suite && identities.contains(&row.identity.as_str())).map(|(_, _, row)| row).collect()
}

fn errors(r: &RunReport, suite: Suite, prefix: &str) -> Vec<String> {
    r.suites
        .iter()
        .filter(|s| s.suite == suite)
        .flat_map(|s| &s.failures)
        .filter(|f| f.case.starts_with(prefix))
        .map(|f| format!("{}: {}", f.case, f.error))
        .collect()
}

/// Passes when every row passes, no case under `prefixes` errored and at
/// least `min_rows` rows were produced.
fn judge(
    number: usize,
    title: &'static str,
    r: &RunReport,
    suite: Suite,
    identities: &[&str],
    prefixes: &[&str],
    min_rows: usize,
    extra: Option<(bool, String)>,
) -> Criterion {
    let rs = rows(r, suite, identities);
    let errs: Vec<String> = prefixes.iter().flat_map(|p| errors(r, suite, p)).collect();
    let failed = rs.iter().filter(|x| !x.pass).count();
    let worst = rs
        .iter()
        .map(|x| if x.tolerance > 0.0 { x.abs_error / x.tolerance } else if x.abs_error == 0.0 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let (extra_ok, extra_msg) = extra.unwrap_or((true, String::new()));
    let pass = failed == 0 && errs.is_empty() && rs.len() >= min_rows && extra_ok;
    let mut detail = format!("{} rows, {failed} failed, worst error/tolerance {worst:.2e}", rs.len());
    if rs.len() < min_rows {
        detail.push_str(&format!(", expected at least {min_rows} rows"));
    }
    if !extra_msg.is_empty() {
        detail.push_str(&format!(", {extra_msg}"));
    }
    for e in errs {
        detail.push_str(&format!("; error {e}"));
    }
    Criterion { number, title, pass, detail }
}

fn embeddings_of(rs: &[&CovarianceReport]) -> usize {
    rs.iter().filter_map(|r| r.embedding.as_deref()).collect::<BTreeSet<_>>().len()
}

fn main() -> ExitCode {
    let catalog = Catalog::builtin().expect("default catalog");
    let cfg = RunConfig::default();
    let first = run_suite(&catalog, &cfg);
    let second = run_suite(&catalog, &cfg);
    let r = &first;
    let curved = catalog.curved_spacetimes().count();

    let wave = rows(r, Suite::Geometry, &["wave_conformal_law"]);
    let vv = rows(r, Suite::Worldfn, &["van_vleck_series"]);
    let min_order = vv.iter().map(|x| x.order_estimate).fold(f64::INFINITY, f64::min);
    let had = rows(r, Suite::Covariance, &["hadamard_difference"]);
    let rigid: BTreeSet<String> = r
        .rows()
        .filter(|(_, _, x)| x.identity == "rigid_dilation")
        .map(|(_, c, _)| c.case.rsplit('/').next().unwrap_or_default().to_string())
        .collect();
    let prop_ids: BTreeSet<&str> = rows(
        r,
        Suite::Propagator,
        &["wave_of_causal_propagator", "support_containment", "symplectic_invariance", "causal_propagator_transport"],
    )
    .iter()
    .map(|x| x.identity.as_str())
    .collect();
    let (a, b) = (csv_body(&first), csv_body(&second));

    let criteria = vec![
        judge(1, "wave-operator conformal law", r, Suite::Geometry, &["wave_conformal_law"], &["wave_law"], 3, Some((
            embeddings_of(&wave) >= 3,
            format!("{} embeddings", embeddings_of(&wave)),
        ))),
        judge(2, "transport consistency and van Vleck series", r, Suite::Worldfn, &["u_ode_vs_van_vleck", "van_vleck_series"], &[""], catalog.spacetimes.len() + curved, Some((
            min_order >= 3.8,
            format!("lowest fitted order {min_order:.3}"),
        ))),
        judge(3, "v(x,x) = 0", r, Suite::Hadamard, &["v0_coincidence"], &["v0_coincidence"], 5 * curved, None),
        judge(4, "mu independence", r, Suite::Hadamard, &["mu_independence"], &["mu_independence"], catalog.spacetimes.len(), None),
        judge(5, "Hadamard difference limit and A(x,x)", r, Suite::Covariance, &["hadamard_difference", "a_coincidence"], &["embedding/"], 6, Some((
            embeddings_of(&had) >= 3,
            format!("{} embeddings", embeddings_of(&had)),
        ))),
        judge(6, "phi^2 covariance", r, Suite::Covariance, &["phi2_covariance"], &["embedding/"], 2 * catalog.embeddings.len(), None),
        judge(7, "Wick-kernel identity and B(x,x) = -alpha R", r, Suite::Covariance, &["wick_kernel", "b_coincidence", "composite_weight4", "kappa_independence", "direction_independence"], &[""], 2 * catalog.embeddings.len(), None),
        judge(8, "rigid-dilation law", r, Suite::Covariance, &["rigid_dilation"], &["rigid_dilation"], 3, Some((
            ["0.5", "2", "10"].iter().all(|l| rigid.contains(*l)),
            format!("lambda in {rigid:?}"),
        ))),
        judge(9, "propagator suite", r, Suite::Propagator, &["wave_of_causal_propagator", "support_containment", "symplectic_invariance", "causal_propagator_transport", "commutator_preservation"], &[""], 5, Some((
            prop_ids.len() == 4,
            format!("{} of 4 identities", prop_ids.len()),
        ))),
        judge(10, "algebra suite (exact)", r, Suite::Algebra, &["ccr_normal_form", "functor_law", "morphism_injectivity", "star_involution", "wick_coefficients", "wick_n4_single_pairs", "wick_n4_perfect_matchings", "wick_n6_perfect_matchings", "hermite_inverse", "reorder_double_expansion", "renorm_phi2_alpha"], &[""], 11, None),
        Criterion {
            number: 11,
            title: "reproducibility",
            pass: a == b && !a.is_empty(),
            detail: format!("{} CSV bytes, {}", a.len(), if a == b { "identical" } else { "differ" }),
        },
    ];

    for s in &first.suites {
        println!("suite {:<11} {:>6.1} s", s.suite.name(), s.wall_clock_s);
    }
    let mut all = true;
    for c in &criteria {
        all &= c.pass;
        println!("criterion {:>2} {}: {} ({})", c.number, if c.pass { "PASS" } else { "FAIL" }, c.title, c.detail);
    }
    if !first.pass {
        all = false;
        println!("the run report has failing rows outside the criteria above");
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
