use super::*;
use crate::error::Error;

const MINKOWSKI_ONLY: &str = r#"
[[spacetime]]
name = "flat"
domain = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
omega = "1"
"#;

#[test]
fn minimal_catalog_loads() {
    let c = Catalog::parse(MINKOWSKI_ONLY, "inline").unwrap();
    assert_eq!(c.spacetimes.len(), 1);
    assert!(c.embeddings.is_empty());
    assert!(c.spacetime("flat").unwrap().has_constant_metric());
    assert_eq!(c.curved_spacetimes().count(), 0);
}

#[test]
fn non_positive_omega_names_the_point() {
    let text = MINKOWSKI_ONLY.replace("omega = \"1\"", "omega = \"x0\"");
    match Catalog::parse(&text, "inline") {
        Err(Error::Catalog { location, message }) => {
            assert!(location.contains("flat"), "{location}");
            assert!(message.contains("not positive at ["), "{message}");
        }
        other => panic!("expected a catalog error, got {other:?}"),
    }
}

#[test]
fn default_catalog_shape() {
    let c = Catalog::builtin().unwrap();
    assert_eq!(c.spacetimes.len(), 3);
    assert_eq!(c.embeddings.len(), 4);
    for name in ["minkowski", "de_sitter", "bump"] {
        c.spacetime(name).unwrap();
    }
    assert_eq!(c.curved_spacetimes().count(), 2);
}

#[test]
fn catalog_errors_carry_locations() {
    let bad_toml = "[[spacetime]]\nname = \"a\"\ndomain = 3\n";
    let Err(Error::Catalog { location, .. }) = Catalog::parse(bad_toml, "inline") else { panic!() };
    assert!(location.contains("line 3"), "{location}");

    let unknown = format!("{MINKOWSKI_ONLY}\n[[embedding]]\nname = \"e\"\nsource = \"flat\"\ntarget = \"nowhere\"\npsi = [\"x0\", \"x1\", \"x2\", \"x3\"]\npsi_inv = [\"x0\", \"x1\", \"x2\", \"x3\"]\nomega = \"1\"\nimage_box = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]\n");
    let Err(Error::Catalog { location, message }) = Catalog::parse(&unknown, "inline") else { panic!() };
    assert!(location.contains("embedding `e`") && message.contains("nowhere"));

    let both = MINKOWSKI_ONLY.replace("omega = \"1\"", "omega = \"1\"\nmetric = { g00 = \"-1\" }");
    assert!(matches!(Catalog::parse(&both, "inline"), Err(Error::Catalog { .. })));

    let dup = format!("{MINKOWSKI_ONLY}{MINKOWSKI_ONLY}");
    assert!(matches!(Catalog::parse(&dup, "inline"), Err(Error::Catalog { message, .. }) if message.contains("duplicate")));

    assert!(matches!(catalog_load(std::path::Path::new("/nonexistent/catalog.toml")), Err(Error::Catalog { .. })));
}

#[test]
fn general_metric_entries() {
    let text = r#"
[parameters]
a = 0.1

[[spacetime]]
name = "lumpy"
domain = [[0.5, 1.5], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
metric = { g00 = "-(1 + a*x1^2)", g11 = "1", g22 = "1 + a*x0^2", g33 = "1", g12 = "a*x3" }
"#;
    let c = Catalog::parse(text, "inline").unwrap();
    let st = c.spacetime("lumpy").unwrap();
    assert!(!st.is_conformally_flat());
    let g = st.metric(&[1.0f64, 0.5, 0.0, 0.2]).unwrap();
    assert!((g[1][2] - 0.02).abs() < 1e-15 && g[2][1] == g[1][2]);
    let bad = text.replace("g12", "h12");
    assert!(matches!(Catalog::parse(&bad, "inline"), Err(Error::Catalog { message, .. }) if message.contains("h12")));
}

#[test]
fn suite_selection() {
    assert_eq!(Suite::parse_selection("all").unwrap(), Suite::ALL.to_vec());
    assert_eq!(Suite::parse_selection("algebra,geometry").unwrap(), vec![Suite::Algebra, Suite::Geometry]);
    assert!(matches!(Suite::parse_selection("bogus"), Err(Error::UnknownSuite(s)) if s == "bogus"));
    for s in Suite::ALL {
        assert_eq!(s.name().parse::<Suite>().unwrap(), s);
    }
}

#[test]
fn failing_case_does_not_stop_siblings() {
    let ok = || Ok(vec![CovarianceReport::new("ok", "m", None, [0.0; 4], 1.0, 1.0, 1e-9, None)]);
    let cases = vec![
        Case::new("a", ok),
        Case::new("b", || Err(Error::Domain("boom".into()))),
        Case::new("c", || Ok(vec![CovarianceReport::new("off", "m", None, [0.0; 4], 1.0, 2.0, 0.5, None)])),
        Case::new("d", ok),
    ];
    let r = run_cases(Suite::Algebra, cases, 1.0);
    assert!(!r.pass);
    let ids: Vec<&str> = r.cases.iter().map(|c| c.case.as_str()).collect();
    assert_eq!(ids, ["a", "c", "d"]);
    assert_eq!(r.failures.len(), 1);
    assert!(r.failures[0].error.contains("boom"));
    assert!(!r.cases[1].reports[0].pass);

    // a looser tolerance scale rescues the tolerance failure but not the error
    let cases = vec![Case::new("c", || Ok(vec![CovarianceReport::new("off", "m", None, [0.0; 4], 1.0, 2.0, 0.5, None)]))];
    assert!(run_cases(Suite::Algebra, cases, 4.0).pass);
}

#[test]
fn algebra_run_is_reproducible_and_written() {
    let catalog = Catalog::builtin().unwrap();
    let cfg = RunConfig { suites: vec![Suite::Algebra, Suite::Geometry], ..RunConfig::default() };
    let a = run_suite(&catalog, &cfg);
    let b = run_suite(&catalog, &cfg);
    assert!(a.pass, "{}", csv_body(&a));
    assert_eq!(csv_body(&a), csv_body(&b));

    let body = csv_body(&a);
    assert!(body.contains("# seed = 42") && body.contains("# kappa = 0.5"));
    let header = body.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "suite,case,identity,spacetime,embedding,point,measured,predicted,abs_error,rel_error,tolerance,order,pass");
    let rows = body.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, a.rows().count());

    let other = run_suite(&catalog, &RunConfig { seed: 7, ..cfg.clone() });
    assert_ne!(csv_body(&other), body);

    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    write_report(&a, &dir).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["header"]["kappa"], 0.5);
    assert_eq!(std::fs::read_to_string(dir.join("report.csv")).unwrap(), body);
    assert!(dir.join("plotdata").is_dir());
}
