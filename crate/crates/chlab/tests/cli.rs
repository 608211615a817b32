use std::process::Command;

fn chlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chlab"))
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = chlab().args(["run", "--suite", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn algebra_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = chlab().args(["run", "--suite", "algebra", "--seed", "3", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.contains("# seed = 3"));
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("plotdata").is_dir());
}

#[test]
fn tightened_tolerances_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = chlab().args(["run", "--suite", "geometry", "--tol-scale", "1e-12", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_catalog_fails_with_its_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[[spacetime]]\nname = \"x\"\n").unwrap();
    let out = chlab().args(["run", "--suite", "algebra", "--catalog"]).arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}

#[test]
fn expand_prints_the_tables() {
    let out = chlab().args(["expand", "--n", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("φ^4 = :φ^4: + 6 H :φ^2: + 3 H^2"), "{text}");
    assert!(text.contains("6 B :φ^2:_{H+B} + 3 B^2"));
    assert_eq!(chlab().args(["expand", "--n", "99"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn limits_reports_one_embedding() {
    let out = chlab().args(["limits", "--embedding", "flat_to_bump", "--point", "0.1,-0.1,0,0"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("hadamard_difference") && text.contains("wick_kernel"));
    let outside = chlab().args(["limits", "--embedding", "flat_to_bump", "--point", "5,0,0,0"]).output().unwrap();
    assert_eq!(outside.status.code(), Some(1));
}
