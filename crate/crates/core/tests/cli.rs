use std::process::{Command, Output};

fn frametop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frametop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn certificate_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let p = path.to_str().unwrap();
    let o = frametop(&["certify", "--equal-norm", "5", "2", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = frametop(&["verify", "--input", p]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["determinant"], -1.0);
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let p = path.to_str().unwrap();
    assert!(frametop(&["certify", "--equal-norm", "4", "2", "--out", p]).status.success());
    let mut cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    cert["D"] = serde_json::json!([[1.0, 0.0], [0.0, 1.0]]);
    std::fs::write(&path, cert.to_string()).unwrap();
    assert_eq!(frametop(&["verify", "--input", p]).status.code(), Some(1));
}

#[test]
fn reduce_prints_sequence() {
    let o = frametop(&["reduce", "--n", "11", "--k", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "(11,3) (5,2)");
}

#[test]
fn strata_csv_lists_candidates() {
    let o = frametop(&[
        "strata", "--d", "1/2,1/2,1/2,1/2", "--k", "2", "--feasible-only", "--format", "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = text.lines();
    assert!(rows.next().unwrap().starts_with("blocks,"));
    assert!(rows.clone().count() >= 1);
    assert!(rows.all(|r| r.contains(",true,")));
}

#[test]
fn strata_json_reports_codim_one_check() {
    let o = frametop(&["strata", "--d", "0.4,0.3,0.3,0.4,0.3,0.3", "--k", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["no_codim_one"].is_boolean());
}

#[test]
fn check_vertex_is_disconnected() {
    let o = frametop(&["check", "--d", "1,1,0,0", "--k", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "ProvenDisconnected");
    assert_eq!(v["hypersimplex"], true);
}

#[test]
fn check_reads_json_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, r#"{"d": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5], "k": 3}"#).unwrap();
    let o = frametop(&["check", "--input", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "ProvenAdmissible");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(frametop(&["verify", "--input", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(frametop(&["check", "--d", "1,x", "--k", "1"]).status.code(), Some(2));
    assert_eq!(frametop(&["check", "--k", "1"]).status.code(), Some(2));
    assert_eq!(frametop(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    // Outside the hypersimplex: nothing to certify.
    assert_eq!(frametop(&["certify", "--d", "1,1,1,0", "--k", "2"]).status.code(), Some(1));
    assert_eq!(frametop(&["polygon", "--d", "1,1,1,0", "--k", "3"]).status.code(), Some(1));
}

#[test]
fn polygon_closes() {
    let o = frametop(&["polygon", "--d", "2/3,2/3,2/3", "--k", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["closure_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["km_disconnected"], true);
}
