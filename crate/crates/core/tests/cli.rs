use std::process::{Command, Output};

use ogk::groupoid::FiniteGroupoid;
use ogk::suites::RunReport;

fn ogk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ogk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn zoo_lists_ids() {
    let o = ogk(&["zoo", "--list"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("groupoid pair:2") && s.contains("young xlogx") && s.contains("family z2-linear"));
    assert!(ogk(&["zoo"]).status.success());
}

#[test]
fn validate_zoo_file_and_bad_haar() {
    assert!(ogk(&["validate", "transform:s3@3"]).status.success());

    let dir = tempfile::tempdir().unwrap();
    let gpath = dir.path().join("g.json");
    std::fs::write(&gpath, serde_json::to_string(&FiniteGroupoid::pair(2).to_json()).unwrap()).unwrap();
    let hpath = dir.path().join("h.json");
    std::fs::write(&hpath, r#"{"0": [1, 2], "3": [1, 1]}"#).unwrap();
    let o = ogk(&["validate", gpath.to_str().unwrap(), "--haar", hpath.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness"));

    std::fs::write(&hpath, r#"{"0": [1, 2], "3": [1, 2]}"#).unwrap();
    assert!(ogk(&["validate", gpath.to_str().unwrap(), "--haar", hpath.to_str().unwrap()]).status.success());

    assert_eq!(ogk(&["validate", "pair:zero"]).status.code(), Some(2));
}

#[test]
fn norm_and_convolve() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    let g = dir.path().join("g.json");
    // pair:2 in row-major order: units 0 and 3
    std::fs::write(&f, r#"{"0": [[1,0],[2,0]], "3": [[3,0],[4,0]]}"#).unwrap();
    std::fs::write(&g, r#"{"0": [[0,0],[1,0]], "3": [[1,0],[0,0]]}"#).unwrap();

    let o = ogk(&["norm", f.to_str().unwrap(), "--phi", "power:2", "--which", "gauge", "--groupoid", "pair:2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["sup"].as_f64().unwrap() - 5.0).abs() < 1e-10);

    let o = ogk(&["norm", f.to_str().unwrap(), "--which", "l1", "--groupoid", "pair:2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["per_unit"]["0"].as_f64(), Some(3.0));

    let out = dir.path().join("fg.json");
    let o = ogk(&["convolve", f.to_str().unwrap(), g.to_str().unwrap(), "--groupoid", "pair:2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["0"], serde_json::json!([[2.0, 0.0], [1.0, 0.0]]));
    assert_eq!(v["3"], serde_json::json!([[4.0, 0.0], [3.0, 0.0]]));

    let wrong = dir.path().join("w.json");
    std::fs::write(&wrong, r#"{"0": [[1,0]]}"#).unwrap();
    assert_eq!(ogk(&["norm", wrong.to_str().unwrap(), "--groupoid", "pair:2"]).status.code(), Some(2));
}

#[test]
fn check_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = ogk(&["check", "groupoid", "--seed", "3", "--trials", "20", "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let r: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.suites.len(), 2);
    assert!(r.passed);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("suite,check,slack,tolerance,verdict\n"));

    let o = ogk(&["check", "groupoid.validation", "--trials", "5", "--inject-fault", "assoc", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("associativity"));
    let r: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.suites[0].failures().any(|c| c.witness.is_some()));

    assert_eq!(ogk(&["check", "groupoid.haar", "--inject-fault", "haar", "--out", out.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(ogk(&["check", "all", "--groupoid", "pair:x"]).status.code(), Some(2));
    assert_eq!(ogk(&["check", "all", "--young", "power:0.5"]).status.code(), Some(2));
    assert_eq!(ogk(&["check", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(ogk(&["check", "all", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn tolerance_env_overrides_inequality_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_ogk"))
        .args(["check", "young", "--trials", "10", "--out", out.to_str().unwrap()])
        .env("OGK_TOLERANCE", "0.25")
        .output()
        .unwrap();
    assert!(o.status.success());
    let r: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let fy = r.suites[0].checks.iter().find(|c| c.name.starts_with("fenchel_young")).unwrap();
    assert_eq!(fy.tolerance, 0.25);
}

#[test]
fn field_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = ogk(&["field", "--family", "z2-linear", "--phi", "power:2", "--grid", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "u,norm,adjacent_diff");
    assert_eq!(rows.len(), 6);
    let last: Vec<f64> = rows[5].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 2.0).abs() < 1e-10);

    let fam = dir.path().join("fam.json");
    std::fs::write(
        &fam,
        r#"{"name": "ramp", "group": "z2", "knots": [
            {"u": 0.0, "weight": 1.0, "values": [[1,0],[0,0]]},
            {"u": 1.0, "weight": 2.0, "values": [[1,0],[0,0]]}]}"#,
    )
    .unwrap();
    let o = ogk(&["field", "--family", fam.to_str().unwrap(), "--grid", "8", "--refine", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ratio"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 18);

    assert_eq!(ogk(&["field", "--family", "nope"]).status.code(), Some(2));
}
