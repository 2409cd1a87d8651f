use std::path::Path;
use std::process::{Command, Output};

fn sobonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sobonet")).args(args).env_remove("SOBONET_CALIBRATION").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn square_eval_audit_and_standardize() {
    let dir = tempfile::tempdir().unwrap();
    let sq = path(dir.path(), "sq.json");
    let st = path(dir.path(), "st.json");
    assert!(sobonet(&["build-square", "--m", "1", "--out", &sq]).status.success());
    let o = sobonet(&["eval", "--net", &sq, "--x", "0.25"]);
    assert_eq!(stdout(&o).trim(), "0.125");
    let o = sobonet(&["audit", "--net", &sq]);
    assert!(stdout(&o).starts_with("L="), "{}", stdout(&o));
    assert!(sobonet(&["to-standard", "--net", &sq, "--out", &st]).status.success());
    for x in ["0.1", "0.5", "0.9"] {
        let a = stdout(&sobonet(&["eval", "--net", &sq, "--x", x]));
        let b = stdout(&sobonet(&["eval", "--net", &st, "--x", x]));
        let (a, b): (f64, f64) = (a.trim().parse().unwrap(), b.trim().parse().unwrap());
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn multiplication_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let m = path(dir.path(), "m.json");
    assert!(sobonet(&["build-mult", "--M", "2", "--eps", "1e-3", "--out", &m]).status.success());
    let v: f64 = stdout(&sobonet(&["eval", "--net", &m, "--x", "-1.5,0.7"])).trim().parse().unwrap();
    assert!((v + 1.05).abs() <= 1e-3);
    assert_eq!(stdout(&sobonet(&["eval", "--net", &m, "--x", "0,1.3"])).trim(), "0");
}

#[test]
fn norms_and_tolerance_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sq = path(dir.path(), "sq.json");
    sobonet(&["build-square", "--m", "3", "--out", &sq]);
    let o = sobonet(&["norms", "--net", &sq, "--fn", "square", "--budget", "4000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,s,value,samples,seed,method"));
    let value: f64 = lines.next().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    // sup error of the 3-level interpolant is 2^-8, approached from below
    assert!(value <= 2f64.powi(-8) && value > 0.99 * 2f64.powi(-8));
    let o = sobonet(&["norms", "--net", &sq, "--fn", "square", "--budget", "4000", "--tolerance", "1e-6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = sobonet(&["norms", "--net", &sq, "--fn", "square", "--budget", "4000", "--tolerance", "1e-2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sobonet(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sobonet(&["build-square", "--m", "0", "--out", &path(dir.path(), "x.json")]).status.code(), Some(1));
    assert_eq!(sobonet(&["eval", "--net", &path(dir.path(), "missing.json"), "--x", "0"]).status.code(), Some(1));
    let sq = path(dir.path(), "sq.json");
    sobonet(&["build-square", "--m", "2", "--out", &sq]);
    assert_eq!(sobonet(&["eval", "--net", &sq, "--x", "0,1"]).status.code(), Some(1));
    assert_eq!(sobonet(&["eval", "--net", &sq, "--x", "zero"]).status.code(), Some(1));
    let o = sobonet(&["build-approx", "--fn", "nope", "--n", "2", "--eps", "0.1", "--out", &path(dir.path(), "a.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(sobonet(&["probe-lb", "--N", "0"]).status.code(), Some(1));
}

#[test]
fn approximant_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let patches = path(dir.path(), "p.json");
    let o = sobonet(&[
        "build-approx", "--fn", "sin", "--n", "2", "--eps", "0.2", "--budget", "4000", "--out", &a, "--patches", &patches,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&patches).unwrap()).unwrap();
    assert!(p["N"].as_u64().unwrap() >= 1);
    assert_eq!(p["n"], 2);
    let o = sobonet(&["norms", "--net", &a, "--fn", "sin", "--budget", "4000", "--seed", "3", "--tolerance", "0.21"]);
    assert!(o.status.success(), "{}", stdout(&o));

    let csv_path = path(dir.path(), "sweep.csv");
    let o = sobonet(&["sweep", "--fn", "sin", "--n", "2", "--eps-list", "0.3,0.2", "--budget", "4000", "--out", &csv_path]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,error_s0,error_s1,error_target_s,L,M,N,N_grid,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.3,") && lines[1].ends_with(','));
    // untimed sweeps are reproducible byte for byte
    let again = path(dir.path(), "again.csv");
    sobonet(&["sweep", "--fn", "sin", "--n", "2", "--eps-list", "0.3,0.2", "--budget", "4000", "--out", &again]);
    assert_eq!(std::fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn calibration_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cal = path(dir.path(), "cal.json");
    std::fs::write(&cal, r#"{"version":7,"entries":[{"d":1,"n":2,"c":0.0}]}"#).unwrap();
    let o = sobonet(&[
        "--calibration", &cal, "build-approx", "--fn", "sin", "--n", "2", "--eps", "0.2", "--out", &path(dir.path(), "a.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let missing = path(dir.path(), "none.json");
    let o = Command::new(env!("CARGO_BIN_EXE_sobonet"))
        .args(["build-approx", "--fn", "sin", "--n", "2", "--eps", "0.2", "--out", &path(dir.path(), "a.json")])
        .env("SOBONET_CALIBRATION", &missing)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
