use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn divlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divlab"))
        .args(args)
        .env("DIVLAB_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

#[test]
fn certify_counterexample_passes() {
    let o = divlab(&["certify", "--field", "counterexample:n=4:gamma=auto", "--c", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "PASS");
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
}

#[test]
fn twisting_pairings_vanish() {
    let o = divlab(&["trace", "--field", "twisting:levels=8", "--method", "pairing", "--omega", "unit-square"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["verdict"], "PASS");
}

#[test]
fn separable_demo_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = divlab(&["--out", out, "demo", "separable", "--gamma", "1", "--rho0", "1", "--psi0", "1"]);
    assert_eq!(code(&o), 0);
    let r = report(dir.path(), "separable");
    let radius = r["data"]["gamma=1,rho0=1,psi0=1"]["numeric_blowup_radius"].as_f64().unwrap();
    assert!((radius - std::f64::consts::E).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("separable.blowup.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "gamma,rho0,psi0,rho_star,numeric_blowup_radius");
}

#[test]
fn list_prints_catalog() {
    let o = divlab(&["list"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() >= 10);

    let o = divlab(&["list", "--json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let items = v.as_array().expect("array catalog");
    assert!(items.len() >= 10);
    assert!(items.iter().all(|s| s["name"].is_string() && s["operation"].is_string()));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&divlab(&["list", "--no-such-flag"])), 2);
    assert_eq!(code(&divlab(&["frobnicate"])), 2);
    assert_eq!(code(&divlab(&["trace", "--field", "nonsense:q=1"])), 2);
    assert_eq!(code(&divlab(&["run", "no-such-recipe"])), 2);
    assert_eq!(code(&divlab(&["trace", "--field", "capillary:R=1", "--param", "bogus_key=1"])), 2);
}

#[test]
fn failed_tolerance_exits_1() {
    // the measured FD divergence is about 1e-9, far above this tolerance
    let o = divlab(&["certify", "--field", "counterexample:n=4:gamma=auto", "--tol", "divergence=1e-30"]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "FAIL");
    let failed: Vec<_> = r["checks"].as_array().unwrap().iter().filter(|c| c["verdict"] != "PASS").collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "fd_divergence");
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));

    let wrong = divlab(&["certify", "--field", "counterexample:n=4:gamma=auto", "--expect", "violated"]);
    assert_eq!(code(&wrong), 1);
}

#[test]
fn closed_stdout_is_not_a_crash() {
    use std::io::Read;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_divlab"))
        .args(["list", "--json"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(!err.contains("panicked"), "{err}");
    assert!(status.code().is_some_and(|c| c == 0));
}

#[test]
fn same_seed_gives_identical_reports() {
    let run = |seed: &str| {
        let o = divlab(&["--seed", seed, "density", "--field", "twisting:levels=8", "--param", "x0=[0.5,0]", "--param", "alpha=0.5", "--param", "k_lo=3", "--param", "k_hi=5"]);
        assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
        let mut v = stdout_json(&o);
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    let a = run("11");
    assert_eq!(a, run("11"));
    assert!(a.contains("\"seed\":11"));
    assert_ne!(a, run("12"));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 5, "separable": {"gamma": 2}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_config = stdout_json(&divlab(&["--config", cfg, "demo", "separable", "--rho0", "1", "--psi0", "1"]));
    assert_eq!(from_config["environment"]["seed"], 5);
    assert_eq!(from_config["scenario"]["params"]["gamma"], 2.0);

    let from_cli = stdout_json(&divlab(&["--config", cfg, "--seed", "9", "demo", "separable", "--gamma", "1", "--rho0", "1", "--psi0", "1"]));
    assert_eq!(from_cli["environment"]["seed"], 9);
    assert_eq!(from_cli["scenario"]["params"]["gamma"], 1.0);

    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let bad = divlab(&["--config", dir.path().join("bad.json").to_str().unwrap(), "list"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn run_recipe_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = divlab(&["--out", dir.path().to_str().unwrap(), "run", "strip-identity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "strip-identity");
    assert_eq!(r["verdict"], "PASS");
    assert_eq!(r["environment"]["precision"], "f64");
    assert!(r["environment"]["workers"].as_u64().unwrap() >= 1);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "PASS"));
    let csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert!(!csvs.is_empty());
    for e in csvs {
        let text = std::fs::read_to_string(e.path()).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.split(',').all(|c| !c.is_empty() && c.parse::<f64>().is_err()), "{header}");
    }
}
