use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_infsample"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "infsample {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_split_fit_sample_refit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--n", "3000", "--d", "4", "--noise", "student_t3", "--seed", "5", "-o", "data.csv"]);
    let theta = json(&d.join("data.theta.json"));
    assert_eq!(theta["theta"].as_array().unwrap().len(), 4);

    run(
        d,
        &["split", "data.csv", "--pilot-fraction", "0.05", "--seed", "1", "--pilot-out", "p.csv", "--rest-out", "r.csv"],
    );
    let lines = |f: &str| std::fs::read_to_string(d.join(f)).unwrap().lines().count();
    assert_eq!(lines("p.csv") + lines("r.csv"), 3000 + 2);

    run(d, &["fit", "--model", "ols", "p.csv", "-o", "pilot.json"]);
    let pilot = json(&d.join("pilot.json"));
    assert_eq!(pilot["family"], "ols");
    assert!(pilot["converged"].as_bool().unwrap());
    assert!(pilot.get("tau").is_none());

    let out = run(
        d,
        &[
            "sample", "r.csv", "--scheme", "influence-coef", "--model", "ols", "--size", "200", "--floor-frac", "0.1",
            "--seed", "9", "--pilot", "pilot.json", "--pilot-data", "p.csv", "-o", "s.csv",
        ],
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((summary["sum_pi"].as_f64().unwrap() - 200.0).abs() < 1e-6);
    let realized = summary["realized_size"].as_u64().unwrap() as usize;
    let sample = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(sample.lines().next().unwrap().ends_with(",__weight"));
    assert_eq!(sample.lines().count(), realized + 1);

    run(d, &["fit", "--model", "quantile", "--tau", "0.5", "s.csv", "-o", "q.json"]);
    let q = json(&d.join("q.json"));
    assert_eq!(q["tau"], 0.5);
    assert_eq!(q["columns"].as_array().unwrap().len(), 4, "weight column must not become a predictor");
}

#[test]
fn experiment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("exp.json"),
        r#"{
            "data_source": {"synth": {"n": 2000, "d": 3, "noise": "heteroskedastic", "seed": 4}},
            "model": "ols",
            "schemes": ["uniform", {"kind": "influence-coef", "diagonal_only": true}],
            "sizes": [50, 150],
            "replications": 3
        }"#,
    )
    .unwrap();
    run(d, &["experiment", "--config", "exp.json", "-o", "res.csv"]);
    let text = std::fs::read_to_string(d.join("res.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,model,target,m_expected,m_realized,replication,seed,coef_err_sq,loss,fit_converged"
    );
    assert_eq!(lines.count(), 2 * 2 * 3);
    assert!(text.contains("influence-coef+jacobi"));

    run(d, &["experiment", "--config", "exp.json", "-o", "res.json"]);
    let j = json(&d.join("res.json"));
    assert_eq!(j["rows"].as_array().unwrap().len(), 12);
    assert_eq!(j["summary"].as_array().unwrap().len(), 4);
}

#[test]
fn csv_data_source_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--n", "1000", "--d", "2", "--seed", "1", "-o", "data.csv"]);
    std::fs::create_dir(d.join("cfg")).unwrap();
    std::fs::write(
        d.join("cfg").join("exp.json"),
        r#"{
            "data_source": {"csv": {"path": "../data.csv", "response": "y", "add_intercept": true}},
            "model": "quantile", "tau": 0.5,
            "schemes": ["residual"], "sizes": [100]
        }"#,
    )
    .unwrap();
    run(d, &["experiment", "--config", "cfg/exp.json", "-o", "out.csv"]);
    assert!(std::fs::read_to_string(d.join("out.csv")).unwrap().contains("residual,quantile"));
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "a,y\n1,2\n3,\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_infsample"))
        .current_dir(d)
        .args(["fit", "--model", "ols", "bad.csv", "-o", "f.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("`y`"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_infsample"))
        .current_dir(d)
        .args(["fit", "--model", "quantile", "bad.csv", "-o", "f.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
