use std::fs;
use std::path::Path;
use std::process::Command;

fn netcoarse(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_netcoarse")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_with_zero_t_end_writes_one_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = netcoarse(&["simulate", "--t-end", "0", "--copies", "3", "--n", "10", "--out", path(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 3);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config"]["t_end"], 0.0);
}

#[test]
fn same_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let args = ["simulate", "--copies", "4", "--n", "30", "--t-end", "1", "--seed", "9", "--out", path(d.path())];
        assert_eq!(netcoarse(&args).0, 0);
    }
    for f in ["trajectories.csv", "pooled.csv", "mean.csv", "config.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn out_of_range_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(netcoarse(&["simulate", "--r", "1.5", "--out", path(dir.path())]).0, 2);
    assert_eq!(netcoarse(&["simulate", "--n", "1", "--out", path(dir.path())]).0, 2);
    assert_eq!(netcoarse(&["simulate", "--time-unit", "hours"]).0, 2);
    assert_eq!(netcoarse(&["rates", "--time-unit", "n", "--out", path(dir.path())]).0, 2);
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"copies": 50, "n": 12, "t_end": 0.2}"#).unwrap();
    let out = dir.path().join("out");
    let (code, err) = netcoarse(&["simulate", "--config", path(&cfg), "--copies", "2", "--out", path(&out)]);
    assert_eq!(code, 0, "{err}");
    let resolved: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved["copies"], 2);
    assert_eq!(resolved["n"], 12);

    // the resolved config reproduces the run
    let again = dir.path().join("again");
    assert_eq!(netcoarse(&["simulate", "--config", path(&out.join("config.json")), "--out", path(&again)]).0, 0);
    assert_eq!(fs::read(out.join("trajectories.csv")).unwrap(), fs::read(again.join("trajectories.csv")).unwrap());

    fs::write(&cfg, r#"{"copies": 5, "colour": "red"}"#).unwrap();
    let (code, err) = netcoarse(&["simulate", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");

    fs::write(&cfg, "{not json").unwrap();
    assert_eq!(netcoarse(&["simulate", "--config", path(&cfg), "--out", path(&out)]).0, 2);
}

#[test]
fn lifting_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "cpi", "--n", "40", "--copies", "20", "--t-end", "20", "--set", "p=0.3", "--set", "retry_budget=1",
        "--out", path(dir.path()),
    ];
    let (code, err) = netcoarse(&args);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn fixpoint_writes_solver_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fixpoint", "--n", "30", "--copies", "30", "--set", "max_iters=2", "--set", "p=0.4", "--out", path(dir.path())];
    let (code, err) = netcoarse(&args);
    assert!(code == 0 || code == 4, "{code}: {err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solver.json")).unwrap()).unwrap();
    let norms = report["residual_norms"].as_array().unwrap();
    assert!(!norms.is_empty());
    assert!(report["noise_floor"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("residuals.csv").exists());
}

#[test]
fn oracle_and_edge_density_cpi_run() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(netcoarse(&["oracle", "--t-end", "1", "--out", path(&dir.path().join("o"))]).0, 0);
    let oracle = fs::read_to_string(dir.path().join("o/oracle.csv")).unwrap();
    assert!(oracle.starts_with("t,rho,degree,cherry,triangle"));
    let c = dir.path().join("c");
    let args = ["cpi", "--copies", "10", "--t-end", "40", "--set", "coarse_variable=edge_density", "--out", path(&c)];
    assert_eq!(netcoarse(&args).0, 0);
    assert!(dir.path().join("c/trace.csv").exists());
    assert!(!dir.path().join("c/curves.csv").exists());
}
