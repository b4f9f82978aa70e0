//! Command-line surface: exit codes, determinism and output artifacts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vrp-solver"))
}

fn write_unit_instance(dir: &Path) -> std::path::PathBuf {
    // Depot at the origin, one customer at (0.3, 0.4): optimal cost 1.0.
    let json = r#"{
  "format_version": 1,
  "variant": {"multi_depot": false, "backhaul": false, "duration_limit": false,
               "open_routes": false, "time_windows": false, "tsp_mode": false},
  "depots": 1,
  "capacity": 50.0,
  "nodes": [
    {"x": 0.0, "y": 0.0},
    {"x": 0.3, "y": 0.4, "demand": 5.0}
  ]
}"#;
    let path = dir.join("unit.json");
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn solve_prints_the_round_trip_cost() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_unit_instance(dir.path());
    let out = bin()
        .args(["solve"])
        .arg(&inst)
        .args(["--mode", "greedy+ls", "--iters", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cost 1.000000"), "stdout: {stdout}");
}

#[test]
fn unknown_flag_exits_with_usage_code() {
    let out = bin().args(["solve", "--definitely-not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("benchmark"));
}

#[test]
fn benchmark_without_references_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    // Flag missing entirely:
    let out = bin()
        .args(["benchmark", "--dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // Flag present but the file does not exist:
    let out = bin()
        .args(["benchmark", "--dir"])
        .arg(dir.path())
        .args(["--refs", "/definitely/missing.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_instance_file_is_a_runtime_error() {
    let out = bin()
        .args(["solve", "/no/such/instance.json", "--mode", "greedy+ls"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_is_byte_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args(["generate", "--variant", "vrpb", "--n", "20", "--seed", "7"])
            .args(["--out-dir"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        let file = std::fs::read_dir(dir.path())
            .unwrap()
            .next()
            .unwrap()
            .unwrap()
            .path();
        std::fs::read(file).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn solve_writes_solution_and_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bin()
        .args(["generate", "--variant", "cvrp", "--n", "10", "--seed", "3", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(gen.status.success());
    let instance = dir.path().join("cvrp-n10-m1-seed3.json");
    let sol = dir.path().join("out.sol");
    let trace = dir.path().join("trace.csv");
    let out = bin()
        .args(["solve"])
        .arg(&instance)
        .args(["--mode", "random+ls", "--iters", "5", "--seed", "1", "--out"])
        .arg(&sol)
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let sol_text = std::fs::read_to_string(&sol).unwrap();
    assert!(sol_text.starts_with("Route #1"));
    assert!(sol_text.contains("Cost "));
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("iteration,best_cost,wall_clock_ms"));
    assert_eq!(trace_text.lines().count(), 7); // header + iterations 0..=5
}

#[test]
fn train_adapt_and_neural_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("tiny.ckpt");
    // Zero-epoch training: writes an untrained checkpoint quickly.
    let out = bin()
        .args(["train", "--variant", "mdvrp", "--n", "6", "--m", "2"])
        .args(["--epochs", "0", "--steps", "1", "--batch", "2", "--seed", "5"])
        .args(["--out"])
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Solve a routing instance with the checkpoint.
    let gen = bin()
        .args(["generate", "--variant", "mdvrp", "--n", "8", "--seed", "2", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(gen.status.success());
    let instance = dir.path().join("mdvrp-n8-m2-seed2.json");
    let out = bin()
        .args(["solve"])
        .arg(&instance)
        .args(["--mode", "neural+ls", "--iters", "3", "--checkpoint"])
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Adapt for single tours and solve a tsp instance.
    let tsp_ckpt = dir.path().join("tsp.ckpt");
    let out = bin()
        .args(["adapt-tsp", "--checkpoint"])
        .arg(&ckpt)
        .args(["--out"])
        .arg(&tsp_ckpt)
        .output()
        .unwrap();
    assert!(out.status.success());
    let gen = bin()
        .args(["generate", "--variant", "tsp", "--n", "7", "--seed", "4", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(gen.status.success());
    let tsp_instance = dir.path().join("tsp-n7-m1-seed4.json");
    let out = bin()
        .args(["solve"])
        .arg(&tsp_instance)
        .args(["--mode", "neural+ls", "--iters", "2", "--checkpoint"])
        .arg(&tsp_ckpt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_unit_instance(dir.path());
    let config = dir.path().join("defaults.toml");
    std::fs::write(&config, "[solve]\nmode = \"random+ls\"\niterations = 0\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .arg("solve")
        .arg(&inst)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cost 1.000000"), "stdout: {stdout}");

    // Bad config keys are usage errors.
    std::fs::write(&config, "definitely_unknown_key = 1\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .arg("solve")
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
