//! End-to-end tests of the `qhjspin` binary and the run API: output file
//! schemas, exit codes, and the scenario examples from the interface
//! contract.

use std::path::Path;
use std::process::Command as Process;

use qhjspin::run::{run_scenario, Command, Overrides};

const FREE_SCENARIO: &str = r#"
[setup]
energy = 2.0

[potential]
kind = "constant"
v0 = 0.0

[domain]
x_min = -5.0
x_max = 5.0

[tolerances]
solver = 1e-12
"#;

const LINEAR_TRAJECTORY_SCENARIO: &str = r#"
[setup]
energy = 2.0

[potential]
kind = "linear"
slope = 0.1

[domain]
x_min = -1.0
x_max = 10.05
x0 = 0.0

[trajectory]
x0 = 0.0
t_span = [0.0, 25.0]
on_turning_point = "stop"

[tolerances]
solver = 1e-11
"#;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_qhjspin"))
}

fn write_scenario(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_free_particle_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), FREE_SCENARIO);
    let out = dir.path().join("out");
    let status = bin()
        .args(["verify", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "stderr: {}", String::from_utf8_lossy(&status.stderr));

    let csv = std::fs::read_to_string(out.join("verify.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,S_prime,schwarzian,curvature,mass_shell,residual_raw,residual_norm"
    );
    let mut worst = 0.0f64;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        worst = worst.max(fields[6].parse::<f64>().unwrap().abs());
    }
    assert!(worst < 1e-8, "max residual {worst}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "verify");
    assert_eq!(summary["branch"], "s0");
    assert!(summary["max_residual_norm_s0"].as_f64().unwrap() < 1e-8);
    assert_eq!(summary["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn trajectory_csv_ends_with_turning_point_event() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), LINEAR_TRAJECTORY_SCENARIO);
    let out = dir.path().join("out");
    let output = bin()
        .args(["trajectory", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x,xdot,conservation_residual,event");
    let last = lines.pop().unwrap();
    assert!(last.ends_with(",turning_point"), "last row: {last}");
    let x_event: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x_event - 9.990_638_15).abs() < 1e-5, "event at {x_event}");
}

#[test]
fn node_start_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = LINEAR_TRAJECTORY_SCENARIO.replace("x0 = 0.0", "x0 = 9.995");
    let scenario = write_scenario(dir.path(), &text);
    let output = bin()
        .args(["trajectory", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("cannot start"), "stderr: {stderr}");
    assert!(stderr.contains("node"), "diagnostic should name the node: {stderr}");
}

#[test]
fn validation_failure_exits_1_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{FREE_SCENARIO}\n[action]\na = 0.0\n");
    let scenario = write_scenario(dir.path(), &text);
    let output = bin()
        .args(["verify", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("action.a"));
}

#[test]
fn unknown_key_exits_1_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{FREE_SCENARIO}\nturbulence = true\n");
    let scenario = write_scenario(dir.path(), &text);
    let output = bin()
        .args(["solve", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("turbulence"));
}

#[test]
fn missing_scenario_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["solve", "--scenario"])
        .arg(dir.path().join("nope.toml"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn branch_override_selects_z0() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), FREE_SCENARIO);
    let out = dir.path().join("out");
    let output = bin()
        .args(["verify", "--branch", "z0", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["branch"], "z0");
    assert!(summary["max_residual_norm_z0"].as_f64().unwrap() < 1e-8);
}

#[test]
fn solve_momentum_limits_sweep_through_api() {
    let dir = tempfile::tempdir().unwrap();

    let summary =
        run_scenario(FREE_SCENARIO, Command::Solve, &dir.path().join("solve"), &Overrides::default())
            .unwrap();
    assert_eq!(summary.outputs, vec!["solve.csv".to_string(), "summary.json".to_string()]);
    let csv = std::fs::read_to_string(dir.path().join("solve/solve.csv")).unwrap();
    assert!(csv.starts_with("x,theta1,chi1,theta2,chi2,cross_current\n"));
    // Unit initial states: cross-current column is 1 everywhere.
    for line in csv.lines().skip(1) {
        let k: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!((k - 1.0).abs() < 1e-9);
    }

    let summary = run_scenario(
        FREE_SCENARIO,
        Command::Momentum,
        &dir.path().join("momentum"),
        &Overrides::default(),
    )
    .unwrap();
    assert!(summary.outputs.contains(&"momentum.csv".to_string()));
    let csv = std::fs::read_to_string(dir.path().join("momentum/momentum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,rhs_eq20,rhs_eq21,product_check");
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        // Constant potential: both momenta equal E - 1/E = 1.5 exactly and
        // the velocity product agrees.
        assert_eq!(fields[1], 1.5);
        assert_eq!(fields[2], 1.5);
        assert!((fields[3] - 1.5).abs() < 1e-8);
    }

    let summary = run_scenario(
        FREE_SCENARIO,
        Command::Limits,
        &dir.path().join("limits"),
        &Overrides::default(),
    )
    .unwrap();
    assert!(summary.outputs.contains(&"limits.csv".to_string()));
    let csv = std::fs::read_to_string(dir.path().join("limits/limits.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,f_minus_1,eq8_deviation,T_over_mc2");
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[2], 0.0, "constant potential momentum deviation");
        assert!((fields[3] - 1.0).abs() < 1e-12, "T/mc^2 for E=2, V=0");
    }

    let text = format!("{FREE_SCENARIO}\n[sweep]\nparameter = \"energy\"\nvalues = [1.5, 2.0, 0.5]\n");
    let summary =
        run_scenario(&text, Command::Sweep, &dir.path().join("sweep"), &Overrides::default())
            .unwrap();
    assert!(summary.outputs.contains(&"sweep.csv".to_string()));
    let csv = std::fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "id,value,max_residual_norm_s0,max_residual_norm_z0,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[2].ends_with(",ok"));
    // E = 0.5 is forbidden everywhere: recorded as a failed row, not a crash.
    assert!(lines[3].starts_with("2,"));
    assert!(!lines[3].ends_with(",ok"));
}

/// Every shipped scenario file must stay parseable and valid.
#[test]
fn shipped_scenarios_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        qhjspin::parse_scenario(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4, "expected the sample scenarios, found {seen}");
}

#[test]
fn sweep_requires_sweep_section() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_scenario(FREE_SCENARIO, Command::Sweep, dir.path(), &Overrides::default())
        .unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn trajectory_requires_trajectory_section() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_scenario(FREE_SCENARIO, Command::Trajectory, dir.path(), &Overrides::default())
        .unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
