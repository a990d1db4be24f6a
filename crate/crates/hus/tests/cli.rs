//! End-to-end tests against the compiled binary: exit codes, artifact
//! encodings, and determinism of serialized reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hus"))
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const ZERO_PERTURBATION: &str = r#"
[field]
kind = "rotation"
rates = [1.0]

[lambda]
re = 1.0

[perturbation]
shape = "bump"
magnitude = 0.0

[sample_grid]
axes = [
    { min = -2.0, max = 2.0, count = 7 },
    { min = -2.0, max = 2.0, count = 7 },
]
halton_count = 10

[eval_window]
t_min = -1.0
t_max = 1.0
count = 3
"#;

#[test]
fn verify_zero_perturbation_config_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", ZERO_PERTURBATION);
    let out_path = dir.path().join("report.json");
    let output = bin()
        .args(["verify"])
        .arg(&config)
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    for key in [
        "residual_of_z_max",
        "flow_compat_max_defect",
        "semigroup_max_defect",
        "idempotence_defect",
    ] {
        let v = report[key].as_f64().unwrap();
        assert!(v <= 1e-6, "{key} = {v}");
    }
    assert!(report["bound_check"]["passed"].as_bool().unwrap());
    assert!(
        report["correction"]["distance_measured"].as_f64().unwrap() <= 1e-6,
        "distance should be ~0"
    );
    assert!(report.get("wall_times").is_none(), "wall times must be stripped");
}

#[test]
fn verify_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", ZERO_PERTURBATION);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out_path in [&a, &b] {
        let output = bin()
            .args(["verify"])
            .arg(&config)
            .arg("--output")
            .arg(out_path)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flow_on_a_unit_speed_euler_field_doubles_in_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "flow.toml",
        r#"
[field]
kind = "euler"
offset = 1.0
weights = [0.0]

[lambda]
re = 2.0

[perturbation]
shape = "constant"
magnitude = 0.0

[sample_grid]
axes = [{ min = 2.0, max = 2.0, count = 1 }]

[eval_window]
t_min = 0.0
t_max = 0.6931471805599453
count = 5
"#,
    );
    let output = bin().args(["flow"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let text = stdout_of(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1");
    let last = lines.last().unwrap();
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[0] - std::f64::consts::LN_2).abs() <= 1e-12);
    assert!((cells[1] - 4.0).abs() <= 1e-8, "final state {}", cells[1]);
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn correct_emits_the_documented_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "line.toml",
        r#"
[field]
kind = "affine"
matrix = [[0.0]]
translation = [1.0]

[lambda]
re = -2.0

[perturbation]
shape = "constant"
magnitude = 0.05

[sample_grid]
axes = [{ min = -1.0, max = 1.0, count = 11 }]

[eval_window]
t_min = -1.0
t_max = 1.0
count = 3
"#,
    );
    let output = bin().args(["correct"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let text = stdout_of(&output);
    assert!(text.starts_with("x1,re_1,im_1\n"), "got: {text}");
    // Constant perturbation on the translation field: the correction
    // recovers the zero solution, so every value column is ~0.
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 3);
        assert!(cells[1].abs() <= 1e-6 && cells[2].abs() <= 1e-6);
    }
}

#[test]
fn demo_prints_three_passing_rows() {
    let output = bin().args(["demo"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "stdout: {stdout}");
    for row in rows {
        assert!(row.trim_end().ends_with("pass"), "row: {row}");
    }
}

#[test]
fn catalog_lists_every_field_kind() {
    let output = bin().args(["catalog"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = stdout_of(&output);
    for kind in ["euler", "affine", "rotation", "bump", "geodesic"] {
        assert!(stdout.contains(kind), "missing {kind}");
    }
}

#[test]
fn unknown_subcommands_exit_with_usage_code() {
    let output = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_override_keys_reject_before_any_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", ZERO_PERTURBATION);
    let out_path = dir.path().join("report.json");
    let output = bin()
        .args(["verify"])
        .arg(&config)
        .arg("--output")
        .arg(&out_path)
        .args(["--set", "grid.count=3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr_of(&output));
    assert!(!out_path.exists(), "no artifact may be written");
    assert!(stderr_of(&output).contains("unknown override key"));
}

#[test]
fn lambda_on_the_imaginary_axis_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        &ZERO_PERTURBATION.replace("re = 1.0", "re = 0.0"),
    );
    let output = bin().args(["verify"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("Re(lambda)"), "stderr: {}", stderr_of(&output));
}

#[test]
fn affine_translation_outside_the_kernel_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad-affine.toml",
        r#"
[field]
kind = "affine"
matrix = [[0.0, 1.0], [0.0, 0.0]]
translation = [0.0, 1.0]

[lambda]
re = 1.0

[perturbation]
shape = "constant"
magnitude = 0.1

[sample_grid]
axes = [
    { min = -1.0, max = 1.0, count = 3 },
    { min = -1.0, max = 1.0, count = 3 },
]

[eval_window]
t_min = 0.0
t_max = 1.0
count = 2
"#,
    );
    let output = bin().args(["verify"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr_of(&output));
    assert!(stderr_of(&output).contains("translation"));
}

#[test]
fn orbit_blow_up_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "blowup.toml",
        r#"
[field]
kind = "geodesic"
base_dim = 1
christoffel = [[[-3.0]]]

[lambda]
re = 2.0

[perturbation]
shape = "bump"
magnitude = 0.1

[sample_grid]
axes = [
    { min = 0.0, max = 1.0, count = 3 },
    { min = 0.8, max = 1.2, count = 3 },
]

[eval_window]
t_min = 0.0
t_max = 0.5
count = 2
"#,
    );
    let output = bin().args(["verify"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3), "stderr: {}", stderr_of(&output));
    let err = stderr_of(&output);
    assert!(err.contains("correct"), "stage label missing: {err}");
}
