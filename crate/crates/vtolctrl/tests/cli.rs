//! End-to-end checks of the `vtolctrl` binary: exit codes, file formats,
//! summary labels, and determinism.

use std::path::Path;
use std::process::Output;

use vtolctrl::cli::DEFAULT_CONFIG_JSON;

fn run(args: &[&str], out_dir: &Path) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_vtolctrl"));
    cmd.args(args).args(["--out", out_dir.to_str().unwrap()]);
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn synth_writes_certified_gain_files() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &[
            "synth",
            "--scenario",
            "case1_level",
            "--controllers",
            "lqr,h2",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    for name in ["gain_lqr.json", "gain_h2.json"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["certificate"]["satisfied"].as_bool().unwrap(), "{name}");
        assert!(v["spectral_abscissa"].as_f64().unwrap() < 0.0);
        assert!(v["K"].is_array());
    }
    let h2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gain_h2.json")).unwrap())
            .unwrap();
    assert!(h2["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_weights_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
    v["level"].as_object_mut().unwrap().remove("weights");
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, serde_json::to_string(&v).unwrap()).unwrap();

    let output = run(
        &["synth", "--config", cfg_path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("weights"), "stderr: {stderr}");
}

#[test]
fn singular_feedthrough_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
    v["level"]["weights"]["h2_input_weights"] = serde_json::json!([0.0]);
    let cfg_path = dir.path().join("singular.json");
    std::fs::write(&cfg_path, serde_json::to_string(&v).unwrap()).unwrap();

    let output = run(
        &[
            "synth",
            "--config",
            cfg_path.to_str().unwrap(),
            "--controllers",
            "h2",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("feedthrough"), "stderr: {stderr}");
}

#[test]
fn case1_summary_uses_the_pitch_rate_label() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["simulate", "--scenario", "case1_level", "--seeds", "2"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = stdout(&output);
    assert!(text.contains("q (rad/sec)"), "stdout: {text}");

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["columns"][0], "q (rad/sec)");
    assert!(metrics["config_hash"].is_string());
    assert!(dir.path().join("trace_lqr_seed0001.csv").exists());
    assert!(dir.path().join("comparison_q.svg").exists());
}

#[test]
fn case2_summary_uses_degree_angle_labels() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &[
            "simulate",
            "--scenario",
            "case2_hover",
            "--seeds",
            "1",
            "--controllers",
            "lqr",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = stdout(&output);
    for label in ["Roll angle (deg)", "Pitch angle (deg)", "Yaw angle (deg)"] {
        assert!(text.contains(label), "missing `{label}` in: {text}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--scenario", "case1_level", "--seeds", "1"];
    let out_a = run(&args, dir_a.path());
    let out_b = run(&args, dir_b.path());
    assert_eq!(out_a.stdout, out_b.stdout);
    let metrics_a = std::fs::read_to_string(dir_a.path().join("metrics.json")).unwrap();
    let metrics_b = std::fs::read_to_string(dir_b.path().join("metrics.json")).unwrap();
    assert_eq!(metrics_a, metrics_b);
    let trace_a = std::fs::read_to_string(dir_a.path().join("trace_h2_seed0001.csv")).unwrap();
    let trace_b = std::fs::read_to_string(dir_b.path().join("trace_h2_seed0001.csv")).unwrap();
    assert_eq!(trace_a, trace_b);
}

#[test]
fn trace_csv_header_lists_states_inputs_and_disturbance() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &[
            "simulate",
            "--scenario",
            "case1_level",
            "--seeds",
            "1",
            "--controllers",
            "lqr",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("trace_lqr_seed0001.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,theta,u,w,q,elevon,w");
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 7);
    assert!(!first.ends_with(','));
}

#[test]
fn aero_sweep_has_eleven_rows_and_monotone_lift() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["aero"], dir.path());
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    let text = std::fs::read_to_string(dir.path().join("aero_sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha_deg,CL,CDi,Cm");
    assert_eq!(lines.len(), 12); // header + 11 rows

    let mut prev_cl = f64::NEG_INFINITY;
    for line in &lines[1..] {
        assert!(!line.ends_with(','), "trailing delimiter in {line}");
        let fields: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[1] > prev_cl || (fields[0] == 0.0 && fields[1] == 0.0));
        prev_cl = fields[1];
    }
    assert!(dir.path().join("aero_polar.svg").exists());
}

#[test]
fn unknown_controller_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["synth", "--controllers", "mpc"], dir.path());
    assert_eq!(output.status.code(), Some(1));
}
