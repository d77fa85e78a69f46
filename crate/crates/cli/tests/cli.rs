//! End-to-end tests of the `mbpre` binary: config validation with exit
//! code 1, runtime failures with exit code 2, output formats, digests,
//! and the closed-form survival column.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, contents: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, contents).unwrap();
    path
}

fn mbpre(command: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbpre"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .expect("binary should spawn")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn survival_on_the_constant_geometric_model_matches_the_closed_form() {
    let dir = workdir("closed-form");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "survival",
                "scenario": {{ "kind": "deterministic_geometric", "mean": 1.0 }},
                "n_grid": [1, 2, 4, 8, 16, 32],
                "replicas": 200,
                "out": "{}"
            }}"#,
            out.display()
        ),
    );
    let output = mbpre("survival", &config, &[]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let csv = fs::read_to_string(out.join("survival.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "type_i,n,p_hat,stderr,sqrt_n_p,capped_fraction"
    );
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6, "row has the header's width: {line}");
        let n: f64 = cells[1].parse().unwrap();
        let p_hat: f64 = cells[2].parse().unwrap();
        assert!(
            (p_hat - 1.0 / (n + 1.0)).abs() < 1e-12,
            "critical geometric survival at n = {n} should be 1/(n+1), got {p_hat}"
        );
    }
}

#[test]
fn floats_are_printed_with_seventeen_significant_digits() {
    let dir = workdir("float-format");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "survival",
                "scenario": {{ "kind": "deterministic_geometric", "mean": 1.0 }},
                "n_grid": [1],
                "replicas": 10,
                "out": "{}"
            }}"#,
            out.display()
        ),
    );
    let output = mbpre("survival", &config, &[]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let csv = fs::read_to_string(out.join("survival.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let p_hat = row.split(',').nth(2).unwrap();
    assert_eq!(
        p_hat, "5.0000000000000000e-1",
        "survival at n = 1 is exactly one half"
    );
}

#[test]
fn minimal_config_gets_the_documented_defaults() {
    let dir = workdir("defaults");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        r#"{ "command": "survival", "scenario": { "kind": "scalar_symmetric", "delta": 0.5 } }"#,
    );
    // Replica and output overrides keep the run small without touching
    // the config file, so the echoed defaults stay visible.
    let output = mbpre(
        "survival",
        &config,
        &["--replicas", "50", "--out", out.to_str().unwrap()],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let echo = &manifest["config"];
    assert_eq!(
        echo["n_grid"],
        serde_json::json!([64, 128, 256, 512, 1024, 2048, 4096]),
        "default grid is the powers of two from 64 to 4096"
    );
    assert_eq!(echo["seed"], 0);
    assert_eq!(echo["type_index"], 1);
    assert_eq!(echo["replicas"], 50, "echo reflects the applied override");
    assert_eq!(manifest["overrides"]["replicas"], 50);
    assert!(manifest["rng"]["stream_scheme"]
        .as_str()
        .unwrap()
        .contains("stream id r"));
}

#[test]
fn state_weights_off_by_ten_percent_name_the_field() {
    let dir = workdir("bad-weights");
    let config = write_config(
        &dir,
        r#"{
            "command": "survival",
            "scenario": { "kind": "finite_mixture", "states": [
                { "weight": 0.5, "laws": [ { "support": [ { "z": [2], "prob": 0.5 }, { "z": [0], "prob": 0.5 } ] } ] },
                { "weight": 0.4, "laws": [ { "support": [ { "z": [1], "prob": 1.0 } ] } ] }
            ] }
        }"#,
    );
    let output = mbpre("survival", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("scenario.states.weight") && stderr.contains("0.9"),
        "error should name the weight field and the bad sum: {stderr}"
    );
}

#[test]
fn type_index_past_the_type_count_is_rejected() {
    let dir = workdir("bad-type-index");
    let config = write_config(
        &dir,
        r#"{
            "command": "survival",
            "scenario": { "kind": "scalar_symmetric", "delta": 0.5 },
            "type_index": 2
        }"#,
    );
    let output = mbpre("survival", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(
        stderr_of(&output).contains("type index out of range"),
        "got: {}",
        stderr_of(&output)
    );
}

#[test]
fn config_written_for_another_command_is_rejected() {
    let dir = workdir("command-mismatch");
    let config = write_config(
        &dir,
        r#"{ "command": "tau", "scenario": { "kind": "scalar_symmetric", "delta": 0.5 } }"#,
    );
    let output = mbpre("survival", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("'tau'"));
}

#[test]
fn unknown_config_fields_and_missing_files_fail_validation() {
    let dir = workdir("parse-errors");
    let config = write_config(
        &dir,
        r#"{ "command": "survival", "scenario": { "kind": "scalar_symmetric", "delta": 0.5 }, "bogus": 1 }"#,
    );
    let output = mbpre("survival", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("bogus"));

    let output = mbpre("survival", Path::new("/nonexistent/config.json"), &[]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn an_unwritable_output_directory_exits_with_the_runtime_code() {
    let dir = workdir("runtime-error");
    // The output path runs through a regular file, so creating the
    // directory fails after estimation succeeds.
    let blocker = dir.join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "lyapunov",
                "scenario": {{ "kind": "scalar_symmetric", "delta": 0.5 }},
                "n_grid": [8],
                "replicas": 50,
                "out": "{}"
            }}"#,
            blocker.join("out").display()
        ),
    );
    let output = mbpre("lyapunov", &config, &[]);
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr_of(&output));
    assert!(stderr_of(&output).contains("runtime error"));
}

#[test]
fn manifest_digests_match_the_files_on_disk() {
    use sha2::{Digest, Sha256};

    let dir = workdir("digests");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "lyapunov",
                "scenario": {{ "kind": "scalar_symmetric", "delta": 0.5 }},
                "n_grid": [32],
                "replicas": 500,
                "out": "{}"
            }}"#,
            out.display()
        ),
    );
    let output = mbpre("lyapunov", &config, &[]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_object().unwrap();
    assert!(outputs.contains_key("lyapunov.csv"));
    assert!(outputs.contains_key("lyapunov_summary.json"));
    for (name, entry) in outputs {
        let bytes = fs::read(out.join(name)).unwrap();
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(
            entry["sha256"].as_str().unwrap(),
            hex,
            "digest of {name} should match the file"
        );
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn law_dump_lists_every_state_and_type() {
    let dir = workdir("law-dump");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "conditions",
                "scenario": {{ "kind": "finite_mixture", "states": [
                    {{ "weight": 0.5, "laws": [ {{ "support": [ {{ "z": [2], "prob": 0.5 }}, {{ "z": [0], "prob": 0.5 }} ] }} ] }},
                    {{ "weight": 0.5, "laws": [ {{ "support": [ {{ "z": [1], "prob": 1.0 }} ] }} ] }}
                ] }},
                "replicas": 200,
                "lyapunov_n": 16,
                "dump_laws": true,
                "out": "{}"
            }}"#,
            out.display()
        ),
    );
    let output = mbpre("conditions", &config, &[]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let laws = fs::read_to_string(out.join("laws.txt")).unwrap();
    assert!(laws.contains("# state 1 (weight 0.5) parent type 1"));
    assert!(laws.contains("# state 2 (weight 0.5) parent type 1"));
    assert!(laws.contains("z_1,prob"));

    let report = fs::read_to_string(out.join("conditions_report.txt")).unwrap();
    assert!(!report.is_empty());
    let csv = fs::read_to_string(out.join("conditions.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "quantity,estimate,stderr,n,replicas"
    );
}

#[test]
fn start_direction_validation_names_the_field() {
    let dir = workdir("bad-start");
    let config = write_config(
        &dir,
        r#"{
            "command": "lyapunov",
            "scenario": { "kind": "two_type_critical", "gamma": 0.3 },
            "start": { "x": [0.25, 0.25, 0.5], "a": 1.0 }
        }"#,
    );
    let output = mbpre("lyapunov", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("start.x") && stderr.contains("3 weights"),
        "got: {stderr}"
    );

    let config = write_config(
        &dir,
        r#"{
            "command": "lyapunov",
            "scenario": { "kind": "two_type_critical", "gamma": 0.3 },
            "start": { "x": { "unit": 3 }, "a": 1.0 }
        }"#,
    );
    let output = mbpre("lyapunov", &config, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("unit index 3 out of range"));
}

#[test]
fn eigenvector_start_works_when_the_scenario_fixes_one() {
    let dir = workdir("eigen-start");
    let out = dir.join("out");
    let config = write_config(
        &dir,
        &format!(
            r#"{{
                "command": "tau",
                "scenario": {{ "kind": "two_type_critical", "gamma": 0.3 }},
                "n_grid": [4, 8],
                "replicas": 400,
                "start": {{ "x": "eigenvector", "a": 1.0 }},
                "out": "{}"
            }}"#,
            out.display()
        ),
    );
    let output = mbpre("tau", &config, &[]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let csv = fs::read_to_string(out.join("tau.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x_id,a,n,estimate,stderr");
    assert!(csv.lines().nth(1).unwrap().starts_with("eigenvector,"));

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("tau_summary.json")).unwrap()).unwrap();
    assert!(summary["sigma2_hat"].is_number());
    assert!(summary["c_hat"].is_number());
}
