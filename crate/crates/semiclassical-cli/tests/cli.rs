use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn semicl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semicl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_result(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    let v: Value = serde_json::from_str(&stdout(o)).unwrap();
    v["result"].clone()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bracket_second_order() {
    let o = semicl(&["bracket", "q2", "pi2", "--order", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "4*qpi");
}

#[test]
fn bracket_cubic_moments_commute_at_third_order() {
    let o = semicl(&["bracket", "q3", "pi3", "--order", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn bracket_oracle_agrees() {
    let a = semicl(&["bracket", "q2", "qpi2", "--order", "4"]);
    let b = semicl(&["bracket", "q2", "qpi2", "--order", "4", "--oracle"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn malformed_index_is_a_usage_error() {
    let o = semicl(&["bracket", "q-1", "pi2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q-1"));
}

#[test]
fn missing_key_names_the_key() {
    let o = semicl(&["tunnel", "--gamma", "0.1", "--U", "0.25"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("v_top"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = scratch("unknown_key");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"beta": 1, "omega": 1, "temperature": 3}"#).unwrap();
    let o = semicl(&["thermo", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("temperature"));
}

#[test]
fn ground_state_for_abs_potential() {
    let r = json_result(&semicl(&["ground", "--potential", "abs", "--U", "0.25"]));
    let get = |k: &str| r[k].as_f64().unwrap();
    assert!(get("q").abs() < 1e-6);
    assert!((get("s") - 0.63).abs() < 5e-3);
    assert!((get("E") - 0.94).abs() < 0.01);
    assert!((get("exact") - 0.81).abs() < 0.01);
}

#[test]
fn coupled_oscillator_energy() {
    let r = json_result(&semicl(&["effpot", "--coupled-oscillator", "--gamma", "0.5"]));
    let want = 0.5 * (1.5f64.sqrt() + 0.5f64.sqrt());
    assert!((r["E"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn thermo_row_carries_closed_forms() {
    let r = json_result(&semicl(&["thermo", "--beta", "1", "--omega", "1"]));
    let row = &r["rows"][0];
    assert!(row["max_rel_gap"].as_f64().unwrap() < 1e-6);
    for key in ["log_z", "log_z_closed", "energy", "casimir", "s2"] {
        assert!(row[key].is_number(), "{key}");
    }
}

#[test]
fn tunnel_writes_files_and_manifest_deterministically() {
    let cfg_dir = scratch("tunnel_cfg");
    let cfg = cfg_dir.join("fig1.toml");
    fs::write(&cfg, "v_top = 1.0\ngamma = 0.1\nU = 0.25\nt_max = 20.0\n").unwrap();
    let run = |name: &str| {
        let out = scratch(name);
        let o = semicl(&["tunnel", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("tunnel_a"), run("tunnel_b"));
    for f in ["trajectory.csv", "result.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let result: Value = serde_json::from_slice(&fs::read(a.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["run"]["status"], "escaped");
    assert_eq!(result["events"][0]["kind"], "escape");
    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["gamma"], 0.1);
    assert_eq!(manifest["subcommand"], "tunnel");
    let header = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,q,pi,s,p,U,E\n"));
}

#[test]
fn gamma_sweep_csv() {
    let out = scratch("sweep");
    let o = semicl(&[
        "tunnel", "--v-top", "1", "--gamma", "0.1", "--U", "0.25", "--model", "order2", "--t-max", "20", "--sweep",
        "gamma", "--values", "0.1,0.2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,time,exit_q,exit_pi,status");
    assert_eq!(lines.len(), 3);
}

#[test]
fn reconstruct_gaussian_and_impurity() {
    let dir = scratch("reconstruct");
    let cfg = dir.join("moments.json");
    // ⟨qⁿ⟩ of e^{-q²}/√π
    fs::write(&cfg, r#"{"a": [1, 0, 0.5, 0, 0.75, 0, 1.875], "impurity": "order2"}"#).unwrap();
    let r = json_result(&semicl(&["reconstruct", "--config", cfg.to_str().unwrap()]));
    assert_eq!(r["impurity"]["candidates"], serde_json::json!(["U"]));
    for row in r["rows"].as_array().unwrap() {
        let q = row["q"].as_f64().unwrap();
        let want = (-q * q).exp() / std::f64::consts::PI.sqrt();
        assert!((row["density"].as_f64().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn failed_certificate_exits_one() {
    let o = semicl(&["realize", "--realization", "order2", "--certify", "5", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
