use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tite-stein"))
        .current_dir(root())
        .args(args)
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_shipped_files() {
    let out = bin(&["validate", "--config", "configs/default.json", "--scenario", "scenarios/s01.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("phi_L 0.261340 phi_U 0.336814 psi 0.560874"), "{text}");
    for c in ["sa1", "sa2", "sa3", "case-study", "stein"] {
        let out = bin(&["validate", "--config", &format!("configs/{c}.json")]);
        assert!(out.status.success(), "{c}");
    }
}

#[test]
fn bad_config_reports_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(root().join("configs/default.json")).unwrap()).unwrap();
    v["verify"]["M"] = json!(-3);
    fs::write(&cfg, v.to_string()).unwrap();
    let out = bin(&["validate", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("verify.M") && err.contains("bad.json"), "{err}");
}

#[test]
fn missing_scenario_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("oc");
    let out = bin(&[
        "simulate", "--config", "configs/default.json", "--scenario", "scenarios/s01.json", "--scenario",
        "scenarios/missing.json", "--reps", "2", "--out", path_str(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    assert!(!out_dir.exists());
}

#[test]
fn single_replication_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin(&[
            "simulate", "--config", "configs/default.json", "--scenario", "scenarios/s05.json", "--reps", "1", "--seed",
            "11", "--out", path_str(&out_dir), "--format", "csv",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(out_dir.join("S5.oc.csv")).unwrap(),
            fs::read(out_dir.join("S5.oc.json")).unwrap(),
            out.stdout,
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let report: Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",11,tite,S5,1,"), "{csv}");
}

#[test]
fn mode_flag_switches_to_complete_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "simulate", "--scenario", "scenarios/s01.json", "--reps", "3", "--out", path_str(dir.path()), "--mode", "complete",
        "--format", "json",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["mode"], "COMPLETE");
}

#[test]
fn decision_table_outputs() {
    let out = bin(&["decision-table", "--config", "configs/default.json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["≤5.90", "≤1.53", "<3.13", "max(o_T,o_E)≥2", "max(o_T,o_E)≥4", "max(o_T,o_E)≥5"] {
        assert!(text.contains(needle), "{needle}\n{text}");
    }
    let out = bin(&["decision-table", "--format", "csv", "--n", "3"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "config_hash,n,n_T,m_T,n_E,m_E,decision");
    assert_eq!(csv.lines().count(), 1 + 5);
}

fn finalize(doses: Value, config: &str) -> (Option<i32>, Value) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.json");
    fs::write(&data, json!({ "doses": doses }).to_string()).unwrap();
    let out = bin(&["finalize", "--config", config, "--data", path_str(&data), "--seed", "5"]);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code(), v)
}

#[test]
fn finalize_all_toxic_exits_3() {
    let (code, v) = finalize(
        json!([{ "n": 6, "tox": 6, "eff": 0 }, { "n": 3, "tox": 3, "eff": 0 }, { "n": 0, "tox": 0, "eff": 0 }, { "n": 0, "tox": 0, "eff": 0 }, { "n": 0, "tox": 0, "eff": 0 }]),
        "configs/default.json",
    );
    assert_eq!(code, Some(3));
    assert_eq!(v["obd"], Value::Null);
}

#[test]
fn finalize_case_study_rates_pick_level_2() {
    // assumed DLT and response rates applied to the toxicity-evaluable sizes
    let (code, v) = finalize(
        json!([{ "n": 45, "tox": 3, "eff": 29 }, { "n": 50, "tox": 5, "eff": 38 }, { "n": 41, "tox": 5, "eff": 31 }]),
        "configs/case-study.json",
    );
    assert_eq!(code, Some(0));
    assert_eq!(v["selection"]["candidate"], 2);
    assert_eq!(v["obd"], 2);
    assert_eq!(v["verification"]["accepted"], true);
}

#[test]
fn finalize_single_dose_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(root().join("configs/default.json")).unwrap()).unwrap();
    v["num_doses"] = json!(1);
    fs::write(&cfg, v.to_string()).unwrap();
    let (code, v) = finalize(json!([{ "n": 30, "tox": 2, "eff": 24 }]), path_str(&cfg));
    assert_eq!(code, Some(0));
    assert_eq!(v["obd"], 1);
    assert!(v["verification"]["p_g"].as_f64().unwrap() > 0.99);
}

#[test]
fn finalize_rejects_mismatched_dataset() {
    let (code, _) = finalize(json!([{ "n": 3, "tox": 4, "eff": 0 }]), "configs/default.json");
    assert_eq!(code, Some(2));
}
