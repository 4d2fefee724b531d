use std::fs;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_subordlab"));
    c.env_remove("SUBORDLAB_SEED");
    c
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"{"experiments": [
  {"kind": "pareto_limit",
   "model": {"kind": "leaf", "name": "gamma", "params": {"gamma": 1, "lambda": 1}},
   "params": {"t_list": [0.1, 0.01], "n": 2000, "csv": true},
   "assertions": {"statistic": {"max": 0.2}}},
  {"kind": "estimate",
   "model": {"kind": "tilt", "theta": 1, "model": {"kind": "leaf", "name": "dickman", "params": {"gamma": 2}}},
   "params": {"criterion": "S5"},
   "assertions": {"gamma_hat": {"min": 1.98, "max": 2.02}}}
]}"#;

#[test]
fn empty_config_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiments": []}"#);
    let out = dir.path().join("out");
    let st = bin().args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 0);
}

#[test]
fn unknown_model_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiments": [{"kind": "pareto_limit", "model": {"kind": "leaf", "name": "nosuch"}}]}"#);
    let out = bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.json", "{\"experiments\": [\n  {\"kind\": }\n]}");
    let out = bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"experiments": [{"kind": "affine", "model": {"kind": "leaf", "name": "gamma", "params": {"gamma": 1, "lambda": 1}},
            "params": {"a": 2, "b": 2, "t": 1e-4, "n": 10}}]}"#,
    );
    let out = bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("affine"));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"experiments": [{"kind": "estimate", "model": {"kind": "leaf", "name": "bessel"},
            "params": {"criterion": "S5"}, "assertions": {"gamma_hat": {"min": 3}}}]}"#,
    );
    assert_eq!(bin().args(["--config", cfg.to_str().unwrap()]).output().unwrap().status.code(), Some(1));
}

#[test]
fn report_and_curves_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.json", SMALL);
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let st = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11", "--threads", "2"])
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        let text = fs::read_to_string(out.join("report.json")).unwrap();
        reports.push(subordlab::runner::strip_timestamps(&text));
        let csvs: Vec<_> = fs::read_dir(&out).unwrap().filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "csv")).collect();
        assert_eq!(csvs.len(), 2);
        let body = fs::read_to_string(csvs[0].path()).unwrap();
        assert!(body.starts_with("x,ecdf,target\n"));
    }
    assert_eq!(reports[0], reports[1]);
    let v: serde_json::Value = serde_json::from_str(&reports[0]).unwrap();
    assert_eq!(v["seed"], 11);
    for key in ["experiment", "model", "params", "t", "n", "statistic", "gamma_hat", "threshold", "pass"] {
        assert!(v["results"][0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn env_seed_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let seed_of = |cfg_text: &str, env: Option<&str>, flag: Option<&str>| {
        let cfg = write(&dir, "s.json", cfg_text);
        let mut c = bin();
        c.args(["--config", cfg.to_str().unwrap()]);
        if let Some(e) = env {
            c.env("SUBORDLAB_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let out = c.output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(r#"{"experiments": []}"#, Some("5"), None), 5);
    assert_eq!(seed_of(r#"{"seed": 9, "experiments": []}"#, Some("5"), None), 9);
    assert_eq!(seed_of(r#"{"seed": 9, "experiments": []}"#, Some("5"), Some("3")), 3);
}

#[test]
fn list_prints_inventory() {
    let out = bin().arg("--list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for word in ["gamma", "dickman", "bessel", "transform grammar", "sampler", "S5"] {
        assert!(text.contains(word), "{word}");
    }
    let out = bin().args(["--list", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let models = v["models"].as_array().unwrap();
    assert!(models.iter().all(|m| m["representations"].is_array()));
}
