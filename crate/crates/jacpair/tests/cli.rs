//! Runs the built `jacpair` binary against the shipped corpus and a few
//! hand-made inputs.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_jacpair"));
    c.env_remove("JACPAIR_JOBS");
    c
}

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("jacpair-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn reports(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn without_timing(out: &Output) -> Vec<Value> {
    let mut rs = reports(out);
    for r in &mut rs {
        r.as_object_mut().unwrap().remove("timingMs");
    }
    rs
}

#[test]
fn corpus_passes() {
    let out = bin().arg("corpus").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rs = reports(&out);
    assert!(rs.len() > 40);
    assert!(rs.iter().all(|r| r["verdict"] == "PASS"));
    let ids: Vec<_> = rs.iter().map(|r| r["fixtureId"].as_str().unwrap().to_owned()).collect();
    assert!(ids.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bracket_reports_three_eighths() {
    let out = bin().arg("bracket").arg(fixture("pairs/2ex-1.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0]["op"], "bracket");
    assert_eq!(rs[0]["values"]["result"], "3/8");
    for key in ["fixtureId", "op", "verdict", "values", "floors", "timingMs"] {
        assert!(rs[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_runs_three_programs() {
    let out = bin().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 3);
    assert!(rs.iter().all(|r| r["verdict"] == "PASS"));
}

#[test]
fn text_mode_prints_one_line_per_report() {
    let out = bin().args(["--text", "prime-degree"]).arg(fixture("series/y2-plus-x.json")).output().unwrap();
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().count(), 1);
    assert!(s.starts_with("PASS y2-plus-x prime-degree \"1/2\""), "{s}");
}

#[test]
fn malformed_input_exits_2() {
    let p = scratch("broken.json", "{\"id\": \"x\", \"kind\": \"PAIR\"");
    assert_eq!(bin().arg("bracket").arg(&p).output().unwrap().status.code(), Some(2));
    let p = scratch("nokind.json", "{\"id\": \"x\", \"kind\": \"MATRIX\", \"payload\": {}}");
    assert_eq!(bin().arg("bracket").arg(&p).output().unwrap().status.code(), Some(2));
}

#[test]
fn n_cap_rejects_large_denominators() {
    let out = bin().args(["--n-cap", "4", "bracket"]).arg(fixture("pairs/2ex-1.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_expected_value_exits_1() {
    let mut fx: Value = serde_json::from_str(&std::fs::read_to_string(fixture("pairs/2ex-1.json")).unwrap()).unwrap();
    fx["expected"]["bracket"]["value"] = Value::from("1");
    let p = scratch("wrong.json", &fx.to_string());
    let out = bin().arg("bracket").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(reports(&out)[0]["verdict"], "FAIL");
}

#[test]
fn duplicate_ids_are_rejected() {
    let body = std::fs::read_to_string(fixture("pairs/2ex-1.json")).unwrap();
    let a = scratch("dup-a.json", &body);
    let b = scratch("dup-b.json", &body);
    assert_eq!(bin().arg("bracket").arg(&a).arg(&b).output().unwrap().status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_across_job_counts() {
    let one = bin().args(["--jobs", "1", "corpus"]).output().unwrap();
    let many = bin().arg("corpus").env("JACPAIR_JOBS", "4").output().unwrap();
    assert_eq!(without_timing(&one), without_timing(&many));
    let again = bin().args(["--jobs", "1", "corpus"]).output().unwrap();
    assert_eq!(without_timing(&one), without_timing(&again));
}
