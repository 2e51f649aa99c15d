use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn growthlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growthlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("growthlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn gap_passes_for_cyclic_subgroup() {
    let out = growthlab(&["gap", "--group", "free:2", "--gen", "a", "--rmax", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["hypotheses"].as_array().unwrap().len(), 5);
}

#[test]
fn gap_reads_subgroup_file_and_writes_csv() {
    let file = scratch("h.txt", "# H = <a, b a b^-1>\na\nbaB\n");
    let out = growthlab(&["gap", "--subgroup", file.to_str().unwrap(), "--rmax", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("radius,count,rate_estimate"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn finite_index_exits_with_hypothesis_code() {
    let out = growthlab(&["gap", "--gen", "a", "--gen", "b", "--rmax", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["verdict"], "INAPPLICABLE");
}

#[test]
fn quotient_passes() {
    let out = growthlab(&["quotient", "--gen", "a", "--rmax", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["omega_quotient"]["rate"].as_f64().unwrap() - 3f64.ln()).abs() <= 0.05);
}

#[test]
fn config_file_and_flag_override() {
    let cfg = scratch("cfg.json", r#"{"group": "free:2", "generators": ["a", "baB"], "rmax": 8, "margin": 0.5}"#);
    let out = growthlab(&["gap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(json(&out)["margin"], 0.5);
    let out = growthlab(&["gap", "--config", cfg.to_str().unwrap(), "--margin", "0.02"]);
    assert_eq!(json(&out)["margin"], 0.02);
    let bad = scratch("bad.json", r#"{"colour": "blue"}"#);
    assert_eq!(growthlab(&["gap", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical() {
    let a = scratch("a.json", "");
    let b = scratch("b.json", "");
    for p in [&a, &b] {
        let out = growthlab(&["gap", "--gen", "a", "--gen", "baB", "--rmax", "9", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn closure_report() {
    let out = growthlab(&["closure", "--g", "aa", "--radius", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["E_gens"], serde_json::json!(["a"]));
    assert_eq!(v["M"], 1);
    assert_eq!(v["E_plus_index"], 1);
    let out = growthlab(&["closure", "--group", "product:2,3", "--g", "a"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn buffering_chain() {
    let spec = scratch(
        "chain.json",
        r#"{"subgroup": ["a"], "g": "b", "word": [["h","a"],["k","bbb"],["h","aa"],["k","BBB"]], "radius": 4}"#,
    );
    let s = spec.to_str().unwrap();
    let out = growthlab(&["buffering", "--spec", s, "--L", "3", "--theta", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["separation"]["verdict"], "pass");
    let out = growthlab(&["buffering", "--spec", s, "--L", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = growthlab(&["buffering", "--spec", s, "--L", "3", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("index,bs1,bs2,bs3,bs4\n"));
}

#[test]
fn amalgam_and_audit() {
    let out = growthlab(&["amalgam", "--gen", "a", "--g", "b", "--syllables", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["words_checked"], 2 * (8 + 64 + 512 + 4096));
    let out = growthlab(&["amalgam", "--gen", "ab", "--g", "abab", "--syllables", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = growthlab(&["audit", "--axis", "ab", "--rmax", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["constriction"]["delta_cs2"], 0);
    assert_eq!(v["table"]["theta_1"], 0);
}

#[test]
fn selector_with_coarse_quotient() {
    let out = growthlab(&["selector", "--g", "b", "--gen", "a", "--rmax", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["selector"]["rows"].as_array().unwrap().len() == 161);
    assert!(v["coarse_quotient"]["counting"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["holds"] == true));
    let out = growthlab(&["selector", "--g", "b", "--gen", "a", "--rmax", "4", "--bound", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn budget_and_usage_errors() {
    assert_eq!(growthlab(&["closure", "--g", "ab", "--radius", "40"]).status.code(), Some(4));
    assert_eq!(growthlab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(growthlab(&["--help"]).status.code(), Some(0));
}
