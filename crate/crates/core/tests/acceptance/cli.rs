//! The CLI contract: fixed-seed fixtures reproduce byte-identical reports
//! and exit with 0 on pass, 1 on violation, 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use super::ensure;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn opquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opquant"))
        .args(args)
        .env_remove("OPQUANT_SEED")
        .output()
        .expect("binary runs")
}

fn run_fixture(name: &str) -> Output {
    opquant(&["run", "--config", fixture(name).to_str().unwrap()])
}

fn json(out: &Output) -> Result<Value, String> {
    serde_json::from_slice(&out.stdout).map_err(|e| format!("report is not JSON: {e}"))
}

fn code(out: &Output) -> Option<i32> {
    out.status.code()
}

pub fn passing_fixtures() -> Result<String, String> {
    for name in ["pass_quantities.json", "pass_invariance.json"] {
        let a = run_fixture(name);
        ensure(code(&a) == Some(0), format!("{name}: exit {:?}, {}", code(&a), String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == run_fixture(name).stdout, format!("{name}: reports differ between runs"))?;
        ensure(json(&a)?["violations"] == serde_json::json!([]), format!("{name}: unexpected violations"))?;
    }
    Ok("pass fixtures exit 0, byte-identical".into())
}

pub fn violation_fixture() -> Result<String, String> {
    let a = run_fixture("violation_lemma.json");
    ensure(code(&a) == Some(1), format!("exit {:?}", code(&a)))?;
    ensure(json(&a)?["violations"][0]["name"] == "dense_intersection", "violation not named".into())?;
    ensure(a.stdout == run_fixture("violation_lemma.json").stdout, "reports differ between runs".into())?;
    Ok("violation fixture exits 1, byte-identical".into())
}

pub fn config_errors() -> Result<String, String> {
    let out = run_fixture("config_error.json");
    ensure(code(&out) == Some(2), format!("exit {:?}", code(&out)))?;
    ensure(out.stdout.is_empty(), "config error still wrote a report".into())?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(err.contains("parameters.epsilon"), format!("error does not name the field: {err}"))?;
    ensure(code(&opquant(&["run", "--config", "/nonexistent/config.json"])) == Some(2), "missing file".into())?;
    ensure(code(&opquant(&["run"])) == Some(2), "missing --config".into())?;
    let op = r#"{"kind":"diagonal","periodic":[1]}"#;
    let bad = opquant(&["quantities", "--op", op, "--quantity", "G", "--schedule", "4,1"]);
    ensure(code(&bad) == Some(2), "malformed schedule".into())?;
    let bad = opquant(&["verify", "--suite", "construction", "--epsilon", "3", "--c", "1"]);
    ensure(code(&bad) == Some(2), "epsilon out of range".into())?;
    Ok("config-error fixture and bad invocations exit 2".into())
}

pub fn output_and_seed_overrides() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("report.json");
    let out = opquant(&["run", "--config", fixture("pass_quantities.json").to_str().unwrap(), "--out", path.to_str().unwrap()]);
    ensure(code(&out) == Some(0) && out.stdout.is_empty(), "--out run".into())?;
    let written = std::fs::read(&path).map_err(|e| e.to_string())?;
    ensure(written == run_fixture("pass_quantities.json").stdout, "--out differs from stdout".into())?;

    let config = fixture("pass_invariance.json");
    let flag = opquant(&["run", "--config", config.to_str().unwrap(), "--seed", "99"]);
    let env = Command::new(env!("CARGO_BIN_EXE_opquant"))
        .args(["run", "--config", config.to_str().unwrap()])
        .env("OPQUANT_SEED", "99")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(flag.stdout == env.stdout, "--seed and OPQUANT_SEED disagree".into())?;
    ensure(json(&flag)?["seed"] == 99, "seed override not reported".into())?;
    ensure(json(&run_fixture("pass_invariance.json"))?["seed"] == 5, "config seed not used".into())?;
    Ok("--out and seed overrides".into())
}

pub fn subcommands() -> Result<String, String> {
    let op = r#"{"kind":"diagonal","periodic":[2,1]}"#;
    let a = opquant(&["quantities", "--op", op, "--quantity", "D", "--schedule", "8,2,4;12,3,6"]);
    let b = opquant(&["quantities", "--op", op, "--quantity", "D", "--schedule", "[[8,2,4],[12,3,6]]"]);
    ensure(code(&a) == Some(0) && a.stdout == b.stdout, "schedule forms disagree".into())?;
    let values: Vec<f64> = json(&a)?["results"]
        .as_array()
        .ok_or("no results")?
        .iter()
        .filter(|r| r["type"] == "estimate")
        .filter_map(|r| r["value"].as_f64())
        .collect();
    ensure(values == [2.0, 2.0], format!("alternating Δ values {values:?}"))?;

    let out = opquant(&[
        "verify", "--suite", "construction", "--epsilon", "0.1", "--c", "1", "--seed", "4", "--systems", "2", "--combinations", "20",
    ]);
    ensure(code(&out) == Some(0), format!("verify: {}", String::from_utf8_lossy(&out.stderr)))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (va, vb) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&va, &vb] {
        let out = opquant(&["vectors", "--config", fixture("pass_invariance.json").to_str().unwrap(), "--out", path.to_str().unwrap()]);
        ensure(code(&out) == Some(0), "vectors".into())?;
    }
    ensure(std::fs::read(va).ok() == std::fs::read(vb).ok(), "test vectors differ between runs".into())?;
    Ok("quantities, verify and vectors subcommands".into())
}
