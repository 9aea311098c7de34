use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn crisis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crisis")).args(args).output().unwrap()
}

fn fx(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn validate_reports_per_field() {
    assert_eq!(code(&crisis(&["validate", &fx("canon_c020.json")])), 0);
    let bad = crisis(&["validate", &fx("gamma_1_2.json")]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("states[0].gamma"));
    let listed = crisis(&["validate", &fx("gamma_1_2.json"), "--format", "json"]);
    assert_eq!(json(&listed)["errors"][0]["field"], "states[0].gamma");
    assert_eq!(code(&crisis(&["validate", &fx("malformed.json")])), 64);
    assert_eq!(code(&crisis(&["validate", &fx("no_such_file.json")])), 64);
}

#[test]
fn schema_errors_count_as_invalid_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, r#"{"states": [], "war_technology": {"kind": "magic"}}"#).unwrap();
    assert_eq!(code(&crisis(&["validate", path.to_str().unwrap()])), 2);
}

#[test]
fn plausibility_verdicts() {
    for (file, lhs, verdict) in [
        ("canon_c020.json", 1.1, "implausible"),
        ("canon_c030.json", 0.9, "plausible"),
        ("canon_c000.json", 1.5, "implausible"),
        ("canon_c025.json", 1.0, "plausible (boundary)"),
    ] {
        let o = crisis(&["plausibility", &fx(file), "--format", "json"]);
        assert_eq!(code(&o), 0);
        let v = json(&o);
        assert!((v["lhs"].as_f64().unwrap() - lhs).abs() < 1e-10, "{file}");
        let text = stdout(&crisis(&["plausibility", &fx(file)]));
        assert!(text.lines().any(|l| l.starts_with("verdict") && l.trim_end().ends_with(verdict)), "{text}");
    }
    let csv = stdout(&crisis(&["plausibility", &fx("canon_c020.json"), "--format", "csv"]));
    assert_eq!(csv_rows(&csv)[1][..3], ["1.10000000000", "no", "no"]);
}

#[test]
fn construct_then_audit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mech = dir.path().join("mech.json");
    let m = mech.to_str().unwrap();
    let o = crisis(&["construct", &fx("canon_c030.json"), "--out", m]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&crisis(&["audit", &fx("canon_c030.json"), m])), 0);
    // Cheaper war raises strong types' demands above the even split.
    assert_eq!(code(&crisis(&["audit", &fx("canon_c020.json"), m])), 1);

    let inline = crisis(&["construct", &fx("canon_c030.json")]);
    let file: Value = serde_json::from_slice(&inline.stdout).unwrap();
    assert_eq!(file["x1"][0][0], 0.5);

    let infeasible = crisis(&["construct", &fx("canon_c020.json"), "--format", "json"]);
    assert_eq!(code(&infeasible), 3);
    assert!((json(&infeasible)["total_demand"].as_f64().unwrap() - 1.1).abs() < 1e-10);

    let unwritable = crisis(&["construct", &fx("canon_c030.json"), "--out", "/nonexistent/dir/m.json"]);
    assert_eq!(code(&unwritable), 74);
}

#[test]
fn audit_surfaces_the_participation_example() {
    let pass = crisis(&["audit", &fx("canon_c030.json"), &fx("even_split.json"), "--format", "csv"]);
    assert_eq!(code(&pass), 0);
    let fail = crisis(&["audit", &fx("canon_c020.json"), &fx("even_split.json"), "--format", "csv"]);
    assert_eq!(code(&fail), 1);
    let rows = csv_rows(&stdout(&fail));
    assert_eq!(rows[0], ["check", "value", "tol", "passed"]);
    let leader = rows.iter().find(|r| r[0] == "leader_participation").unwrap();
    assert_eq!(leader[1], "-0.0500000000000");
    assert_eq!(leader[3], "no");
    let report = json(&crisis(&["audit", &fx("canon_c020.json"), &fx("even_split.json"), "--format", "json"]));
    assert_eq!(report["participation"]["leader_worst"]["theta"], 1.0);
}

#[test]
fn audit_rejects_incompatible_inputs() {
    assert_eq!(code(&crisis(&["audit", &fx("canon_c020.json"), &fx("wide_grid.json")])), 65);
    assert_eq!(code(&crisis(&["audit", &fx("canon_c020.json"), &fx("bad_shape.json")])), 65);
    assert_eq!(code(&crisis(&["audit", &fx("canon_c020.json"), &fx("malformed.json")])), 64);
    assert_eq!(code(&crisis(&["audit", &fx("gamma_1_2.json"), &fx("even_split.json")])), 2);
    let neg = crisis(&["audit", &fx("canon_c030.json"), &fx("even_split.json"), "--tol=-1"]);
    assert_eq!(code(&neg), 65);
}

#[test]
fn solve_writes_the_mechanism_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let mech = dir.path().join("lp.json");
    let m = mech.to_str().unwrap();
    let o = crisis(&["solve", &fx("canon_c020.json"), "--out", m, "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = json(&o);
    assert!(log["objective"].as_f64().unwrap() > 0.0);
    assert!(log["post_audit"]["max_gain"].as_f64().unwrap() <= 1e-6);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&mech).unwrap()).unwrap();
    assert_eq!(file["grid1"].as_array().unwrap().len(), 5);

    let peaceful = json(&crisis(&["solve", &fx("canon_c030.json"), "--n1", "4", "--n2", "3", "--format", "json"]));
    assert!(peaceful["objective"].as_f64().unwrap() <= 1e-9);
    assert_eq!(code(&crisis(&["solve", &fx("canon_c020.json"), "--n1", "1"])), 65);
    let strict = crisis(&["solve", &fx("canon_c030.json"), "--strict-balance", "--grid", "3"]);
    assert_eq!(code(&strict), 0);
}

#[test]
fn sweep_examples() {
    let o = crisis(&["sweep", &fx("canon_c020.json"), &fx("sweep_costs.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["param", "lhs", "plausible", "war_region_mass"]);
    let lhs: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    for (got, want) in lhs.iter().zip([1.1, 1.0, 0.9]) {
        assert!((got - want).abs() < 1e-10);
    }
    let verdicts: Vec<&str> = rows[1..].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(verdicts, ["no", "boundary-yes", "yes"]);

    let biased = csv_rows(&stdout(&crisis(&["sweep", &fx("biased_gamma_half.json"), &fx("sweep_lambda.json")])));
    let lhs: Vec<f64> = biased[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((lhs[0] - 1.1).abs() < 1e-10 && (lhs[1] - 1.0).abs() < 1e-10);

    let solved = csv_rows(&stdout(&crisis(&["sweep", &fx("canon_c020.json"), &fx("sweep_solve.json")])));
    assert_eq!(solved[0], ["param", "lhs", "plausible", "objective", "war_region_mass"]);
    assert_eq!(solved.len(), 6);
    let objective: Vec<f64> = solved[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(objective.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{objective:?}");
}

#[test]
fn sweep_errors() {
    assert_eq!(code(&crisis(&["sweep", &fx("canon_c020.json"), &fx("sweep_empty.json")])), 65);
    assert_eq!(code(&crisis(&["sweep", &fx("canon_c020.json"), &fx("sweep_bad_path.json")])), 65);
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gamma.json");
    std::fs::write(&spec, r#"{"parameter": "states[1].gamma", "values": [0.5, 1.5]}"#).unwrap();
    let o = crisis(&["sweep", &fx("canon_c020.json"), spec.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("states[1].gamma"));
    let out = dir.path().join("sweep.csv");
    let o = crisis(&["sweep", &fx("canon_c020.json"), &fx("sweep_costs.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(out).unwrap().starts_with("param,"));
}

#[test]
fn war_region_mass_and_table() {
    let o = crisis(&["war-region", &fx("canon_c020.json"), "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["mass"].as_f64().unwrap() - 0.02).abs() < 2e-3);
    let table = stdout(&crisis(&["war-region", &fx("canon_c030.json"), "--grid", "16", "--format", "csv"]));
    let rows = csv_rows(&table);
    assert_eq!(rows.len(), 1 + 16 * 16);
    assert!(rows[1..].iter().all(|r| r[2] == "0"));
    assert_eq!(code(&crisis(&["war-region", &fx("canon_c020.json"), "--grid", "8"])), 65);
}

#[test]
fn usage_errors_have_their_own_code() {
    assert_eq!(code(&crisis(&["frobnicate"])), 64);
    assert_eq!(code(&crisis(&["plausibility"])), 64);
    assert_eq!(code(&crisis(&["--help"])), 0);
}
