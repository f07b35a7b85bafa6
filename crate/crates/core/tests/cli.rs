mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{fixture, game_family, game_json};
use serde_json::Value;

fn diegetic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diegetic"))
        .args(args)
        .env_remove("DIEGETIC_MAX_PROFILES")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(args: &[&str]) -> Value {
    let mut argv = args.to_vec();
    argv.extend(["--json", "-"]);
    let out = diegetic(&argv);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&doc).unwrap()
}

fn assert_valid(schema: &jsonschema::JSONSchema, r: &Value) {
    if let Err(errors) = schema.validate(r) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report does not match schema: {msgs:?}");
    }
}

#[test]
fn prisoners_dilemma_with_oracle() {
    let r = report(&["analyze", path(&fixture("pd.json")), "--oracle"]);
    assert_eq!(r["fixpoints"], serde_json::json!([["D", "D"]]));
    assert_eq!(r["oracle"], serde_json::json!([["D", "D"]]));
    assert_eq!(r["agreement"], Value::Bool(true));
    assert_eq!(r["profiles"], 4);
}

#[test]
fn pennies_is_empty_and_succeeds() {
    let out = diegetic(&["analyze", path(&fixture("pennies.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("equilibria: 0"));
}

#[test]
fn pennies_dynamics_cycle() {
    let r = report(&["analyze", path(&fixture("pennies.json")), "--dynamics", "10", "--start", "T|H"]);
    let t = &r["trajectories"][0];
    assert_eq!(t["start"], serde_json::json!(["T", "H"]));
    assert_eq!(t["terminal"], "cycle");
    assert_eq!(t["period"], 4);
    assert_eq!(t["profiles"].as_array().unwrap().len(), 5);
}

#[test]
fn dynamics_respect_the_step_budget() {
    let r = report(&["analyze", path(&fixture("pennies.json")), "--dynamics", "2"]);
    assert_eq!(r["trajectories"][0]["terminal"], "max_steps");
    let r = report(&["analyze", path(&fixture("pd.json")), "--dynamics", "5", "--start", "C|C", "--start", "D|D"]);
    let ts = r["trajectories"].as_array().unwrap();
    assert_eq!(ts.len(), 2);
    assert!(ts.iter().all(|t| t["terminal"] == "fixpoint"));
}

#[test]
fn unknown_start_profile_is_reported() {
    let out = diegetic(&["analyze", path(&fixture("pd.json")), "--dynamics", "3", "--start", "C|X"]);
    assert_ne!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn seqgame_explain_shows_the_kernel() {
    let r = report(&["analyze", path(&fixture("seqgame.json")), "--explain", "--oracle"]);
    assert_eq!(r["fixpoints"], serde_json::json!([["R", "l"]]));
    assert_eq!(r["agreement"], Value::Bool(true));
    let tags = r["kernel"]["tags"].as_object().unwrap();
    for tag in ["precompose", "partial_left", "partial_right", "argmax"] {
        assert!(tags.contains_key(tag), "missing {tag}");
    }
    let text = diegetic(&["analyze", path(&fixture("seqgame.json")), "--explain"]);
    let text = String::from_utf8_lossy(&text.stdout);
    assert!(text.contains("precompose") && text.contains("argmax"));
}

#[test]
fn costate_flag_overrides_the_file() {
    let r = report(&["analyze", path(&fixture("pd.json")), "--costate", "regret"]);
    assert_eq!(r["costate"], "regret");
    assert_eq!(r["fixpoints"], serde_json::json!([["D", "D"]]));
    let out = diegetic(&["analyze", path(&fixture("pd.json")), "--costate", "other"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_match_the_schema() {
    let schema = schema();
    for name in ["pd.json", "pennies.json", "seqgame.json"] {
        let f = fixture(name);
        assert_valid(&schema, &report(&["analyze", path(&f)]));
        assert_valid(&schema, &report(&["analyze", path(&f), "--oracle", "--dynamics", "6", "--explain"]));
    }
    let mut bad = report(&["analyze", path(&fixture("pd.json"))]);
    bad["extra"] = Value::Bool(true);
    assert!(!schema.is_valid(&bad));
}

#[test]
fn json_report_is_written_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = diegetic(&["analyze", path(&fixture("pd.json")), "--json", path(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("D|D"));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(written, report(&["analyze", path(&fixture("pd.json"))]));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);

    let missing = dir.path().join("no/such/dir/report.json");
    let out = diegetic(&["analyze", path(&fixture("pd.json")), "--json", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]: "));
}

#[test]
fn cap_comes_from_flag_or_environment() {
    let pd = fixture("pd.json");
    let out = Command::new(env!("CARGO_BIN_EXE_diegetic"))
        .args(["analyze", path(&pd)])
        .env("DIEGETIC_MAX_PROFILES", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[cap]: "));
    let out = Command::new(env!("CARGO_BIN_EXE_diegetic"))
        .args(["analyze", path(&pd), "--max-profiles", "4"])
        .env("DIEGETIC_MAX_PROFILES", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn fmt_canonicalizes_reordered_input() {
    let dir = tempfile::tempdir().unwrap();
    let messy = r#"{"game": {"payoffs": {"D|D": [1, "1"], "C|D": [0, 3], "D|C": ["6/2", 0], "C|C": [2, 2]},
        "kind": "normal_form"}, "players": [{"coordinate": 0, "strategies": ["C", "D"], "name": "row"},
        {"name": "col", "strategies": ["C", "D"], "coordinate": 1}], "payoff_dim": 2, "version": 1}"#;
    let p = dir.path().join("messy.json");
    std::fs::write(&p, messy).unwrap();
    let out = diegetic(&["fmt", path(&p)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), std::fs::read_to_string(fixture("pd.json")).unwrap());
}

#[test]
fn generated_games_round_trip_through_fmt() {
    let dir = tempfile::tempdir().unwrap();
    for (i, g) in game_family(9, 10).iter().enumerate() {
        let p = dir.path().join(format!("g{i}.json"));
        std::fs::write(&p, game_json(g)).unwrap();
        let once = diegetic(&["fmt", path(&p)]);
        assert_eq!(once.status.code(), Some(0));
        let q = dir.path().join(format!("g{i}.canon.json"));
        std::fs::write(&q, &once.stdout).unwrap();
        let twice = diegetic(&["fmt", path(&q)]);
        assert_eq!(once.stdout, twice.stdout);
    }
}

#[test]
fn check_subcommand() {
    let out = diegetic(&["check", "--seed", "4", "--games", "15"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("checked 15 games"));
}

#[test]
fn usage_errors() {
    assert_eq!(diegetic(&["--help"]).status.code(), Some(0));
    let out = diegetic(&["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]: "));
    let out = diegetic(&["analyze", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]: "));
}

#[test]
fn arena_semantic_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("seqgame.json")).unwrap();
    let broken = text.replacen("\"yl\",\n          \"yr\"\n        ],\n        \"outputs\"", "\"yr\",\n          \"yl\"\n        ],\n        \"outputs\"", 1);
    assert_ne!(broken, text);
    let p = dir.path().join("broken.json");
    std::fs::write(&p, broken).unwrap();
    let out = diegetic(&["analyze", path(&p)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[semantic]: "));
}
