use std::process::Command;

use knowattn::synthetic::{write_fixture, CONFIG_FILE};

fn run(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_knowattn"))
        .args(args)
        .env_remove("KNOWATTN_CONFIG")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn unknown_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path()).unwrap();
    let cfg = dir.path().join(CONFIG_FILE);
    assert_eq!(run(&["reproduce", "X9", "--config", cfg.to_str().unwrap()]), 1);
}

#[test]
fn missing_config_is_a_validation_error() {
    assert_eq!(run(&["train", "--config", "/nonexistent/knowattn.toml"]), 1);
}

#[test]
fn missing_triplets_for_kg_model() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("triplets.tsv")).unwrap();
    let cfg = dir.path().join(CONFIG_FILE);
    assert_eq!(run(&["train", "--model", "L1", "--config", cfg.to_str().unwrap()]), 1);
}

#[test]
fn unknown_verb_and_missing_records() {
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["report-errors", "/nonexistent/records.jsonl"]), 1);
}
