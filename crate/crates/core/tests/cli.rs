//! Exit codes and settings precedence of the command-line front end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairsep::fairsvm::TrainedModel;
use fairsep::{Group, GroupedDataset};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fairsep-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn fairsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairsep")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("synth.csv");
    let o = fairsep(&["synth", "--seed", "5", "--family", "30,10,20,25", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn stochastic_commands_require_a_seed() {
    let dir = scratch("seed");
    let o = fairsep(&["synth", "--out", s(&dir.join("x.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    let o = fairsep(&["bench", "--out", s(&dir.join("bench"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn synth_is_reproducible_per_seed() {
    let dir = scratch("repro");
    let a = synth(&dir);
    let first = std::fs::read(&a).unwrap();
    let b = synth(&dir);
    assert_eq!(first, std::fs::read(b).unwrap());
}

#[test]
fn train_then_evaluate() {
    let dir = scratch("train");
    let data = synth(&dir);
    let model = dir.join("model.txt");
    let o = fairsep(&[
        "train", "--data", s(&data), "--model", "svm_mt", "--kernel", "linear", "--c", "1", "--rho", "0.2",
        "--out", s(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = TrainedModel::load(&model).unwrap();
    assert!(m.constraint_value.unwrap() >= 0.2 - 1e-6);
    let o = fairsep(&["evaluate", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["n"], 85);
    assert!(report["dfpr"].is_number());
}

#[test]
fn config_file_overrides_flags() {
    let dir = scratch("config");
    let data = synth(&dir);
    let config = dir.join("train.toml");
    std::fs::write(&config, "c = 0.5\nkernel = \"linear\"\n").unwrap();
    let model = dir.join("model.txt");
    let o = fairsep(&[
        "train", "--data", s(&data), "--c", "7", "--kernel", "rbf", "--config", s(&config), "--out", s(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = TrainedModel::load(&model).unwrap();
    assert_eq!(m.c, 0.5);
    assert_eq!(m.kernel.family.as_str(), "linear");
}

#[test]
fn unknown_config_keys_are_input_errors() {
    let dir = scratch("unknown");
    let data = synth(&dir);
    let config = dir.join("train.toml");
    std::fs::write(&config, "cost = 1.0\n").unwrap();
    let o = fairsep(&["train", "--data", s(&data), "--config", s(&config), "--out", s(&dir.join("m.txt"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unattainable_separation_exits_infeasible() {
    let dir = scratch("infeasible");
    // Both groups share the same negative rows.
    let rows = vec![vec![2.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![2.5, 0.5], vec![-1.0, 1.0], vec![-1.0, -1.0]];
    let y = vec![1, -1, -1, 1, -1, -1];
    let g = vec![Group::A, Group::A, Group::A, Group::B, Group::B, Group::B];
    let data = dir.join("tied.csv");
    GroupedDataset::from_rows(&rows, y, g).unwrap().save(&data).unwrap();
    let o = fairsep(&[
        "train", "--data", s(&data), "--model", "svm_mt", "--kernel", "linear", "--rho", "0.1",
        "--out", s(&dir.join("m.txt")),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn checksum_mismatch_exits_data_integrity() {
    let dir = scratch("integrity");
    std::fs::write(dir.join("raw.csv"), "x,s,y\n1,m,1\n2,f,0\n3,m,0\n4,f,1\n").unwrap();
    let schema = dir.join("schema.toml");
    std::fs::write(
        &schema,
        r#"name = "raw"
file = "raw.csv"
feature_columns = ["x"]

[target]
column = "y"
positive_values = ["1"]

[sensitive]
column = "s"
group_a_values = ["m"]

[[sources]]
file = "raw.csv"
url = "https://example.org/raw.csv"
sha256 = "0000000000000000000000000000000000000000000000000000000000000000"
"#,
    )
    .unwrap();
    let o = fairsep(&["prepare", "--schema", s(&schema), "--data-dir", s(&dir), "--out", s(&dir.join("out"))]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_input_file_is_an_input_error() {
    let dir = scratch("missing");
    let o = fairsep(&["train", "--data", s(&dir.join("absent.csv")), "--out", s(&dir.join("m.txt"))]);
    assert_eq!(code(&o), 2);
}
