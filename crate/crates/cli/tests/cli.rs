use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SAMPLE: &str = "a b c\na b\na c\nb\n";

fn fedarm() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fedarm"));
    cmd.env_remove("FEDARM_CAESAR_SHIFT").env_remove("FEDARM_STREAM_KEY");
    cmd
}

fn sample(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("sample.txt");
    fs::write(&path, SAMPLE).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn itemsets(report: &Value) -> Vec<String> {
    report["frequent_itemsets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["items"].as_array().unwrap().iter().map(|i| i.as_str().unwrap()).collect::<String>())
        .collect()
}

fn without_timings(path: &Path) -> Value {
    let mut v: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("phase_ms");
    v
}

#[test]
fn mine_sample_lists_expected_itemsets() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(sample(&dir)).args(["--sigma", "0.5", "--ics", "1"]));
    let report = json(&out);
    assert_eq!(itemsets(&report), ["a", "b", "c", "ab", "ac"]);
    assert_eq!(report["mode"], "union");
    assert_eq!(report["n_ics"], 1);
    for phase in ["encrypt", "split", "mine", "aggregate"] {
        assert!(report["phase_ms"][phase].is_number());
    }
}

#[test]
fn mine_rejects_sigma_above_one() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(sample(&dir)).args(["--sigma", "1.1"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sigma"));
}

#[test]
fn mine_missing_input_is_io_error() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(dir.path().join("absent.txt")));
    assert_eq!(out.status.code(), Some(74));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.txt"));
}

#[test]
fn mine_malformed_input_is_data_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, b"a b\nc \xe9\n").unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(&path));
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn reports_are_reproducible_apart_from_timings() {
    let dir = TempDir::new().unwrap();
    let input = sample(&dir);
    let paths: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("r{k}.json"))).collect();
    for path in &paths {
        let out = run(fedarm()
            .arg("mine")
            .arg("--input")
            .arg(&input)
            .args(["--ics", "2", "--seed", "17", "--sigma", "0.25"])
            .arg("--out")
            .arg(path));
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(without_timings(&paths[0]), without_timings(&paths[1]));
}

#[test]
fn key_flags_override_environment_and_invalid_env_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = sample(&dir);
    let bad_env = run(fedarm().arg("mine").arg("--input").arg(&input).env("FEDARM_CAESAR_SHIFT", "300"));
    assert_eq!(bad_env.status.code(), Some(2));
    let flag_wins = run(fedarm()
        .arg("mine")
        .arg("--input")
        .arg(&input)
        .args(["--caesar-shift", "9"])
        .env("FEDARM_CAESAR_SHIFT", "300"));
    assert_eq!(itemsets(&json(&flag_wins)), ["a", "b", "c", "ab", "ac"]);
    let env_key = run(fedarm().arg("mine").arg("--input").arg(&input).env("FEDARM_STREAM_KEY", "3"));
    assert_eq!(itemsets(&json(&env_key)), ["a", "b", "c", "ab", "ac"]);
}

#[test]
fn several_inputs_are_several_owners() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("o1.txt");
    let second = dir.path().join("o2.txt");
    fs::write(&first, "a b c\na b\n").unwrap();
    fs::write(&second, "a c\nb\n").unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(&first).arg("--input").arg(&second));
    let report = json(&out);
    assert_eq!(report["n_data_owners"], 2);
    assert_eq!(report["n_transactions"], 4);
    assert_eq!(itemsets(&report), ["a", "b", "c", "ab", "ac"]);

    let clash =
        run(fedarm().arg("mine").arg("--input").arg(&first).arg("--input").arg(&second).args(["--owners", "3"]));
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn sum_mode_and_level_cap() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("mine").arg("--input").arg(sample(&dir)).args(["--mode", "sum", "--max-level", "1"]));
    let report = json(&out);
    assert_eq!(report["mode"], "sum");
    assert_eq!(itemsets(&report), ["a", "b", "c"]);
}

#[test]
fn dispersion_single_block_is_exact() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("dispersion").arg("--input").arg(sample(&dir)).args(["--ics", "1", "--seeds", "5"]));
    let report = json(&out);
    assert_eq!(report["max_abs_deviation"], 0.0);
    assert_eq!(report["n_seeds"], 5);
}

#[test]
fn dispersion_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = sample(&dir);
    let once = || run(fedarm().arg("dispersion").arg("--input").arg(&input).args(["--ics", "2", "--seed", "4"])).stdout;
    assert_eq!(once(), once());
}

#[test]
fn split_report_partitions_ids() {
    let dir = TempDir::new().unwrap();
    let out = run(fedarm().arg("split-report").arg("--input").arg(sample(&dir)).args(["--ics", "3", "--seed", "8"]));
    let report = json(&out);
    let mut ids: Vec<u64> = report["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|b| b["ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()))
        .collect();
    ids.sort_unstable();
    assert_eq!(ids, [1, 2, 3, 4]);
    let sizes: Vec<u64> = report["blocks"].as_array().unwrap().iter().map(|b| b["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [2, 1, 1]);
}

#[test]
fn bench_writes_csv_and_checks_rows() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = run(fedarm()
        .args(["bench", "--ics", "1,2,4", "--transactions", "300", "--sigma", "0.1,1.0"])
        .arg("--out")
        .arg(&csv));
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let cust: u64 = row[col("visits_customized")].parse().unwrap();
        let classic: u64 = row[col("visits_classic")].parse().unwrap();
        assert!(cust <= classic);
        assert_eq!(row[col("recall_vs_exact")], "1.0");
    }
}

#[test]
fn bench_rejects_empty_grid_value() {
    let out = run(fedarm().args(["bench", "--ics", "0"]));
    assert_eq!(out.status.code(), Some(2));
}
