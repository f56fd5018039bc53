use std::path::Path;
use std::process::{Command, Output};

use ghz_holism::holism::{EntropyEstimate, HolismReport};
use ghz_holism::measurement::{MeasurementRecord, RandomnessReport};
use ghz_holism::probspace::{Interval, SolveOutcome};
use ghz_holism::state::ExpectationResult;
use ghz_holism::verify::SuiteReport;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use tempfile::TempDir;

const GHZ4: &str = r#"[
  {"subset": [1, 2, 3, 4], "value": "1"},
  {"subset": [1], "value": "0"},
  {"subset": [2], "value": "0"},
  {"subset": [3], "value": "0"},
  {"subset": [4], "value": "0"}
]"#;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holism-lab"))
        .args(args)
        .env_remove("HOLISM_LAB_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

/// Parses the output as `T` and checks it serializes back to the same bytes.
fn round_trips<T: Serialize + DeserializeOwned>(out: &Output) -> T {
    let text = stdout(out);
    let parsed: T = serde_json::from_str(text.trim_end()).expect("output parses as its report type");
    assert_eq!(serde_json::to_string(&parsed).unwrap(), text.trim_end());
    parsed
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

fn sample_record(dir: &TempDir, n: &str, trials: &str, seed: &str) -> String {
    let path = dir.path().join(format!("record-{n}-{trials}-{seed}.csv"));
    let p = path.display().to_string();
    let out = lab(&["sample", "--n", n, "--trials", trials, "--seed", seed, "--out", &p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn verify_prop1_reports_zero_proper_products() {
    let out = lab(&["verify", "--prop", "1", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let report: SuiteReport = serde_json::from_str(&stdout(&out)).unwrap();
    let prop1 = report.prop1.expect("prop1 ran");
    assert!(prop1.passed && prop1.proper_support_nonzero.is_empty());
    assert_eq!(prop1.all_x.len(), 1);
    assert!((prop1.all_x[0].value - 1.0).abs() < 1e-12);
    assert!(report.all_passed);
}

#[test]
fn verify_prop4_gives_uniform_eighths() {
    let out = lab(&["verify", "--prop", "4", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let run = &v["prop4"]["runs"][0];
    assert_eq!(run["outcome"]["outcome"], "unique");
    let probs = run["outcome"]["distribution"]["probabilities"].as_array().unwrap();
    assert_eq!(probs.len(), 8);
    assert!(probs.iter().all(|p| p == "1/8"));
}

#[test]
fn range_over_ghz4_pair_is_full_interval() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "ghz4.json", GHZ4);
    let out = lab(&["range", "--n", "4", "--constraints", &c, "--subset", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "{\"lo\":\"-1\",\"hi\":\"1\"}\n");
    let interval: Interval = round_trips(&out);
    assert_ne!(interval.lo, interval.hi);
}

#[test]
fn solve_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "ghz4.json", GHZ4);
    let out = lab(&["solve", "--n", "4", "--constraints", &c]);
    assert_eq!(out.status.code(), Some(0));
    let outcome: SolveOutcome = round_trips(&out);
    assert_eq!(outcome.label(), "underdetermined");
}

#[test]
fn expect_output_round_trips() {
    let out = lab(&["expect", "--n", "3", "--string", "XYY", "--engine", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let r: ExpectationResult = round_trips(&out);
    assert_eq!((r.n, r.string.as_str(), r.value), (3, "XYY", -1.0));
}

#[test]
fn sample_writes_a_parseable_record_with_metadata() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.csv");
    let p = path.display().to_string();
    let out = lab(&["sample", "--n", "4", "--trials", "500", "--seed", "9", "--out", &p]);
    assert_eq!(out.status.code(), Some(0));
    let meta = json(&out);
    assert_eq!(meta["semantics"], "re-prepared-per-trial");
    assert_eq!(meta["trials"], 500);
    let record = MeasurementRecord::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!((record.n(), record.len()), (4, 500));
    assert_eq!(record.to_csv_string(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let s = p.display().to_string();
        assert!(lab(&["sample", "--n", "5", "--trials", "2000", "--seed", "42", "--out", &s]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let first = lab(&["verify", "--trials", "2000"]);
    let second = lab(&["verify", "--trials", "2000"]);
    assert_eq!(first.stdout, second.stdout);
    let report: SuiteReport = round_trips(&first);
    assert_eq!(report.config.trials, 2000);
}

#[test]
fn bernoulli_and_entropy_on_a_record() {
    let dir = TempDir::new().unwrap();
    let rec = sample_record(&dir, "4", "20000", "3");
    let out = lab(&["bernoulli-test", "--record", &rec, "--subset", "1,3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: RandomnessReport = round_trips(&out);
    assert_eq!(report.subset.as_deref(), Some(&[1, 3][..]));
    assert_eq!(report.sample_size, 20_000);

    let full = lab(&["bernoulli-test", "--record", &rec, "--subset", "1,2,3,4"]);
    assert_eq!(json(&full)["verdict"], "deterministic");

    let out = lab(&["entropy", "--record", &rec, "--subset", "1,2,3,4"]);
    let e: EntropyEstimate = round_trips(&out);
    assert_eq!(e.bits, 0.0);
    let out = lab(&["entropy", "--n", "6", "--subset", "2,5"]);
    let e: EntropyEstimate = round_trips(&out);
    assert_eq!(e.bits, 1.0);
}

#[test]
fn holism_analytic_and_empirical() {
    let out = lab(&["holism", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let report: HolismReport = round_trips(&out);
    assert!(report.strictly_holistic);
    assert_eq!(report.subfamilies_checked, 30);

    let dir = TempDir::new().unwrap();
    let rec = sample_record(&dir, "4", "20000", "5");
    let out = lab(&["holism", "--record", &rec, "--epsilon", "0.1"]);
    let report: HolismReport = round_trips(&out);
    assert!(report.strictly_holistic);
    assert_eq!(report.sample_size, Some(20_000));

    let out = lab(&["holism", "--n", "4", "--sample-subfamilies", "5"]);
    let report: HolismReport = round_trips(&out);
    assert!(!report.exhaustive);
    assert_eq!(report.subfamilies_checked, 5);
}

#[test]
fn malformed_inputs_exit_two_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"[{"subset": [1], "value": "one half"}]"#);
    let out = lab(&["solve", "--n", "2", "--constraints", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`value`"));

    let csv = write(&dir, "bad.csv", "t,s1,s2,product\n0,1,-1,1\n");
    let out = lab(&["bernoulli-test", "--record", &csv]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("product"));

    assert_eq!(lab(&["expect", "--n", "3", "--string", "XQZ"]).status.code(), Some(2));
    assert_eq!(lab(&["verify", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(lab(&["verify", "--prop", "9"]).status.code(), Some(2));
    assert_eq!(lab(&["sample", "--n", "3", "--alpha", "1.5"]).status.code(), Some(2));
}

#[test]
fn config_file_is_read_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"solver_cap": 3, "trials": 500}"#);
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_holism-lab"))
            .args(["verify", "--prop", "4"])
            .args(extra)
            .env("HOLISM_LAB_CONFIG", Path::new(&cfg))
            .output()
            .unwrap()
    };
    let v = json(&run(&[]));
    assert_eq!(v["config"]["solver_cap"], 3);
    assert_eq!(v["prop4"]["coverage"]["verified_max_n"], 3);
    assert_eq!(v["prop4"]["coverage"]["limited_by_solver_cap"], true);

    let v = json(&run(&["--solver-cap", "5"]));
    assert_eq!(v["prop4"]["coverage"]["verified_max_n"], 5);

    let bad = write(&dir, "bad-cfg.json", r#"{"alpha": 2.0}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_holism-lab"))
        .args(["verify", "--prop", "1", "--n", "2"])
        .env("HOLISM_LAB_CONFIG", bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn verify_csv_format_lists_every_check() {
    let out = lab(&["verify", "--trials", "5000", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "check,passed");
    assert_eq!(lines.last(), Some(&"all,true"));
    assert_eq!(lines.len(), 9);
}
