use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bystander"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_reports_text() {
    let path = scenario("vlc_static_3m.json");
    let o = run(&["run", path.to_str().unwrap(), "--reps", "3", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("accuracy   1.000"), "{out}");
    assert!(out.contains("modality   vlc"));
}

#[test]
fn machine_report_is_json() {
    let path = scenario("uwb_static_6m.json");
    let o = run(&["run", path.to_str().unwrap(), "--reps", "2", "--report", "machine", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accuracy"], 1.0);
    assert_eq!(v["base_seed"], 9);
    assert_eq!(v["trace_hashes"].as_array().unwrap().len(), 2);
    assert_eq!(v["result"]["ranging_sessions"], 2);
}

#[test]
fn check_mode_passes_and_fails() {
    let path = scenario("gesture_static_1m.json");
    let o = run(&["run", path.to_str().unwrap(), "--reps", "2", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let strict = dir.path().join("strict.json");
    let text = std::fs::read_to_string(&path).unwrap().replace("[\n      133,\n      266\n    ]", "[0, 100]");
    assert!(text.contains("[0, 100]"));
    std::fs::write(&strict, text).unwrap();
    let o = run(&["run", strict.to_str().unwrap(), "--reps", "2", "--check"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
    // without --check thresholds are ignored
    let o = run(&["run", strict.to_str().unwrap(), "--reps", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1, \"duration_ms\": 10, \"modalities\": [\"vlc\", \"uwb\"], \"actors\": []}").unwrap();
    let o = run(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exactly one"));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn trace_file_has_one_record_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let path = scenario("vlc_static_3m.json");
    let o = run(&["run", path.to_str().unwrap(), "--reps", "1", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&trace).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(kinds.iter().filter(|k| *k == "StateChanged").count(), 2);
    assert!(kinds.contains(&"PacketDecoded".to_owned()));
}

#[test]
fn same_seed_same_output() {
    let path = scenario("multi_user_vlc.json");
    let args = ["run", path.to_str().unwrap(), "--reps", "3", "--report", "machine", "--seed", "5"];
    let hashes = |workers: &str| {
        let mut a = args.to_vec();
        a.extend(["--workers", workers]);
        let v: serde_json::Value = serde_json::from_slice(&run(&a).stdout).unwrap();
        (v["trace_hashes"].clone(), v["result"].clone())
    };
    assert_eq!(hashes("1"), hashes("3"));
}

#[test]
fn sweep_prints_each_length() {
    let path = scenario("vlc_walking_3m.json");
    let o = run(&["sweep", "--lengths", "14..26", "--motion", "static", "--trials", "3", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for bits in [14, 16, 18, 20, 22, 24, 26] {
        assert!(out.contains(&format!("{bits:>4}    3/3")), "{out}");
    }
    let o = run(&["sweep", "--lengths", "12..26", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let uwb = scenario("uwb_static_6m.json");
    assert_eq!(run(&["sweep", uwb.to_str().unwrap()]).status.code(), Some(2));
}
