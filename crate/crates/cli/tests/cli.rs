use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn docflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docflow"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DOCFLOW_LLM_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_then_run_writes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let g = docflow(
        &["generate", "--n", "3", "--seed", "5", "--out", "s"],
        dir.path(),
    );
    assert_eq!(
        g.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&g.stderr)
    );
    assert_eq!(std::fs::read_dir(dir.path().join("s")).unwrap().count(), 3);

    let r = docflow(
        &["run", "--sessions", "s", "--out", "runs", "--jobs", "1"],
        dir.path(),
    );
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let text = stdout(&r);
    assert!(text.contains("iACC"));
    assert!(text.contains("scripted"));

    let runs: Vec<_> = std::fs::read_dir(dir.path().join("runs"))
        .unwrap()
        .collect();
    assert_eq!(runs.len(), 1);
    let run = runs[0].as_ref().unwrap().path();
    assert!(run.join("report.json").is_file());
    assert!(run.join("report.csv").is_file());
    assert_eq!(std::fs::read_dir(run.join("traces")).unwrap().count(), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"][0]["report"]["iacc"], 100.0);
}

#[test]
fn failed_evaluations_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    docflow(
        &["generate", "--n", "4", "--seed", "11", "--out", "s"],
        dir.path(),
    );
    let r = docflow(
        &[
            "run",
            "--sessions",
            "s",
            "--strategy",
            "retrieval_only",
            "--out",
            "runs",
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["run", "--sessions", "missing"],
        &["run", "--sessions", "x", "--policy", "sometimes"],
        &["run", "--sessions", "x", "--validator-threshold", "1.5"],
        &["frobnicate"],
        &["intents", "classify", "bold", "--k", "0"],
    ];
    for args in cases {
        let o = docflow(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn diff_rejects_bad_states_and_reports_no_changes_for_equal_ones() {
    let dir = tempfile::tempdir().unwrap();
    let state = r#"{"state_version":1}"#;
    std::fs::write(dir.path().join("a.json"), state).unwrap();
    let bad = docflow(&["diff", "a.json", "a.json"], dir.path());
    assert_eq!(bad.status.code(), Some(2));

    let mut child = Command::new(env!("CARGO_BIN_EXE_docflow"))
        .args(["repl"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"add a table with 2 rows and 3 columns\n:save b.json\n:quit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("add_table"));

    let same = docflow(&["diff", "b.json", "b.json"], dir.path());
    assert_eq!(same.status.code(), Some(0));
    assert_eq!(stdout(&same).trim(), "no changes detected");
}

#[test]
fn replay_fills_expected_states() {
    let dir = tempfile::tempdir().unwrap();
    docflow(
        &["generate", "--n", "1", "--seed", "2", "--out", "s"],
        dir.path(),
    );
    let file = std::fs::read_dir(dir.path().join("s"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let o = docflow(
        &["replay", file.to_str().unwrap(), "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for turn in v["turns"].as_array().unwrap() {
        assert!(turn["expected_state"].is_object());
    }
}

#[test]
fn apis_dump_and_intent_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let o = docflow(&["apis", "dump"], dir.path());
    let apis: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert!(apis.len() >= 40);

    let o = docflow(
        &["intents", "classify", "make the title bold", "--k", "2"],
        dir.path(),
    );
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("format_style_editing\t"));
}

#[test]
fn bench_ablation_prints_every_policy() {
    let dir = tempfile::tempdir().unwrap();
    let o = docflow(
        &[
            "bench", "--n", "3", "--suite", "ablation", "--seeds", "1", "--out", "runs",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for p in ["none", "arg_only", "single_round_dual", "multi_round(2)"] {
        assert!(text.contains(p), "{p} missing from\n{text}");
    }
}
