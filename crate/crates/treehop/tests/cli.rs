//! End-to-end runs of the `treehop` binary against the bundled scripted
//! fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn treehop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treehop"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn scripted(name: &str) -> String {
    format!("scripted:{}", fixtures().join(name).display())
}

fn ingest(dir: &Path, backend: &str, corpus: &str) -> PathBuf {
    let index = dir.join("index.json");
    let output = treehop(
        &[
            "--backend",
            backend,
            "--cache-dir",
            dir.join("cache").to_str().unwrap(),
            "ingest",
            "--corpus",
            fixtures().join(corpus).to_str().unwrap(),
            "--index",
            index.to_str().unwrap(),
        ],
        dir,
    );
    assert!(output.status.success(), "ingest failed: {output:?}");
    index
}

#[test]
fn ask_navigator_prints_final_answer() {
    let dir = tempfile::tempdir().unwrap();
    let backend = scripted("navigator.oracle.jsonl");
    let index = ingest(dir.path(), &backend, "navigator.corpus.jsonl");
    let trace = dir.path().join("run.trace.jsonl");
    let output = treehop(
        &[
            "--backend",
            &backend,
            "--cache-dir",
            dir.path().join("cache").to_str().unwrap(),
            "ask",
            "Who is the son of the Italian navigator who explored the eastern coast of the continent Ulises Solís' birthplace is located in for England?",
            "--index",
            index.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success());
    let out = stdout(&output);
    assert!(
        out.lines().next().unwrap().contains("Sebastian Cabot"),
        "got: {out}"
    );
    assert!(trace.exists());
}

#[test]
fn ask_author_prints_final_answer() {
    let dir = tempfile::tempdir().unwrap();
    let backend = scripted("author.oracle.jsonl");
    let index = ingest(dir.path(), &backend, "author.corpus.jsonl");
    let output = treehop(
        &[
            "--backend",
            &backend,
            "--no-cache",
            "ask",
            "What was the home city of the author of the famous novel tracing the life of a male roe deer from his birth onward?",
            "--index",
            index.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success());
    assert_eq!(stdout(&output).lines().next().unwrap(), "Vienna");
}

#[test]
fn ask_unanswerable_exits_zero_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    // The eval5 oracle has no entry for this question and falls back to
    // "None" everywhere, exhausting all rounds.
    let backend = scripted("eval5.oracle.jsonl");
    let index = ingest(dir.path(), &backend, "navigator.corpus.jsonl");
    let output = treehop(
        &[
            "--backend",
            &backend,
            "--no-cache",
            "ask",
            "Who catalogued the lost ledger of the archive?",
            "--index",
            index.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(output.status.success());
    assert!(stdout(&output).contains("[unanswered after 3 rounds]"));
}

#[test]
fn eval_prints_summary_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let output = treehop(
        &[
            "--backend",
            &scripted("eval5.oracle.jsonl"),
            "--cache-dir",
            dir.path().join("cache").to_str().unwrap(),
            "eval",
            "--dataset",
            fixtures().join("eval5.dataset.jsonl").to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--traces",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "eval failed: {output:?}");
    let out = stdout(&output);
    assert!(out.contains("F1 50.00 EM 40.00"), "got: {out}");
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("manifest.json").exists());
    assert_eq!(
        std::fs::read_dir(out_dir.join("traces")).unwrap().count(),
        5
    );
}

#[test]
fn eval_missing_dataset_fails_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let output = treehop(
        &[
            "--backend",
            &scripted("eval5.oracle.jsonl"),
            "--no-cache",
            "eval",
            "--dataset",
            "no-such-file.jsonl",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr).to_string();
    assert!(err.contains("no-such-file.jsonl"), "got: {err}");
}

#[test]
fn inspect_tree_prints_signature_and_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let output = treehop(
        &[
            "--backend",
            &scripted("navigator.oracle.jsonl"),
            "--cache-dir",
            dir.path().join("cache").to_str().unwrap(),
            "inspect-tree",
            "Who is the son of the Italian navigator who explored the eastern coast of the continent Ulises Solís' birthplace is located in for England?",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "inspect failed: {output:?}");
    let out = stdout(&output);
    assert!(out.contains("signature: depth 4, 7 nodes"), "got: {out}");
    assert!(out.contains("candidate 0: depth 4, 7 nodes (selected)"));
    assert!(out.contains("[answer from N1]"));
}

#[test]
fn overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let output = treehop(
        &[
            "--backend",
            &scripted("navigator.oracle.jsonl"),
            "--no-cache",
            "--max-depth",
            "2",
            "inspect-tree",
            "Who is the son of the Italian navigator who explored the eastern coast of the continent Ulises Solís' birthplace is located in for England?",
        ],
        dir.path(),
    );
    assert!(output.status.success());
    let err = String::from_utf8_lossy(&output.stderr).to_string();
    assert!(
        err.contains("override: solver.max_depth = 2 (default 4)"),
        "got: {err}"
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        "candidate_count = 2\n[solver]\nmax_depth = 3\n",
    )
    .unwrap();
    let output = treehop(
        &[
            "--config",
            config_path.to_str().unwrap(),
            "--backend",
            &scripted("navigator.oracle.jsonl"),
            "--no-cache",
            "--max-depth",
            "4",
            "inspect-tree",
            "Who is the son of the Italian navigator who explored the eastern coast of the continent Ulises Solís' birthplace is located in for England?",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "run failed: {output:?}");
    let out = stdout(&output);
    // Flag beat the file (depth 4 tree); the file's candidate_count held.
    assert!(out.contains("signature: depth 4, 7 nodes"), "got: {out}");
    assert!(out.contains("candidate 1:"));
    assert!(
        !out.contains("candidate 2:"),
        "file candidate_count=2 expected: {out}"
    );
}
