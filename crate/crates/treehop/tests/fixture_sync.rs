//! Keeps the checked-in fixture files in `tests/fixtures/` identical to the
//! builders in `treehop::fixtures`. Run with `TREEHOP_REGEN_FIXTURES=1` to
//! rewrite the files after changing a builder.

use std::path::PathBuf;

use treehop::fixtures::{author, corpus_jsonl, eval5, navigator};

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn bundled_fixture_files_match_builders() {
    let files: Vec<(&str, String)> = vec![
        (
            "navigator.oracle.jsonl",
            navigator::oracle().to_jsonl().unwrap(),
        ),
        ("navigator.corpus.jsonl", corpus_jsonl(&navigator::corpus())),
        ("author.oracle.jsonl", author::oracle().to_jsonl().unwrap()),
        ("author.corpus.jsonl", corpus_jsonl(&author::corpus())),
        ("eval5.oracle.jsonl", eval5::oracle().to_jsonl().unwrap()),
        ("eval5.dataset.jsonl", eval5::dataset_jsonl()),
    ];
    let dir = fixtures_dir();
    let regen = std::env::var("TREEHOP_REGEN_FIXTURES").is_ok();
    for (name, expected) in files {
        let path = dir.join(name);
        if regen {
            std::fs::write(&path, &expected).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("{name} missing; regenerate with TREEHOP_REGEN_FIXTURES=1"));
        assert_eq!(
            on_disk, expected,
            "{name} is stale; regenerate with TREEHOP_REGEN_FIXTURES=1"
        );
    }
}

#[test]
fn bundled_smoke_dataset_is_valid() {
    let path = fixtures_dir().join("smoke_2wikimqa.jsonl");
    let samples = treehop::eval::load_dataset(&path).unwrap();
    assert_eq!(samples.len(), 10);
    for sample in &samples {
        assert!(
            !sample.context_passages.is_empty(),
            "{} has no passages",
            sample.sample_id
        );
        assert!(!sample.gold_answers.is_empty());
    }
}
