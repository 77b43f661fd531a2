//! Corpus input formats.
//!
//! Two JSON Lines layouts are accepted:
//!
//! * plain documents: one `{"doc_id": ..., "text": ...}` per line;
//! * LongBench-style samples: records carrying `input`/`answers`/`context`,
//!   whose `context` field is split into passages.
//!
//! Passage delimiter, byte-exact: a passage starts at a line consisting of
//! the bytes `Passage ` followed by one or more ASCII digits and a final
//! `:` (regex `^Passage [0-9]+:$` applied per line). The first line after
//! the marker is treated as the passage title; the remainder is its text.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

/// One titled passage split out of a LongBench context blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub title: String,
    pub text: String,
}

fn is_passage_marker(line: &str) -> bool {
    line.strip_prefix("Passage ")
        .and_then(|rest| rest.strip_suffix(':'))
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

/// Split a LongBench `context` string into titled passages. Text before the
/// first marker (if any) becomes an untitled preamble passage.
pub fn split_passages(context: &str) -> Vec<Passage> {
    let mut passages = Vec::new();
    let mut title: Option<String> = None;
    let mut body: Vec<&str> = Vec::new();
    let mut preamble: Vec<&str> = Vec::new();
    let mut in_passage = false;

    let flush = |title: &mut Option<String>, body: &mut Vec<&str>, passages: &mut Vec<Passage>| {
        let text = body.join("\n").trim().to_string();
        let title_text = title.take().unwrap_or_default();
        if !text.is_empty() || !title_text.is_empty() {
            passages.push(Passage {
                title: title_text,
                text,
            });
        }
        body.clear();
    };

    for line in context.lines() {
        if is_passage_marker(line) {
            if in_passage {
                flush(&mut title, &mut body, &mut passages);
            }
            in_passage = true;
            title = None;
            continue;
        }
        if !in_passage {
            preamble.push(line);
            continue;
        }
        if title.is_none() {
            title = Some(line.trim().to_string());
        } else {
            body.push(line);
        }
    }
    if in_passage {
        flush(&mut title, &mut body, &mut passages);
    }
    let preamble_text = preamble.join("\n").trim().to_string();
    if !preamble_text.is_empty() {
        passages.insert(
            0,
            Passage {
                title: String::new(),
                text: preamble_text,
            },
        );
    }
    passages
}

/// Turn titled passages into indexable documents. The title is prepended to
/// the text so it participates in retrieval.
pub fn passages_to_documents(prefix: &str, passages: &[Passage]) -> Vec<Document> {
    passages
        .iter()
        .enumerate()
        .map(|(i, p)| Document {
            doc_id: format!("{prefix}#p{i}"),
            text: if p.title.is_empty() {
                p.text.clone()
            } else {
                format!("{}\n{}", p.title, p.text)
            },
        })
        .collect()
}

/// Load a corpus file, accepting both layouts described in the module docs.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut documents = Vec::new();
    for (number, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Dataset {
            path: path.to_path_buf(),
            line: number + 1,
            message: format!("invalid JSON: {e}"),
        })?;
        if value.get("doc_id").is_some() {
            let doc: Document = serde_json::from_value(value).map_err(|e| Error::Dataset {
                path: path.to_path_buf(),
                line: number + 1,
                message: format!("bad document record: {e}"),
            })?;
            documents.push(doc);
        } else if let Some(context) = value.get("context").and_then(|c| c.as_str()) {
            let id = value
                .get("_id")
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| format!("line{}", number + 1));
            let passages = split_passages(context);
            if passages.is_empty() {
                return Err(Error::Dataset {
                    path: path.to_path_buf(),
                    line: number + 1,
                    message: "sample context contains no passages".into(),
                });
            }
            documents.extend(passages_to_documents(&id, &passages));
        } else {
            return Err(Error::Dataset {
                path: path.to_path_buf(),
                line: number + 1,
                message: "record has neither `doc_id`/`text` nor `context`".into(),
            });
        }
    }
    if documents.is_empty() {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            line: 0,
            message: "corpus is empty".into(),
        });
    }
    Ok(documents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_detection_is_byte_exact() {
        assert!(is_passage_marker("Passage 1:"));
        assert!(is_passage_marker("Passage 42:"));
        assert!(!is_passage_marker("Passage :"));
        assert!(!is_passage_marker("Passage 1: extra"));
        assert!(!is_passage_marker("passage 1:"));
        assert!(!is_passage_marker(" Passage 1:"));
    }

    #[test]
    fn splits_titled_passages() {
        let context = "Passage 1:\nFelix Salten\nFelix Salten was an author.\nHe lived in Vienna.\nPassage 2:\nBambi\nBambi is a novel.";
        let passages = split_passages(context);
        assert_eq!(passages.len(), 2);
        assert_eq!(passages[0].title, "Felix Salten");
        assert!(passages[0].text.contains("Vienna"));
        assert_eq!(passages[1].title, "Bambi");
    }

    #[test]
    fn preamble_without_marker_is_kept() {
        let passages = split_passages("just flat text\nwith two lines");
        assert_eq!(passages.len(), 1);
        assert_eq!(passages[0].title, "");
    }

    #[test]
    fn corpus_loads_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"doc_id\": \"d1\", \"text\": \"plain document\"}\n",
                "{\"_id\": \"s1\", \"input\": \"q\", \"answers\": [\"a\"], \"context\": \"Passage 1:\\nTitle\\nBody text\"}\n",
            ),
        )
        .unwrap();
        let docs = load_corpus(&path).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "d1");
        assert_eq!(docs[1].doc_id, "s1#p0");
        assert!(docs[1].text.contains("Title"));
    }

    #[test]
    fn malformed_line_names_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "{\"doc_id\": \"d1\", \"text\": \"ok\"}\nnot json\n").unwrap();
        let err = load_corpus(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_corpus(&path).is_err());
    }
}
