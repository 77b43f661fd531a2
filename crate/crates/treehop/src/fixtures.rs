//! Deterministic scripted scenarios used by tests, examples, and the
//! bundled fixture files.
//!
//! Each scenario pairs a question with a scripted oracle and a small corpus.
//! Oracles key completion entries on the literal `Question: ...` prompt line,
//! so corpus text can never shadow an entry. Embeddings fall back to hashed
//! vectors and reranking to token overlap; completions stay strict (no
//! fallback) unless a scenario says otherwise, so a missing entry fails loud.

use crate::gateway::ScriptedOracle;
use crate::retrieval::Document;

fn scenario_oracle() -> ScriptedOracle {
    let mut oracle = ScriptedOracle::new();
    oracle.strict = false;
    oracle.set_embed_fallback_hashed(16);
    oracle.set_rerank_fallback_overlap();
    oracle
}

fn doc(id: &str, text: &str) -> Document {
    Document {
        doc_id: id.to_string(),
        text: text.to_string(),
    }
}

/// Render documents as the corpus JSON Lines format `ingest` accepts.
pub fn corpus_jsonl(documents: &[Document]) -> String {
    documents
        .iter()
        .map(|d| serde_json::to_string(d).expect("documents serialize"))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

/// The navigator scenario: a four-level decomposition whose deepest leaf is
/// unanswerable, forcing one parent-to-leaf conversion before the chain
/// resolves to "Sebastian Cabot".
pub mod navigator {
    use super::*;

    pub const QUESTION: &str = "Who is the son of the Italian navigator who explored the eastern coast of the continent Ulises Solís' birthplace is located in for England?";

    pub const N1: &str = "Who is the Italian navigator who explored the eastern coast of the continent where Ulises Solís' birthplace is located?";
    pub const N2: &str = "In which continent was Ulises Solís born?";
    pub const N3: &str = "Where was Ulises Solís born?";
    pub const FINAL_ANSWER: &str = "Sebastian Cabot";

    pub fn oracle() -> ScriptedOracle {
        let mut o = scenario_oracle();
        o.complete_contains(
            "analyze",
            "",
            [concat!(
                "CORE_QUERY: Who is the son of X?\n",
                "KNOWN: Ulises Solís | athlete whose birthplace anchors the chain\n",
                "KNOWN: England | the navigator sailed for England\n",
                "UNKNOWN: the Italian navigator\n",
                "UNKNOWN: the continent of the birthplace\n",
            )],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {QUESTION}"),
            [concat!(
                "PATTERN: sequential\n",
                "CHILD: Who is the Italian navigator who explored the eastern coast of the continent where Ulises Solís' birthplace is located?\n",
                "CHILD: Who is the son of [answer from Q1]?\n",
            )],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {N1}"),
            [concat!(
                "PATTERN: sequential\n",
                "CHILD: In which continent was Ulises Solís born?\n",
                "CHILD: Who is the Italian navigator who explored the eastern coast of [answer from Q1]?\n",
            )],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {N2}"),
            [concat!(
                "PATTERN: sequential\n",
                "CHILD: Where was Ulises Solís born?\n",
                "CHILD: In which continent is [answer from Q1] located?\n",
            )],
        );
        o.complete_contains(
            "decompose",
            "Question: Who is the Italian navigator who explored the eastern coast of North America?",
            ["PATTERN: direct\n"],
        );
        o.complete_contains(
            "decompose",
            "Question: Who is the son of John Cabot?",
            ["PATTERN: direct\n"],
        );

        o.complete_contains("answer", &format!("Question: {N3}"), ["[none]"]);
        o.complete_contains(
            "answer",
            "Question: What is the birthplace of Ulises Solís?",
            ["[none]"],
        );
        o.complete_contains("answer", &format!("Question: {N2}"), ["North America"]);
        o.complete_contains(
            "answer",
            "Question: Who is the Italian navigator who explored the eastern coast of North America?",
            ["John Cabot"],
        );
        o.complete_contains(
            "answer",
            "Question: Who is the son of John Cabot?",
            ["Sebastian Cabot"],
        );

        o.complete_contains(
            "rewrite",
            &format!("Question: {N3}"),
            ["1. What is the birthplace of Ulises Solís?"],
        );
        o.complete_contains("support", "", ["yes"]);
        o.complete_contains("aggregate", &format!("Question: {N1}"), ["John Cabot"]);
        o.complete_contains(
            "aggregate",
            &format!("Question: {QUESTION}"),
            ["Sebastian Cabot"],
        );
        o
    }

    pub fn corpus() -> Vec<Document> {
        vec![
            doc(
                "cabot",
                "John Cabot was a Venetian navigator and explorer. In 1497, sailing for England under commission from Henry VII, he explored parts of the North American coastline and claimed land for the English crown.",
            ),
            doc(
                "sebastian",
                "Sebastian Cabot, a son of John Cabot, was himself an explorer and cartographer who later served both Spain and England and mapped stretches of the New World.",
            ),
            doc(
                "solis",
                "Ulises Solís is a Mexican professional boxer who held a world championship in the light flyweight division for several years.",
            ),
        ]
    }
}

/// The author scenario: a two-level sequential decomposition that resolves
/// "Felix Salten" and then his home city, "Vienna".
pub mod author {
    use super::*;

    pub const QUESTION: &str = "What was the home city of the author of the famous novel tracing the life of a male roe deer from his birth onward?";

    pub const N1: &str = "Who is the author of the famous novel tracing the life of a male roe deer from his birth onward?";
    pub const N2_RESOLVED: &str = "What was the home city of Felix Salten?";
    pub const FINAL_ANSWER: &str = "Vienna";

    pub fn oracle() -> ScriptedOracle {
        let mut o = scenario_oracle();
        o.complete_contains(
            "analyze",
            "",
            [concat!(
                "CORE_QUERY: What was the home city of X?\n",
                "KNOWN: the famous novel | traces the life of a male roe deer from his birth onward\n",
                "UNKNOWN: the author of the novel\n",
            )],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {QUESTION}"),
            [concat!(
                "PATTERN: sequential\n",
                "CHILD: Who is the author of the famous novel tracing the life of a male roe deer from his birth onward?\n",
                "CHILD: What was the home city of [answer from Q1]?\n",
            )],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {N1}"),
            ["PATTERN: direct\n"],
        );
        o.complete_contains(
            "decompose",
            &format!("Question: {N2_RESOLVED}"),
            ["PATTERN: direct\n"],
        );
        o.complete_contains("answer", &format!("Question: {N1}"), ["Felix Salten"]);
        o.complete_contains("answer", &format!("Question: {N2_RESOLVED}"), ["Vienna"]);
        o.complete_contains("support", "", ["yes"]);
        o.complete_contains("aggregate", &format!("Question: {QUESTION}"), ["Vienna"]);
        o
    }

    pub fn corpus() -> Vec<Document> {
        vec![
            doc(
                "salten",
                "Felix Salten was an Austro-Hungarian author and critic. He spent most of his life in Vienna, the city he regarded as home, writing for newspapers and literary journals.",
            ),
            doc(
                "bambi",
                "Bambi, a Life in the Woods is a coming-of-age novel that traces the life of a male roe deer from his birth onward. It was written by Felix Salten and published in 1923.",
            ),
            doc(
                "pest",
                "Pest was a historical city on the eastern bank of the Danube. It unified with Buda in 1873 to form Budapest, the capital of Hungary.",
            ),
        ]
    }
}

/// Adversarial scenario: decompositions parse but every generated answer is
/// "None", so the solve exhausts rewrites, conversions, and all refinement
/// rounds. Used to check termination and the model-call bound.
pub mod exhaustion {
    use super::*;

    pub const QUESTION: &str = "Which archive holds the unanswerable ledger?";

    pub fn oracle() -> ScriptedOracle {
        let mut o = scenario_oracle();
        o.set_complete_fallback("None");
        o.complete_contains(
            "analyze",
            "",
            ["CORE_QUERY: X\nKNOWN: none\nUNKNOWN: none\n"],
        );
        o.complete_contains(
            "decompose",
            "",
            [concat!(
                "PATTERN: sequential\n",
                "CHILD: Which registry mentions the ledger at all?\n",
                "CHILD: Which wing of [answer from Q1] stores it?\n",
            )],
        );
        o
    }

    pub fn corpus() -> Vec<Document> {
        vec![doc(
            "misc",
            "The municipal registry building has three wings and a reading room open on weekdays.",
        )]
    }
}

/// Five single-hop samples in the LongBench field layout plus an oracle that
/// answers them with a fixed quality mix: two exact hits, one half-overlap,
/// one wrong answer, one unanswerable.
pub mod eval5 {
    use super::*;

    pub fn oracle() -> ScriptedOracle {
        let mut o = scenario_oracle();
        o.set_complete_fallback("None");
        o.complete_contains(
            "analyze",
            "",
            ["CORE_QUERY: X\nKNOWN: none\nUNKNOWN: none\n"],
        );
        o.complete_contains("decompose", "", ["PATTERN: direct\n"]);
        o.complete_contains(
            "answer",
            "Question: Which city hosted the first modern Olympic Games?",
            ["Athens"],
        );
        o.complete_contains(
            "answer",
            "Question: Which metal is liquid at room temperature?",
            ["Mercury"],
        );
        o.complete_contains(
            "answer",
            "Question: Which city did Felix Salten consider home?",
            ["home city Vienna"],
        );
        o.complete_contains(
            "answer",
            "Question: Which river flows through Budapest?",
            ["Tisza"],
        );
        // The fifth question has no answer entry; the "None" fallback makes
        // it exhaust every round.
        o
    }

    /// `(question, gold, passage)` for the five samples.
    pub fn samples() -> Vec<(&'static str, &'static str, &'static str)> {
        vec![
            (
                "Which city hosted the first modern Olympic Games?",
                "Athens",
                "The first modern Olympic Games were hosted by Athens in 1896, reviving the ancient competition.",
            ),
            (
                "Which metal is liquid at room temperature?",
                "Mercury",
                "Mercury is the only metallic element that is liquid at room temperature and standard pressure.",
            ),
            (
                "Which city did Felix Salten consider home?",
                "Vienna",
                "Felix Salten lived most of his life in Vienna and regarded it as his home city.",
            ),
            (
                "Which river flows through Budapest?",
                "Danube",
                "The Danube flows through Budapest, separating the historical halves of Buda and Pest.",
            ),
            (
                "Who catalogued the lost ledger of the archive?",
                "Nobody",
                "The reading room of the archive is open on weekdays and holds municipal records.",
            ),
        ]
    }

    /// The dataset as LongBench-style JSON Lines.
    pub fn dataset_jsonl() -> String {
        samples()
            .iter()
            .enumerate()
            .map(|(i, (question, gold, passage))| {
                serde_json::json!({
                    "_id": format!("s{}", i + 1),
                    "input": question,
                    "answers": [gold],
                    "context": format!("Passage 1:\nEvidence\n{passage}"),
                })
                .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}
