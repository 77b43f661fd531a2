//! Answer normalization and the EM / F1 metrics.
//!
//! Normalization follows the SQuAD convention: lowercase, strip punctuation,
//! drop the articles `a`/`an`/`the`, collapse whitespace. The same normalizer
//! is used by the solver's rejection sampling so that "vienna." and "Vienna"
//! land in one vote bucket.

use std::collections::HashMap;

/// SQuAD-style normalization: lowercase, strip punctuation, remove articles,
/// collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    stripped
        .split_whitespace()
        .filter(|tok| !matches!(*tok, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer_tokens(text: &str) -> Vec<String> {
    normalize_answer(text)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// 1 if the normalized prediction equals any normalized gold answer, else 0.
pub fn exact_match(prediction: &str, golds: &[String]) -> u8 {
    let pred = normalize_answer(prediction);
    golds.iter().any(|g| normalize_answer(g) == pred).into()
}

/// Token-bag F1 against a single gold answer.
fn f1_single(prediction: &str, gold: &str) -> f64 {
    let pred = answer_tokens(prediction);
    let gold = answer_tokens(gold);
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for tok in &gold {
        *gold_counts.entry(tok.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for tok in &pred {
        if let Some(count) = gold_counts.get_mut(tok.as_str()) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Bag-of-tokens F1 on normalized strings, maximum over the gold answers.
pub fn f1(prediction: &str, golds: &[String]) -> f64 {
    golds
        .iter()
        .map(|g| f1_single(prediction, g))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golds(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalize_strips_articles_punctuation_case() {
        assert_eq!(normalize_answer("The Sebastian Cabot."), "sebastian cabot");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("Vienna"), "vienna");
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_answer("  John \t Cabot  "), "john cabot");
    }

    #[test]
    fn exact_match_cases() {
        assert_eq!(
            exact_match("Sebastian Cabot", &golds(&["Sebastian Cabot"])),
            1
        );
        assert_eq!(exact_match("Pest, Austria-Hungary", &golds(&["Vienna"])), 0);
        assert_eq!(exact_match("the vienna", &golds(&["Vienna"])), 1);
    }

    #[test]
    fn f1_identity_is_one() {
        assert_eq!(f1("Vienna", &golds(&["Vienna"])), 1.0);
    }

    #[test]
    fn f1_partial_overlap() {
        // P = 1/3, R = 1, F1 = 2*(1/3)*1 / (4/3) = 0.5
        assert!((f1("home city vienna", &golds(&["Vienna"])) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f1_zero_overlap() {
        assert_eq!(f1("Pest Austria-Hungary", &golds(&["Vienna"])), 0.0);
    }

    #[test]
    fn f1_empty_handling() {
        assert_eq!(f1("", &golds(&[""])), 1.0);
        assert_eq!(f1("", &golds(&["Vienna"])), 0.0);
        assert_eq!(f1("Vienna", &golds(&[""])), 0.0);
    }

    #[test]
    fn f1_max_over_golds() {
        let gs = golds(&["Budapest", "Vienna"]);
        assert_eq!(f1("Vienna", &gs), 1.0);
    }

    #[test]
    fn em_implies_f1() {
        let cases = [
            ("Sebastian Cabot", vec!["Sebastian Cabot".to_string()]),
            ("the vienna", vec!["Vienna".to_string()]),
            ("", vec!["".to_string()]),
        ];
        for (pred, gs) in cases {
            if exact_match(pred, &gs) == 1 {
                assert_eq!(f1(pred, &gs), 1.0, "em=1 must imply f1=1 for {pred:?}");
            }
        }
    }
}
