//! Deterministic whitespace-plus-punctuation tokenizer.
//!
//! One tokenizer feeds chunking, context budgeting, and the F1 metric so
//! every token count in the engine means the same thing. A token is either a
//! maximal run of alphanumeric characters or a single punctuation character;
//! whitespace only separates. Spans are byte offsets into the original text,
//! so slicing the text between a chunk's first and last token reproduces the
//! source verbatim, inner separators included.
//!
//! This intentionally diverges from model tokenizers (BPE etc.); budgets
//! expressed in these tokens are self-consistent, not model-exact.

/// Byte span of a single token in its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

/// Split `text` into token spans.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(idx);
            }
        } else {
            if let Some(start) = word_start.take() {
                spans.push(TokenSpan { start, end: idx });
            }
            if !ch.is_whitespace() {
                spans.push(TokenSpan {
                    start: idx,
                    end: idx + ch.len_utf8(),
                });
            }
        }
    }
    if let Some(start) = word_start {
        spans.push(TokenSpan {
            start,
            end: text.len(),
        });
    }
    spans
}

/// Token texts, in order.
pub fn token_texts(text: &str) -> Vec<&str> {
    tokenize(text)
        .into_iter()
        .map(|span| &text[span.start..span.end])
        .collect()
}

/// Number of tokens in `text`.
pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}

/// Reconstruct the stretch of `text` covered by tokens `[first, last]`,
/// separators included.
pub fn slice_tokens<'a>(text: &'a str, spans: &[TokenSpan], first: usize, last: usize) -> &'a str {
    &text[spans[first].start..spans[last].end]
}
