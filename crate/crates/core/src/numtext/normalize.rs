use serde::{Deserialize, Serialize};

use super::extract::{scan_quantities, tokenize, Quantity, RawToken, RawTokenKind};
use super::words::ABBREVIATIONS;
use super::{NormalizedSentence, MASK_TOKEN, MAX_VALUE, MIN_VALUE};

/// Sentence filters applied by [`normalize_document`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_words: usize,
    pub max_words: usize,
    pub max_tokens: usize,
    pub min_value: f64,
    pub max_value: f64,
    /// Keep currency symbols as context tokens.
    pub keep_currency: bool,
    /// Keep only sentences with at least one number preceded by `$`.
    pub dollar_only: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_words: 8,
            max_words: 50,
            max_tokens: 128,
            min_value: MIN_VALUE,
            max_value: MAX_VALUE,
            keep_currency: true,
            dollar_only: false,
        }
    }
}

fn is_terminal(tok: &RawToken) -> bool {
    tok.kind == RawTokenKind::Punct && matches!(tok.text.as_str(), "." | "!" | "?")
}

/// Splits a token stream into sentences on terminal punctuation, skipping
/// periods that follow a known abbreviation or a single-letter initial.
fn sentence_ranges(tokens: &[RawToken]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if !is_terminal(tok) {
            continue;
        }
        if tok.text == "." && i > 0 {
            let prev = &tokens[i - 1];
            let glued = prev.end == tok.start;
            if glued && prev.kind == RawTokenKind::Word {
                let w = prev.text.to_lowercase();
                if w.chars().count() == 1 || ABBREVIATIONS.contains(&w.as_str()) {
                    continue;
                }
            }
        }
        // Runs like "?!" or "..." stay with the sentence they close.
        if tokens.get(i + 1).is_some_and(|n| is_terminal(n) && n.start == tok.end) {
            continue;
        }
        out.push(start..i + 1);
        start = i + 1;
    }
    if start < tokens.len() {
        out.push(start..tokens.len());
    }
    out
}

/// Splits raw text into sentence strings.
pub fn split_sentences(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let chars: Vec<char> = text.chars().collect();
    sentence_ranges(&tokens)
        .into_iter()
        .map(|r| chars[tokens[r.start].start..tokens[r.end - 1].end].iter().collect())
        .collect()
}

/// Cuts a sentence into pieces of at most `max_words` words without
/// splitting a quantity.
fn chunk_by_words(
    tokens: &[RawToken],
    quantities: &[Quantity],
    max_words: usize,
) -> Vec<std::ops::Range<usize>> {
    let mut inside = vec![false; tokens.len()];
    for q in quantities {
        for flag in &mut inside[q.first + 1..=q.last] {
            *flag = true;
        }
    }
    let mut out = Vec::new();
    let mut start = 0;
    let mut words = 0;
    for (i, tok) in tokens.iter().enumerate() {
        let w = usize::from(tok.is_alphanumeric());
        if words + w > max_words && !inside[i] && i > start {
            out.push(start..i);
            start = i;
            words = 0;
        }
        words += w;
    }
    if start < tokens.len() {
        out.push(start..tokens.len());
    }
    out
}

fn build_sentence(
    tokens: &[RawToken],
    quantities: &[Quantity],
    cfg: &FilterConfig,
) -> Option<NormalizedSentence> {
    let words = tokens.iter().filter(|t| t.is_alphanumeric()).count();
    if words < cfg.min_words || quantities.is_empty() {
        return None;
    }
    if quantities
        .iter()
        .any(|q| !(cfg.min_value..=cfg.max_value).contains(&q.value))
    {
        return None;
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut numbers = Vec::with_capacity(quantities.len());
    let mut qi = 0;
    let mut i = 0;
    while i < tokens.len() {
        if qi < quantities.len() && quantities[qi].first == i {
            numbers.push((out.len(), quantities[qi].value));
            out.push(MASK_TOKEN.to_string());
            i = quantities[qi].last + 1;
            qi += 1;
            continue;
        }
        let tok = &tokens[i];
        if tok.kind != RawTokenKind::Currency || cfg.keep_currency {
            out.push(tok.text.to_lowercase());
        }
        i += 1;
    }
    out.truncate(cfg.max_tokens);
    numbers.retain(|&(idx, _)| idx < out.len());
    let sentence = NormalizedSentence::new(out, numbers);
    if sentence.numbers.is_empty() {
        return None;
    }
    if cfg.dollar_only && !(0..sentence.numbers.len()).any(|s| sentence.is_dollar(s)) {
        return None;
    }
    Some(sentence)
}

/// Splits, lowercases and filters a document into normalized sentences.
///
/// Sentences with fewer than `min_words` words, without numbers, or with any
/// number outside the configured range are dropped; sentences longer than
/// `max_words` are broken up first.
pub fn normalize_document(text: &str, cfg: &FilterConfig) -> Vec<NormalizedSentence> {
    let tokens = tokenize(text);
    let mut out = Vec::new();
    for range in sentence_ranges(&tokens) {
        let sent = &tokens[range];
        let quantities = scan_quantities(sent);
        for chunk in chunk_by_words(sent, &quantities, cfg.max_words) {
            let local: Vec<Quantity> = quantities
                .iter()
                .filter(|q| q.first >= chunk.start && q.last < chunk.end)
                .map(|q| Quantity {
                    first: q.first - chunk.start,
                    last: q.last - chunk.start,
                    value: q.value,
                })
                .collect();
            if let Some(s) = build_sentence(&sent[chunk], &local, cfg) {
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = "Revenue rose to $32 million in 2016 as planned.";

    #[test]
    fn golden_sentence_keeps_currency_token() {
        let out = normalize_document(GOLDEN, &FilterConfig::default());
        assert_eq!(out.len(), 1);
        let s = &out[0];
        assert_eq!(
            s.tokens,
            vec!["revenue", "rose", "to", "$", MASK_TOKEN, "in", MASK_TOKEN, "as", "planned", "."]
        );
        assert_eq!(s.numbers, vec![(4, 3.2e7), (6, 2016.0)]);
        assert!(s.is_dollar(0));
        assert!(!s.is_dollar(1));
    }

    #[test]
    fn golden_sentence_without_currency_tokens() {
        let cfg = FilterConfig {
            keep_currency: false,
            ..FilterConfig::default()
        };
        let out = normalize_document("revenue rose to $32 million in 2016 as planned .", &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].numbers, vec![(3, 3.2e7), (5, 2016.0)]);
    }

    #[test]
    fn short_sentences_are_dropped() {
        assert!(normalize_document("Sales were 5 million units.", &FilterConfig::default()).is_empty());
    }

    #[test]
    fn out_of_range_sentence_is_dropped() {
        let text = "the estimate came to 100000000000000000 units in total this year.";
        assert!(normalize_document(text, &FilterConfig::default()).is_empty());
    }

    #[test]
    fn sentences_without_numbers_are_dropped() {
        let text = "there are no quantities anywhere in this rather long sentence at all.";
        assert!(normalize_document(text, &FilterConfig::default()).is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        let s = split_sentences("Mr. Smith paid $5 to the U.S. Treasury. Then he left!");
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], "Then he left!");
    }

    #[test]
    fn long_sentences_are_broken_up() {
        let mut text = String::new();
        for i in 0..60 {
            text.push_str(&format!("word{} ", ["a", "b", "c"][i % 3]));
            if i % 10 == 0 {
                text.push_str("42 ");
            }
        }
        let out = normalize_document(&text, &FilterConfig::default());
        assert!(out.len() >= 2);
        for s in &out {
            let words = s.tokens.len();
            assert!(words <= 50);
        }
    }

    #[test]
    fn truncation_keeps_numbers_in_bounds() {
        let cfg = FilterConfig {
            max_tokens: 10,
            ..FilterConfig::default()
        };
        let text = "one , two , three , four , five , six , seven , eight , nine , 12 , 13 .";
        let out = normalize_document(text, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].tokens.len(), 10);
        assert!(out[0].numbers.iter().all(|&(i, _)| i < 10));
    }

    #[test]
    fn dollar_filter() {
        let cfg = FilterConfig {
            dollar_only: true,
            ..FilterConfig::default()
        };
        assert_eq!(normalize_document(GOLDEN, &cfg).len(), 1);
        let text = "revenue rose to 32 million units in 2016 as planned.";
        assert!(normalize_document(text, &cfg).is_empty());
    }
}
