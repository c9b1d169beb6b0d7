use super::words::{
    is_currency, magnitude_suffix, magnitude_word, ordinal_tail, ordinal_word, tens_word,
    unit_word,
};
use super::{check_range, NumberToken};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawTokenKind {
    Word,
    Numeral,
    Currency,
    Punct,
}

/// A token of the source text with its character offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct RawToken {
    pub text: String,
    pub kind: RawTokenKind,
    pub start: usize,
    pub end: usize,
}

impl RawToken {
    pub fn is_alphanumeric(&self) -> bool {
        matches!(self.kind, RawTokenKind::Word | RawTokenKind::Numeral)
    }
}

/// A quantity spanning raw tokens `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Quantity {
    pub first: usize,
    pub last: usize,
    pub value: f64,
}

/// Splits text into words, numerals, currency symbols and punctuation.
///
/// Commas inside numerals and a single decimal point are kept; letters glued
/// to a numeral (`32m`, `3rd`) stay in the numeral token. A `+`/`-` directly
/// in front of a numeral is a sign and is dropped.
pub fn tokenize(text: &str) -> Vec<RawToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let n = chars.len();
    let digit_at = |j: usize| j < n && chars[j].is_ascii_digit();
    let alpha_at = |j: usize| j < n && chars[j].is_alphabetic();
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() {
            let mut seen_point = false;
            while i < n {
                if chars[i].is_ascii_digit() || (chars[i] == ',' && digit_at(i + 1) && i > start) {
                    i += 1;
                } else if chars[i] == '.' && !seen_point && digit_at(i + 1) {
                    seen_point = true;
                    i += 1;
                } else {
                    break;
                }
            }
            while alpha_at(i) {
                i += 1;
            }
            RawTokenKind::Numeral
        } else if c.is_alphabetic() {
            i += 1;
            while i < n {
                let letter = chars[i].is_alphanumeric() && !chars[i].is_ascii_digit();
                if letter || (matches!(chars[i], '-' | '\'' | '.') && alpha_at(i + 1)) {
                    i += 1;
                } else {
                    break;
                }
            }
            RawTokenKind::Word
        } else if is_currency(c) {
            i += 1;
            RawTokenKind::Currency
        } else if (c == '-' || c == '+') && digit_at(i + 1) && is_sign_position(&chars, i) {
            i += 1;
            continue;
        } else {
            i += 1;
            RawTokenKind::Punct
        };
        out.push(RawToken {
            text: chars[start..i].iter().collect(),
            kind,
            start,
            end: i,
        });
    }
    out
}

fn is_sign_position(chars: &[char], i: usize) -> bool {
    i == 0 || {
        let p = chars[i - 1];
        p.is_whitespace() || is_currency(p) || matches!(p, '(' | '[' | '/' | ':' | '=')
    }
}

/// Parses a numeral token such as `1,234.5`, `32m` or `21st`.
fn numeral_value(text: &str) -> Option<(f64, bool)> {
    let split = text
        .find(|c: char| c.is_alphabetic())
        .unwrap_or(text.len());
    let (digits, suffix) = text.split_at(split);
    let base: f64 = digits.replace(',', "").parse().ok()?;
    let suffix = suffix.to_lowercase();
    if suffix.is_empty() {
        return Some((base, true));
    }
    if matches!(suffix.as_str(), "st" | "nd" | "rd" | "th") && !digits.contains('.') {
        return Some((base, false));
    }
    magnitude_suffix(&suffix).map(|m| (base * m, false))
}

enum Piece {
    Small(f64),
    Tens(f64),
    Hundred,
    Scale(f64),
    Ordinal(f64),
}

fn word_piece(word: &str) -> Option<Piece> {
    if let Some(v) = unit_word(word) {
        return Some(Piece::Small(v));
    }
    if let Some(v) = tens_word(word) {
        return Some(Piece::Tens(v));
    }
    if word == "hundred" {
        return Some(Piece::Hundred);
    }
    if let Some(v) = magnitude_word(word) {
        return Some(Piece::Scale(v));
    }
    if let Some(v) = ordinal_word(word) {
        return Some(Piece::Ordinal(v));
    }
    // Hyphenated compounds: twenty-five, twenty-first.
    let (head, tail) = word.split_once('-')?;
    let tens = tens_word(head)?;
    if let Some(u) = unit_word(tail).filter(|&u| (1.0..10.0).contains(&u)) {
        return Some(Piece::Tens(tens + u));
    }
    ordinal_tail(tail).map(|u| Piece::Ordinal(tens + u))
}

/// Cardinal word sequence starting at token `i`; returns the last token
/// index and the value.
fn cardinal_run(tokens: &[RawToken], lower: &[String], i: usize) -> Option<(usize, f64)> {
    let word_at = |j: usize| -> Option<&str> {
        (j < tokens.len() && tokens[j].kind == RawTokenKind::Word).then(|| lower[j].as_str())
    };
    let first = word_at(i)?;

    // "a million", "an hundred"
    if first == "a" || first == "an" {
        let next = word_at(i + 1)?;
        magnitude_word(next)?;
        let (last, value) = cardinal_tail(&word_at, i + 1, 0.0, 1.0, f64::INFINITY)?;
        return Some((last, value));
    }

    match word_piece(first)? {
        Piece::Ordinal(v) => Some((i, v)),
        Piece::Small(v) | Piece::Tens(v) => {
            cardinal_tail(&word_at, i + 1, 0.0, v, f64::INFINITY).or(Some((i, v)))
        }
        Piece::Hundred | Piece::Scale(_) => None,
    }
}

/// Continues a cardinal phrase from token `j` given the running total, the
/// current group and the smallest scale consumed so far.
fn cardinal_tail<'a>(
    word_at: &dyn Fn(usize) -> Option<&'a str>,
    mut j: usize,
    mut total: f64,
    mut current: f64,
    mut last_scale: f64,
) -> Option<(usize, f64)> {
    let mut last = j.checked_sub(1)?;
    let mut after_hundred_or_scale = false;
    let mut has_units = current % 10.0 != 0.0 || (10.0..20.0).contains(&current) || current >= 100.0;
    let mut has_tens = (10.0..100.0).contains(&current);
    while let Some(w) = word_at(j) {
        if w == "and" && after_hundred_or_scale {
            match word_at(j + 1).and_then(word_piece) {
                Some(Piece::Small(_)) | Some(Piece::Tens(_)) => {
                    j += 1;
                    continue;
                }
                _ => break,
            }
        }
        let Some(piece) = word_piece(w) else { break };
        match piece {
            Piece::Small(v) => {
                if has_units || (has_tens && v >= 10.0) {
                    break;
                }
                current += v;
                has_units = true;
                has_tens |= v >= 10.0;
                after_hundred_or_scale = false;
            }
            Piece::Tens(v) => {
                if has_units || has_tens {
                    break;
                }
                current += v;
                has_tens = true;
                has_units = v % 10.0 != 0.0;
                after_hundred_or_scale = false;
            }
            Piece::Hundred => {
                if current >= 100.0 {
                    break;
                }
                current = current.max(1.0) * 100.0;
                has_units = false;
                has_tens = false;
                after_hundred_or_scale = true;
            }
            Piece::Scale(s) => {
                if s >= last_scale {
                    break;
                }
                total += current.max(1.0) * s;
                current = 0.0;
                last_scale = s;
                has_units = false;
                has_tens = false;
                after_hundred_or_scale = true;
            }
            Piece::Ordinal(_) => break,
        }
        last = j;
        j += 1;
    }
    Some((last, total + current))
}

/// Finds every quantity in the token stream, regardless of range.
pub(crate) fn scan_quantities(tokens: &[RawToken]) -> Vec<Quantity> {
    let lower: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let found = match tokens[i].kind {
            RawTokenKind::Numeral => numeral_value(&tokens[i].text).map(|(mut value, bare)| {
                let mut last = i;
                if bare {
                    // "32 million", "2 trillion", "1.5 bn"
                    while last + 1 < tokens.len() && tokens[last + 1].kind == RawTokenKind::Word {
                        let w = lower[last + 1].as_str();
                        let m = magnitude_word(w).or_else(|| {
                            matches!(w, "bn" | "tn").then(|| magnitude_suffix(w)).flatten()
                        });
                        match m {
                            Some(m) => {
                                value *= m;
                                last += 1;
                            }
                            None => break,
                        }
                    }
                }
                (last, value)
            }),
            RawTokenKind::Word => cardinal_run(tokens, &lower, i),
            _ => None,
        };
        match found {
            Some((last, value)) => {
                out.push(Quantity {
                    first: i,
                    last,
                    value,
                });
                i = last + 1;
            }
            None => i += 1,
        }
    }
    out
}

/// Extracts the numeric quantities of `text` whose value lies in `[1, 1e16]`.
///
/// Spans are non-overlapping and in left-to-right order. Signs are ignored.
pub fn extract_numbers(text: &str) -> Vec<NumberToken> {
    let tokens = tokenize(text);
    let chars: Vec<char> = text.chars().collect();
    scan_quantities(&tokens)
        .into_iter()
        .filter(|q| check_range(q.value).is_ok())
        .map(|q| {
            let range = tokens[q.first].start..tokens[q.last].end;
            NumberToken {
                surface: chars[range.clone()].iter().collect(),
                value: q.value,
                char_range: range,
            }
        })
        .collect()
}
