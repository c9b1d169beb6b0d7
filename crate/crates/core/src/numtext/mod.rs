//! Numeric quantity extraction and text normalization.
//!
//! Raw text is split into sentences, lowercased and tokenized. Every numeric
//! quantity (numerals, cardinal words, numeral + magnitude compounds and
//! ordinals) is collapsed into a single [`MASK_TOKEN`] and its value is carried
//! side-band in [`NormalizedSentence::numbers`].
//!
//! The rule table is a reconstruction of a heuristic extractor; it covers
//! English cardinals, ordinals, magnitude words and the `k/m/bn/b/tn/t`
//! suffixes attached to numerals.

mod extract;
mod normalize;
mod words;

pub use extract::{extract_numbers, tokenize, RawToken, RawTokenKind};
pub use normalize::{normalize_document, split_sentences, FilterConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbol that replaces every numeric surface form in the token stream.
pub const MASK_TOKEN: &str = "[#MASK]";

/// Smallest value a normalized number may take.
pub const MIN_VALUE: f64 = 1.0;
/// Largest value a normalized number may take.
pub const MAX_VALUE: f64 = 1e16;

/// Exact powers of ten `10^0 ..= 10^22`; all are representable in an f64.
const POW10: [f64; 23] = [
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16,
    1e17, 1e18, 1e19, 1e20, 1e21, 1e22,
];

/// `10^k` for `0 <= k <= 22`, exact.
pub fn pow10(k: i32) -> f64 {
    if (0..POW10.len() as i32).contains(&k) {
        POW10[k as usize]
    } else {
        10f64.powi(k)
    }
}

/// A numeric quantity found in raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberToken {
    pub surface: String,
    pub value: f64,
    /// Half-open character offsets into the source text.
    pub char_range: std::ops::Range<usize>,
}

/// A lowercased token stream with numbers replaced by [`MASK_TOKEN`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSentence {
    pub tokens: Vec<String>,
    /// `(token_index, value)` pairs in left-to-right order.
    pub numbers: Vec<(usize, f64)>,
    /// Source document, used to split at document granularity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<u64>,
}

impl NormalizedSentence {
    pub fn new(tokens: Vec<String>, numbers: Vec<(usize, f64)>) -> Self {
        Self {
            tokens,
            numbers,
            doc: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.numbers.iter().map(|&(_, v)| v)
    }

    /// Whether the number at `slot` (index into `numbers`) is directly
    /// preceded by a `$` token.
    pub fn is_dollar(&self, slot: usize) -> bool {
        let (idx, _) = self.numbers[slot];
        idx > 0 && self.tokens[idx - 1] == "$"
    }

    /// Checks the structural invariants of a sentence read from disk.
    pub fn validate(&self, max_tokens: usize) -> Result<()> {
        if self.numbers.is_empty() {
            return Err(Error::Config("sentence has no numbers".into()));
        }
        if self.tokens.len() > max_tokens {
            return Err(Error::Config(format!(
                "sentence has {} tokens, limit is {max_tokens}",
                self.tokens.len()
            )));
        }
        for &(idx, value) in &self.numbers {
            if idx >= self.tokens.len() {
                return Err(Error::Index {
                    index: idx,
                    len: self.tokens.len(),
                });
            }
            check_range(value)?;
        }
        Ok(())
    }
}

/// `value = mantissa * 10^exponent` with `mantissa` in `[0.1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentMantissa {
    /// In `1..=17` for values in `[1, 1e16]`.
    pub exponent: i32,
    pub mantissa: f64,
}

impl ExponentMantissa {
    pub fn value(&self) -> f64 {
        self.mantissa * pow10(self.exponent)
    }
}

pub fn check_range(value: f64) -> Result<()> {
    if (MIN_VALUE..=MAX_VALUE).contains(&value) {
        Ok(())
    } else {
        Err(Error::Range(value))
    }
}

/// `floor(log10(value))` for positive values, robust at exact powers of ten.
pub fn decade(value: f64) -> i32 {
    let mut d = value.log10().floor() as i32;
    if pow10(d + 1) <= value {
        d += 1;
    } else if pow10(d) > value {
        d -= 1;
    }
    d
}

/// Splits a value into exponent and mantissa with `e = floor(log10 v) + 1`.
pub fn decompose(value: f64) -> Result<ExponentMantissa> {
    check_range(value)?;
    let exponent = decade(value) + 1;
    let mut mantissa = value / pow10(exponent);
    if mantissa >= 1.0 {
        mantissa = 1.0 - f64::EPSILON / 2.0;
    }
    Ok(ExponentMantissa { exponent, mantissa })
}

/// Renders `value` as `d.dddddE+dd` (six significant digits, ties to even).
pub fn to_scientific_string(value: f64) -> Result<String> {
    check_range(value)?;
    // `{:e}` rounds the exact binary value half-to-even.
    let s = format!("{value:.5e}");
    let (mantissa, exp) = s
        .split_once('e')
        .ok_or_else(|| Error::Numerical(format!("unexpected float rendering {s}")))?;
    let exp: i32 = exp
        .parse()
        .map_err(|_| Error::Numerical(format!("unexpected float rendering {s}")))?;
    Ok(format!("{mantissa}E+{exp:02}"))
}
