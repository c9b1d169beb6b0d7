//! English number-word tables.

pub(crate) fn unit_word(word: &str) -> Option<f64> {
    let v = match word {
        "zero" => 0,
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "thirteen" => 13,
        "fourteen" => 14,
        "fifteen" => 15,
        "sixteen" => 16,
        "seventeen" => 17,
        "eighteen" => 18,
        "nineteen" => 19,
        _ => return None,
    };
    Some(v as f64)
}

pub(crate) fn tens_word(word: &str) -> Option<f64> {
    let v = match word {
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "fifty" => 50,
        "sixty" => 60,
        "seventy" => 70,
        "eighty" => 80,
        "ninety" => 90,
        _ => return None,
    };
    Some(v as f64)
}

/// `hundred` and the scale words.
pub(crate) fn magnitude_word(word: &str) -> Option<f64> {
    let v = match word {
        "hundred" => 1e2,
        "thousand" => 1e3,
        "million" => 1e6,
        "billion" => 1e9,
        "trillion" => 1e12,
        _ => return None,
    };
    Some(v)
}

/// Abbreviated magnitudes attached to a numeral, as in `32m` or `5bn`.
pub(crate) fn magnitude_suffix(suffix: &str) -> Option<f64> {
    let v = match suffix {
        "k" => 1e3,
        "m" => 1e6,
        "bn" | "b" => 1e9,
        "tn" | "t" => 1e12,
        _ => return None,
    };
    Some(v)
}

/// Ordinal words. "second" is left out because it is far more often a unit
/// of time than an ordinal.
pub(crate) fn ordinal_word(word: &str) -> Option<f64> {
    let v = match word {
        "first" => 1,
        "third" => 3,
        "fourth" => 4,
        "fifth" => 5,
        "sixth" => 6,
        "seventh" => 7,
        "eighth" => 8,
        "ninth" => 9,
        "tenth" => 10,
        "eleventh" => 11,
        "twelfth" => 12,
        "thirteenth" => 13,
        "fourteenth" => 14,
        "fifteenth" => 15,
        "sixteenth" => 16,
        "seventeenth" => 17,
        "eighteenth" => 18,
        "nineteenth" => 19,
        "twentieth" => 20,
        "thirtieth" => 30,
        "fortieth" => 40,
        "fiftieth" => 50,
        "sixtieth" => 60,
        "seventieth" => 70,
        "eightieth" => 80,
        "ninetieth" => 90,
        "hundredth" => 100,
        "thousandth" => 1000,
        _ => return None,
    };
    Some(v as f64)
}

/// Ordinal used as the tail of a hyphenated compound (`twenty-second`), where
/// "second" is unambiguous.
pub(crate) fn ordinal_tail(word: &str) -> Option<f64> {
    if word == "second" {
        Some(2.0)
    } else {
        ordinal_word(word).filter(|&v| v < 10.0)
    }
}

pub(crate) fn is_currency(c: char) -> bool {
    matches!(c, '$' | '€' | '£' | '¥')
}

/// Lowercased abbreviations whose trailing period does not end a sentence.
pub(crate) const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "inc", "corp", "co", "ltd", "llc", "plc",
    "vs", "etc", "e.g", "i.e", "u.s", "u.k", "u.n", "no", "fig", "al", "approx", "est", "dept",
    "gov", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "mt", "ft", "vol", "rev", "gen", "sen", "rep",
];
