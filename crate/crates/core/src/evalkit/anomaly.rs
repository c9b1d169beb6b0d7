use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numtext::{MAX_VALUE, MIN_VALUE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StringOp {
    Add,
    Del,
    Swap,
    /// String edits kept reproducing the input; a training value was used.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringAnomaly {
    pub value: f64,
    pub op: StringOp,
}

const MAX_STRING_TRIES: usize = 10;
const MAX_RANDOM_TRIES: usize = 100;

/// Edits that apply to a rendering with the given digits.
pub fn applicable_ops(digits: &[u8]) -> Vec<StringOp> {
    let mut ops = vec![StringOp::Add];
    if digits.len() >= 2 {
        ops.push(StringOp::Del);
        if digits[0] != digits[1] {
            ops.push(StringOp::Swap);
        }
    }
    ops
}

/// Applies `op` to the shortest decimal rendering of `y`. `pos` indexes
/// digit slots (the decimal point is skipped); `digit` is used by `Add`.
pub fn apply_string_op(y: f64, op: StringOp, pos: usize, digit: u8) -> Option<f64> {
    let mut s: Vec<u8> = format!("{y}").into_bytes();
    let digits: Vec<usize> = (0..s.len()).filter(|&i| s[i].is_ascii_digit()).collect();
    match op {
        StringOp::Add => {
            let at = digits.get(pos).copied().unwrap_or(s.len());
            s.insert(at, b'0' + digit);
        }
        StringOp::Del => {
            s.remove(*digits.get(pos)?);
        }
        StringOp::Swap => {
            if digits.len() < 2 {
                return None;
            }
            s.swap(digits[0], digits[1]);
        }
        StringOp::Fallback => return None,
    }
    std::str::from_utf8(&s).ok()?.parse::<f64>().ok()
}

/// A value obtained by one digit edit of `y` (insert, delete, or swap of
/// the first two digits), chosen uniformly among applicable edits.
///
/// After ten failed attempts a value is drawn from `pool` instead.
pub fn anomaly_string(y: f64, pool: &[f64], rng: &mut impl Rng) -> StringAnomaly {
    let rendered = format!("{y}");
    let digits: Vec<u8> = rendered.bytes().filter(u8::is_ascii_digit).collect();
    let ops = applicable_ops(&digits);
    for _ in 0..MAX_STRING_TRIES {
        let op = ops[rng.random_range(0..ops.len())];
        let candidate = match op {
            StringOp::Add => {
                let pos = rng.random_range(0..=digits.len());
                let d = rng.random_range(0..10u8);
                apply_string_op(y, op, pos, d)
            }
            StringOp::Del => apply_string_op(y, op, rng.random_range(0..digits.len()), 0),
            _ => apply_string_op(y, op, 0, 0),
        };
        if let Some(v) = candidate {
            if v != y && (MIN_VALUE..=MAX_VALUE).contains(&v) {
                return StringAnomaly { value: v, op };
            }
        }
    }
    StringAnomaly {
        value: anomaly_random(pool, y, rng),
        op: StringOp::Fallback,
    }
}

/// A training value different from `y`; after 100 equal draws (or with an
/// empty pool) `y` is moved by one decade instead.
pub fn anomaly_random(pool: &[f64], y: f64, rng: &mut impl Rng) -> f64 {
    if !pool.is_empty() {
        for _ in 0..MAX_RANDOM_TRIES {
            let v = pool[rng.random_range(0..pool.len())];
            if v != y {
                return v;
            }
        }
    }
    if y * 10.0 <= MAX_VALUE {
        y * 10.0
    } else {
        y / 10.0
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn hand_applied_edits() {
        assert_eq!(apply_string_op(2016.0, StringOp::Swap, 0, 0), Some(216.0));
        assert_eq!(apply_string_op(2016.0, StringOp::Del, 0, 0), Some(16.0));
        assert_eq!(apply_string_op(2016.0, StringOp::Add, 4, 7), Some(20167.0));
        assert_eq!(apply_string_op(2.5, StringOp::Add, 1, 1), Some(2.15));
        assert_eq!(apply_string_op(2.5, StringOp::Del, 1, 0), Some(2.0));
    }

    #[test]
    fn single_digit_only_adds() {
        assert_eq!(applicable_ops(b"5"), vec![StringOp::Add]);
        assert_eq!(applicable_ops(b"11"), vec![StringOp::Add, StringOp::Del]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let a = anomaly_string(5.0, &[], &mut rng);
            assert_eq!(a.op, StringOp::Add);
            assert_ne!(a.value, 5.0);
        }
    }

    #[test]
    fn random_fallbacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(anomaly_random(&[7.0], 3.0, &mut rng), 7.0);
        assert_eq!(anomaly_random(&[3.0], 3.0, &mut rng), 30.0);
        assert_eq!(anomaly_random(&[], 1e16, &mut rng), 1e15);
    }
}
