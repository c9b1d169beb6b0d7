use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtext::NormalizedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub instances: usize,
    pub tokens: usize,
    pub numbers: usize,
    pub mean_tokens: f64,
    pub percent_numbers: f64,
    pub quantiles: Quantiles,
}

/// Nearest-rank percentile of sorted data.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn compute_stats(sentences: &[NormalizedSentence]) -> Result<CorpusStats> {
    if sentences.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let tokens: usize = sentences.iter().map(|s| s.tokens.len()).sum();
    let mut values: Vec<f64> = sentences.iter().flat_map(|s| s.values()).collect();
    if values.is_empty() || tokens == 0 {
        return Err(Error::Empty("corpus numbers"));
    }
    values.sort_by(f64::total_cmp);
    Ok(CorpusStats {
        instances: sentences.len(),
        tokens,
        numbers: values.len(),
        mean_tokens: tokens as f64 / sentences.len() as f64,
        percent_numbers: 100.0 * values.len() as f64 / tokens as f64,
        quantiles: Quantiles {
            min: values[0],
            p50: nearest_rank(&values, 50.0),
            p75: nearest_rank(&values, 75.0),
            p90: nearest_rank(&values, 90.0),
            max: values[values.len() - 1],
        },
    })
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let q = &self.quantiles;
        let rows: [(&str, String); 10] = [
            ("instances", self.instances.to_string()),
            ("tokens", self.tokens.to_string()),
            ("numbers", self.numbers.to_string()),
            ("mean tokens", format!("{:.2}", self.mean_tokens)),
            ("%numbers", format!("{:.2}", self.percent_numbers)),
            ("min", format!("{}", q.min)),
            ("p50", format!("{}", q.p50)),
            ("p75", format!("{}", q.p75)),
            ("p90", format!("{}", q.p90)),
            ("max", format!("{}", q.max)),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            writeln!(out, "{k:<12}{v:>16}").unwrap();
        }
        out
    }
}
