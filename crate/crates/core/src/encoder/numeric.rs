use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffmath::{ParamGroup, ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::heads::EXPONENTS;
use crate::nn::{GruCell, Linear};
use crate::numtext::{check_range, decade, to_scientific_string};

/// How a number's value enters the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericKind {
    /// Learned vector per base-10 exponent.
    #[default]
    Exponent,
    /// Character GRU over the scientific-notation string.
    DigitRnn,
    /// Sum of both.
    Both,
    /// No value information.
    None,
}

const ALPHABET: &[u8] = b"0123456789.E+";
const CHAR_DIM: usize = 16;
const DIGIT_HIDDEN: usize = 32;

#[derive(Debug, Clone, Copy)]
struct DigitRnn {
    chars: ParamId,
    gru: GruCell,
    proj: Linear,
}

/// Maps values in `[1, 1e16]` to `1 × dim` vectors.
#[derive(Debug, Clone, Copy)]
pub struct NumericEmbedder {
    kind: NumericKind,
    dim: usize,
    exponent: Option<ParamId>,
    digits: Option<DigitRnn>,
}

/// Table row for a value: `floor(log10 value)`.
pub fn exponent_row(value: f64) -> Result<usize> {
    check_range(value)?;
    Ok(decade(value) as usize)
}

fn char_ids(value: f64) -> Result<Vec<usize>> {
    to_scientific_string(value)?
        .bytes()
        .map(|b| {
            ALPHABET
                .iter()
                .position(|&a| a == b)
                .ok_or_else(|| Error::Numerical(format!("unexpected character {:?}", b as char)))
        })
        .collect()
}

impl NumericEmbedder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        kind: NumericKind,
        dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let group = ParamGroup::Embedding;
        let exponent = matches!(kind, NumericKind::Exponent | NumericKind::Both)
            .then(|| store.add_normal(format!("{name}.exponent"), EXPONENTS, dim, 0.1, group, rng));
        let digits = matches!(kind, NumericKind::DigitRnn | NumericKind::Both).then(|| DigitRnn {
            chars: store.add_normal(format!("{name}.chars"), ALPHABET.len(), CHAR_DIM, 0.1, group, rng),
            gru: GruCell::new(store, &format!("{name}.digit_gru"), CHAR_DIM, DIGIT_HIDDEN, group, rng),
            proj: Linear::new(store, &format!("{name}.digit_proj"), DIGIT_HIDDEN, dim, group, rng),
        });
        Self {
            kind,
            dim,
            exponent,
            digits,
        }
    }

    pub fn kind(&self) -> NumericKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exponent table parameter, if this embedder has one.
    pub fn exponent_table(&self) -> Option<ParamId> {
        self.exponent
    }

    fn digit_embed(&self, tape: &mut Tape, rnn: &DigitRnn, value: f64) -> Result<Var> {
        let ids = char_ids(value)?;
        let xs = tape.gather_param(rnn.chars, &ids)?;
        let states = rnn.gru.run(tape, xs, false)?;
        let last = *states.last().expect("formatted value is never empty");
        rnn.proj.forward(tape, last)
    }

    /// Embeddings of `values`, one row each (`n × dim`). `NONE` gives zeros.
    pub fn embed(&self, tape: &mut Tape, values: &[f64]) -> Result<Var> {
        for &v in values {
            check_range(v)?;
        }
        let mut out: Option<Var> = None;
        if let Some(table) = self.exponent {
            let rows = values.iter().map(|&v| exponent_row(v)).collect::<Result<Vec<_>>>()?;
            out = Some(tape.gather_param(table, &rows)?);
        }
        if let Some(rnn) = &self.digits {
            let rows = values
                .iter()
                .map(|&v| self.digit_embed(tape, rnn, v))
                .collect::<Result<Vec<_>>>()?;
            let d = tape.concat_rows(&rows)?;
            out = Some(match out {
                Some(e) => tape.add(e, d)?,
                None => d,
            });
        }
        Ok(match out {
            Some(v) => v,
            None => tape.constant(crate::diffmath::Array::zeros(values.len(), self.dim)),
        })
    }
}
