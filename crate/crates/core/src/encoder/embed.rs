use rand::Rng;

use super::{NumericEmbedder, NumericKind, Vocab};
use crate::corpus::MaskPlan;
use crate::diffmath::{Array, ParamGroup, ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::numtext::NormalizedSentence;

pub const MAX_POSITIONS: usize = 128;

/// Token + position + numeric embeddings, summed.
#[derive(Debug, Clone, Copy)]
pub struct InputEmbedder {
    pub token: ParamId,
    pub position: ParamId,
    pub numeric: NumericEmbedder,
    dim: usize,
}

impl InputEmbedder {
    pub fn new(
        store: &mut ParamStore,
        vocab_size: usize,
        dim: usize,
        numeric: NumericKind,
        rng: &mut impl Rng,
    ) -> Self {
        let group = ParamGroup::Embedding;
        Self {
            token: store.add_normal("embed.token", vocab_size, dim, 0.1, group, rng),
            position: store.add_normal("embed.position", MAX_POSITIONS, dim, 0.1, group, rng),
            numeric: NumericEmbedder::new(store, "embed.numeric", numeric, dim, rng),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `tokens × dim` input. Number positions carry the numeric embedding of
    /// whatever value the plan leaves visible; all other rows get zero there.
    pub fn embed(
        &self,
        tape: &mut Tape,
        vocab: &Vocab,
        sentence: &NormalizedSentence,
        plan: &MaskPlan,
    ) -> Result<Var> {
        let n = sentence.tokens.len();
        if n == 0 {
            return Err(Error::Empty("sentence"));
        }
        if n > MAX_POSITIONS {
            return Err(Error::Config(format!(
                "sentence has {n} tokens, the limit is {MAX_POSITIONS}"
            )));
        }
        if plan.roles.len() != sentence.numbers.len() {
            return Err(Error::Config(format!(
                "mask plan has {} roles for {} numbers",
                plan.roles.len(),
                sentence.numbers.len()
            )));
        }
        let ids = vocab.ids(sentence);
        let tok = tape.gather_param(self.token, &ids)?;
        let positions: Vec<usize> = (0..n).collect();
        let pos = tape.gather_param(self.position, &positions)?;
        let mut x = tape.add(tok, pos)?;

        let mut rows = Vec::new();
        let mut values = Vec::new();
        for (&(idx, value), role) in sentence.numbers.iter().zip(&plan.roles) {
            if idx >= n {
                return Err(Error::Index { index: idx, len: n });
            }
            if let Some(v) = role.visible_value(value) {
                rows.push(idx);
                values.push(v);
            }
        }
        if !values.is_empty() && self.numeric.kind() != NumericKind::None {
            let e = self.numeric.embed(tape, &values)?;
            // Place row j of `e` at token `rows[j]` with a one-hot matrix.
            let mut place = Array::zeros(n, values.len());
            for (j, &r) in rows.iter().enumerate() {
                place.data_mut()[r * values.len() + j] = 1.0;
            }
            let place = tape.constant(place);
            let num = tape.matmul(place, e)?;
            x = tape.add(x, num)?;
        }
        Ok(x)
    }
}
