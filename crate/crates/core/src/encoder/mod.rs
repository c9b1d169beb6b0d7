//! Contextual encoders over embedded sentences.

mod bigru;
mod embed;
mod numeric;
mod transformer;
mod vocab;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use bigru::BiGru;
pub use embed::{InputEmbedder, MAX_POSITIONS};
pub use numeric::{exponent_row, NumericEmbedder, NumericKind};
pub use transformer::Transformer;
pub use vocab::{Vocab, UNK_TOKEN};

use crate::diffmath::{ParamStore, Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    Bigru,
    Transformer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiGruConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
}

impl Default for BiGruConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden: 64,
            layers: 1,
            dropout: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformerConfig {
    pub layers: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub dropout: f64,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            heads: 4,
            model_dim: 128,
            ff_dim: 512,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub bigru: BiGruConfig,
    pub transformer: TransformerConfig,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let (dims, dropout) = match self.kind {
            EncoderKind::Bigru => {
                let c = &self.bigru;
                (vec![c.embed_dim, c.hidden, c.layers], c.dropout)
            }
            EncoderKind::Transformer => {
                let c = &self.transformer;
                if c.heads > 0 && c.model_dim % c.heads != 0 {
                    return Err(Error::Config(format!(
                        "model dim {} is not divisible by {} heads",
                        c.model_dim, c.heads
                    )));
                }
                (vec![c.layers, c.heads, c.model_dim, c.ff_dim], c.dropout)
            }
        };
        if dims.contains(&0) {
            return Err(Error::Config("encoder dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!("dropout {dropout} outside [0, 1)")));
        }
        Ok(())
    }

    /// Width of the input embeddings.
    pub fn embed_dim(&self) -> usize {
        match self.kind {
            EncoderKind::Bigru => self.bigru.embed_dim,
            EncoderKind::Transformer => self.transformer.model_dim,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Encoder {
    BiGru(BiGru),
    Transformer(Transformer),
}

impl Encoder {
    pub fn new(store: &mut ParamStore, cfg: &EncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.kind {
            EncoderKind::Bigru => {
                let c = &cfg.bigru;
                Encoder::BiGru(BiGru::new(store, c.embed_dim, c.hidden, c.layers, c.dropout, rng))
            }
            EncoderKind::Transformer => {
                let c = &cfg.transformer;
                Encoder::Transformer(Transformer::new(
                    store,
                    c.model_dim,
                    c.heads,
                    c.ff_dim,
                    c.layers,
                    c.dropout,
                    rng,
                ))
            }
        })
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Encoder::BiGru(e) => e.output_dim(),
            Encoder::Transformer(e) => e.output_dim(),
        }
    }

    /// Per-position hidden vectors for an embedded `tokens × dim` input.
    /// Dropout follows the tape's mode.
    pub fn encode(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Encoder::BiGru(e) => e.forward(tape, x),
            Encoder::Transformer(e) => e.forward(tape, x),
        }
    }
}

/// Row `k` of the encoding.
pub fn target_state(tape: &mut Tape, h: Var, k: usize) -> Result<Var> {
    let n = tape.value(h).rows();
    if k >= n {
        return Err(Error::Index { index: k, len: n });
    }
    tape.row(h, k)
}
