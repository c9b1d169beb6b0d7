use rand::Rng;

use crate::diffmath::{Array, ParamGroup, ParamId, ParamStore, Tape, Var};
use crate::error::Result;
use crate::nn::Linear;

#[derive(Debug, Clone, Copy)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

impl Norm {
    fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), Array::full(1, dim, 1.0), ParamGroup::Body),
            bias: store.add(format!("{name}.bias"), Array::zeros(1, dim), ParamGroup::Body),
        }
    }

    fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (g, b) = (tape.param(self.gain), tape.param(self.bias));
        tape.layer_norm(x, g, b, 1e-5)
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    qkv: Linear,
    out: Linear,
    norm1: Norm,
    ff1: Linear,
    ff2: Linear,
    norm2: Norm,
}

/// Post-norm self-attention encoder with full bidirectional attention.
#[derive(Debug, Clone)]
pub struct Transformer {
    blocks: Vec<Block>,
    heads: usize,
    dim: usize,
    keep: f64,
}

impl Transformer {
    pub fn new(
        store: &mut ParamStore,
        dim: usize,
        heads: usize,
        ff: usize,
        layers: usize,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let g = ParamGroup::Body;
        let blocks = (0..layers)
            .map(|l| {
                let p = format!("transformer.{l}");
                Block {
                    qkv: Linear::new(store, &format!("{p}.qkv"), dim, 3 * dim, g, rng),
                    out: Linear::new(store, &format!("{p}.attn_out"), dim, dim, g, rng),
                    norm1: Norm::new(store, &format!("{p}.norm1"), dim),
                    ff1: Linear::new(store, &format!("{p}.ff1"), dim, ff, g, rng),
                    ff2: Linear::new(store, &format!("{p}.ff2"), ff, dim, g, rng),
                    norm2: Norm::new(store, &format!("{p}.norm2"), dim),
                }
            })
            .collect();
        Self {
            blocks,
            heads,
            dim,
            keep: 1.0 - dropout,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.dim
    }

    fn attention(&self, tape: &mut Tape, block: &Block, x: Var) -> Result<Var> {
        let d = self.dim;
        let dh = d / self.heads;
        let qkv = block.qkv.forward(tape, x)?;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut outs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let q = tape.slice_cols(qkv, h * dh, (h + 1) * dh)?;
            let k = tape.slice_cols(qkv, d + h * dh, d + (h + 1) * dh)?;
            let v = tape.slice_cols(qkv, 2 * d + h * dh, 2 * d + (h + 1) * dh)?;
            let kt = tape.transpose(k);
            let s = tape.matmul(q, kt)?;
            let s = tape.scale(s, scale);
            let a = tape.softmax(s);
            let a = tape.dropout(a, self.keep);
            outs.push(tape.matmul(a, v)?);
        }
        let cat = tape.concat_cols(&outs)?;
        block.out.forward(tape, cat)
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let mut h = x;
        for block in &self.blocks {
            let a = self.attention(tape, block, h)?;
            let a = tape.dropout(a, self.keep);
            let r = tape.add(h, a)?;
            h = block.norm1.forward(tape, r)?;
            let f = block.ff1.forward(tape, h)?;
            let f = tape.gelu(f);
            let f = block.ff2.forward(tape, f)?;
            let f = tape.dropout(f, self.keep);
            let r = tape.add(h, f)?;
            h = block.norm2.forward(tape, r)?;
        }
        Ok(h)
    }
}
