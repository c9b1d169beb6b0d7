use rand::Rng;

use crate::diffmath::{ParamGroup, ParamStore, Tape, Var};
use crate::error::Result;
use crate::nn::GruCell;

/// Stacked bidirectional GRU; each layer concatenates forward and backward
/// states.
#[derive(Debug, Clone)]
pub struct BiGru {
    layers: Vec<(GruCell, GruCell)>,
    keep: f64,
    hidden: usize,
}

impl BiGru {
    pub fn new(
        store: &mut ParamStore,
        input: usize,
        hidden: usize,
        layers: usize,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut out = Vec::with_capacity(layers);
        let mut dim = input;
        for l in 0..layers {
            let f = GruCell::new(store, &format!("bigru.{l}.fwd"), dim, hidden, ParamGroup::Body, rng);
            let b = GruCell::new(store, &format!("bigru.{l}.bwd"), dim, hidden, ParamGroup::Body, rng);
            out.push((f, b));
            dim = 2 * hidden;
        }
        Self {
            layers: out,
            keep: 1.0 - dropout,
            hidden,
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let mut h = x;
        for (fwd, bwd) in &self.layers {
            let fs = fwd.run(tape, h, false)?;
            let mut bs = bwd.run(tape, h, true)?;
            bs.reverse();
            let f = tape.concat_rows(&fs)?;
            let b = tape.concat_rows(&bs)?;
            let cat = tape.concat_cols(&[f, b])?;
            h = tape.dropout(cat, self.keep);
        }
        Ok(h)
    }
}
