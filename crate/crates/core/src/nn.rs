//! Small parameterized layers shared by encoders and heads.

use rand::Rng;

use crate::diffmath::{Array, ParamGroup, ParamId, ParamStore, Tape, Var};
use crate::error::Result;

/// `y = x · W + b`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        group: ParamGroup,
        rng: &mut impl Rng,
    ) -> Self {
        let weight = store.add_glorot(format!("{name}.weight"), input, output, group, rng);
        let bias = store.add(format!("{name}.bias"), Array::zeros(1, output), group);
        Self {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        tape.affine(x, w, b)
    }

    /// Sets every bias entry to `value`.
    pub fn fill_bias(&self, store: &mut ParamStore, value: f64) {
        store.get_mut(self.bias).data_mut().fill(value);
    }
}

/// Gated recurrent unit cell with fused gate matrices (reset, update, new).
#[derive(Debug, Clone, Copy)]
pub struct GruCell {
    pub input_weight: ParamId,
    pub input_bias: ParamId,
    pub hidden_weight: ParamId,
    pub hidden_bias: ParamId,
    pub hidden: usize,
}

impl GruCell {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        group: ParamGroup,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            input_weight: store.add_glorot(format!("{name}.w_ih"), input, 3 * hidden, group, rng),
            input_bias: store.add(format!("{name}.b_ih"), Array::zeros(1, 3 * hidden), group),
            hidden_weight: store.add_glorot(format!("{name}.w_hh"), hidden, 3 * hidden, group, rng),
            hidden_bias: store.add(format!("{name}.b_hh"), Array::zeros(1, 3 * hidden), group),
            hidden,
        }
    }

    /// Projects a whole `n × input` sequence through the input gates at once.
    pub fn project_inputs(&self, tape: &mut Tape, xs: Var) -> Result<Var> {
        let (w, b) = (tape.param(self.input_weight), tape.param(self.input_bias));
        tape.affine(xs, w, b)
    }

    /// One step given the projected input row `gx` (`1 × 3h`) and state `h`.
    pub fn step(&self, tape: &mut Tape, gx: Var, h: Var) -> Result<Var> {
        let n = self.hidden;
        let (w, b) = (tape.param(self.hidden_weight), tape.param(self.hidden_bias));
        let gh = tape.affine(h, w, b)?;
        let xr = tape.slice_cols(gx, 0, n)?;
        let xz = tape.slice_cols(gx, n, 2 * n)?;
        let xn = tape.slice_cols(gx, 2 * n, 3 * n)?;
        let hr = tape.slice_cols(gh, 0, n)?;
        let hz = tape.slice_cols(gh, n, 2 * n)?;
        let hn = tape.slice_cols(gh, 2 * n, 3 * n)?;
        let r = tape.add(xr, hr)?;
        let r = tape.sigmoid(r);
        let z = tape.add(xz, hz)?;
        let z = tape.sigmoid(z);
        let rh = tape.mul(r, hn)?;
        let cand = tape.add(xn, rh)?;
        let cand = tape.tanh(cand);
        // h' = n + z ⊙ (h − n)
        let diff = tape.sub(h, cand)?;
        let zd = tape.mul(z, diff)?;
        tape.add(cand, zd)
    }

    /// Runs over the rows of `xs` in the given order from a zero state and
    /// returns the state after each row, in visiting order.
    pub fn run(&self, tape: &mut Tape, xs: Var, reverse: bool) -> Result<Vec<Var>> {
        let n = tape.value(xs).rows();
        let gx = self.project_inputs(tape, xs)?;
        let mut h = tape.constant(Array::zeros(1, self.hidden));
        let mut states = Vec::with_capacity(n);
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for i in order {
            let row = tape.row(gx, i)?;
            h = self.step(tape, row, h)?;
            states.push(h);
        }
        Ok(states)
    }
}
