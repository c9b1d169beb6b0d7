//! Tape-based reverse-mode differentiation over [`Array`] values.
//!
//! Every operation appends a node holding its forward value; [`Tape::backward`]
//! walks the nodes in reverse order once and accumulates parameter gradients
//! into a [`Gradients`] buffer. Parameters are read from a borrowed
//! [`ParamStore`], so one store can feed several tapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::array::{gemm_nt, gemm_tn};
use super::{Array, Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    Softplus(Var),
    Abs(Var),
    Square(Var),
    Gelu(Var),
    NormalCdf(Var),
    Softmax(Var),
    LogSoftmax(Var),
    LogSumExp(Var),
    Gather(Var, Vec<usize>),
    GatherParam(ParamId, Vec<usize>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Transpose(Var),
    Dropout(Var, Vec<f64>),
    Sum(Var),
    Element(Var, usize, usize),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Array,
        inv_std: Vec<f64>,
    },
}

struct Node {
    value: Array,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
    mode: Mode,
    rng: ChaCha8Rng,
}

fn shape_err(op: &'static str, a: &Array, b: &Array) -> Error {
    Error::Shape {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn softmax_rows(x: &Array) -> Array {
    let mut out = x.clone();
    for r in 0..x.rows() {
        let row = out.row_slice_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

fn logsumexp_row(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore, mode: Mode, seed: u64) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.0].value
    }

    /// The single entry of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    fn push(&mut self, value: Array, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Array) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn constant_scalar(&mut self, x: f64) -> Var {
        self.constant(Array::scalar(x))
    }

    /// Node for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let v = self.push(self.params.get(id).clone(), Op::Param(id));
        self.param_vars[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn zip_same(&self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Array> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err(op, x, y));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Array::from_vec(x.rows(), x.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same("div", a, b, |x, y| x / y)?;
        Ok(self.push(out, Op::Div(a, b)))
    }

    /// Adds the `1 × n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if y.rows() != 1 || y.cols() != x.cols() {
            return Err(shape_err("add_row", x, y));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &bv) in out.row_slice_mut(r).iter_mut().zip(y.data()) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddRow(a, b)))
    }

    /// `x · w + b` for a `1 × n` bias row.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x * s);
        self.push(out, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x + s);
        self.push(out, Op::AddScalar(a))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out = self.value(a).map(f);
        self.push(out, op)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Log(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, softplus, Op::Softplus(a))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, f64::abs, Op::Abs(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        self.unary(a, gelu, Op::Gelu(a))
    }

    /// Standard normal CDF, elementwise.
    pub fn normal_cdf(&mut self, a: Var) -> Var {
        self.unary(a, normal_cdf, Op::NormalCdf(a))
    }

    /// `lo + (hi - lo) * sigmoid(a)`.
    pub fn scaled_sigmoid(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let s = self.sigmoid(a);
        let s = self.scale(s, hi - lo);
        self.add_scalar(s, lo)
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax_rows(self.value(a));
        self.push(out, Op::Softmax(a))
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        for r in 0..x.rows() {
            let lse = logsumexp_row(x.row_slice(r));
            for v in out.row_slice_mut(r) {
                *v -= lse;
            }
        }
        self.push(out, Op::LogSoftmax(a))
    }

    /// Row-wise log-sum-exp, giving a `rows × 1` column.
    pub fn logsumexp(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = (0..x.rows()).map(|r| logsumexp_row(x.row_slice(r))).collect();
        let out = Array::from_vec(x.rows(), 1, data).unwrap();
        self.push(out, Op::LogSumExp(a))
    }

    /// Rows `idx` of `table`, stacked.
    pub fn gather(&mut self, table: Var, idx: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let mut out = Array::zeros(idx.len(), t.cols());
        for (r, &i) in idx.iter().enumerate() {
            if i >= t.rows() {
                return Err(Error::Index {
                    index: i,
                    len: t.rows(),
                });
            }
            out.row_slice_mut(r).copy_from_slice(t.row_slice(i));
        }
        Ok(self.push(out, Op::Gather(table, idx.to_vec())))
    }

    /// Rows `idx` of a stored parameter, read without copying the whole
    /// table onto the tape.
    pub fn gather_param(&mut self, id: ParamId, idx: &[usize]) -> Result<Var> {
        let t = self.params.get(id);
        let mut out = Array::zeros(idx.len(), t.cols());
        for (r, &i) in idx.iter().enumerate() {
            if i >= t.rows() {
                return Err(Error::Index {
                    index: i,
                    len: t.rows(),
                });
            }
            out.row_slice_mut(r).copy_from_slice(t.row_slice(i));
        }
        Ok(self.push(out, Op::GatherParam(id, idx.to_vec())))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(shape_err("concat_cols", self.value(parts[0]), v));
            }
            cols += v.cols();
        }
        let mut out = Array::zeros(rows, cols);
        for r in 0..rows {
            let mut c0 = 0;
            for &p in parts {
                let v = self.value(p);
                out.row_slice_mut(r)[c0..c0 + v.cols()].copy_from_slice(v.row_slice(r));
                c0 += v.cols();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(shape_err("concat_rows", self.value(parts[0]), v));
            }
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        let out = Array::from_vec(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Columns `c0..c1`.
    pub fn slice_cols(&mut self, a: Var, c0: usize, c1: usize) -> Result<Var> {
        let x = self.value(a);
        if c0 > c1 || c1 > x.cols() {
            return Err(Error::Index {
                index: c1,
                len: x.cols(),
            });
        }
        let mut out = Array::zeros(x.rows(), c1 - c0);
        for r in 0..x.rows() {
            out.row_slice_mut(r).copy_from_slice(&x.row_slice(r)[c0..c1]);
        }
        Ok(self.push(out, Op::SliceCols(a, c0)))
    }

    /// Rows `r0..r1`.
    pub fn slice_rows(&mut self, a: Var, r0: usize, r1: usize) -> Result<Var> {
        let x = self.value(a);
        if r0 > r1 || r1 > x.rows() {
            return Err(Error::Index {
                index: r1,
                len: x.rows(),
            });
        }
        let data = x.data()[r0 * x.cols()..r1 * x.cols()].to_vec();
        let out = Array::from_vec(r1 - r0, x.cols(), data)?;
        Ok(self.push(out, Op::SliceRows(a, r0)))
    }

    pub fn row(&mut self, a: Var, r: usize) -> Result<Var> {
        self.slice_rows(a, r, r + 1)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    /// Inverted dropout with the given keep probability; identity in eval mode.
    pub fn dropout(&mut self, a: Var, keep: f64) -> Var {
        if self.mode == Mode::Eval || keep >= 1.0 {
            return a;
        }
        let n = self.value(a).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| {
                if self.rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let x = self.value(a);
        let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let out = Array::from_vec(x.rows(), x.cols(), data).unwrap();
        self.push(out, Op::Dropout(a, mask))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Array::scalar(s), Op::Sum(a))
    }

    /// Entry `(r, c)` as a `1 × 1` node.
    pub fn element(&mut self, a: Var, r: usize, c: usize) -> Result<Var> {
        let x = self.value(a);
        if r >= x.rows() || c >= x.cols() {
            return Err(Error::Index {
                index: r * x.cols() + c,
                len: x.len(),
            });
        }
        let v = x.get(r, c);
        Ok(self.push(Array::scalar(v), Op::Element(a, r, c)))
    }

    /// Row-wise layer normalization with learned `1 × n` gain and bias.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let xv = self.value(x);
        let (g, b) = (self.value(gamma), self.value(beta));
        if g.shape() != [1, xv.cols()] || b.shape() != [1, xv.cols()] {
            return Err(shape_err("layer_norm", xv, g));
        }
        let n = xv.cols() as f64;
        let mut xhat = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.rows());
        let mut out = Array::zeros(xv.rows(), xv.cols());
        for r in 0..xv.rows() {
            let row = xhat.row_slice_mut(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let is = 1.0 / (var + eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * is;
            }
            inv_std.push(is);
            let orow = out.row_slice_mut(r);
            for c in 0..orow.len() {
                orow[c] = xhat.get(r, c) * g.data()[c] + b.data()[c];
            }
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        ))
    }

    /// Back-propagates from a scalar `loss` and returns fresh gradients.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self.params);
        self.backward_into(loss, &mut grads)?;
        Ok(grads)
    }

    /// Back-propagates from a scalar `loss`, adding into `acc`.
    ///
    /// Consumes the tape.
    pub fn backward_into(self, loss: Var, acc: &mut Gradients) -> Result<()> {
        let shape = self.value(loss).shape();
        if shape != [1, 1] {
            return Err(Error::NonScalarLoss(shape));
        }
        let nodes = self.nodes;
        let mut g: Vec<Option<Array>> = (0..nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(Array::scalar(1.0));

        fn acc_into(g: &mut [Option<Array>], nodes: &[Node], v: Var, f: impl FnOnce(&mut Array)) {
            let slot = &mut g[v.0];
            if slot.is_none() {
                let s = nodes[v.0].value.shape();
                *slot = Some(Array::zeros(s[0], s[1]));
            }
            f(slot.as_mut().unwrap());
        }

        for i in (0..=loss.0).rev() {
            let Some(dy) = g[i].take() else { continue };
            let node = &nodes[i];
            let y = &node.value;
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => acc.get_mut(*id).add_assign(&dy),
                Op::MatMul(a, b) => {
                    let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                    acc_into(&mut g, &nodes, *a, |ga| gemm_nt(&dy, bv, ga));
                    acc_into(&mut g, &nodes, *b, |gb| gemm_tn(av, &dy, gb));
                }
                Op::Add(a, b) => {
                    acc_into(&mut g, &nodes, *a, |ga| ga.add_assign(&dy));
                    acc_into(&mut g, &nodes, *b, |gb| gb.add_assign(&dy));
                }
                Op::Sub(a, b) => {
                    acc_into(&mut g, &nodes, *a, |ga| ga.add_assign(&dy));
                    acc_into(&mut g, &nodes, *b, |gb| {
                        for (o, d) in gb.data_mut().iter_mut().zip(dy.data()) {
                            *o -= d;
                        }
                    });
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                    acc_into(&mut g, &nodes, *a, |ga| {
                        for ((o, d), q) in ga.data_mut().iter_mut().zip(dy.data()).zip(bv.data()) {
                            *o += d * q;
                        }
                    });
                    acc_into(&mut g, &nodes, *b, |gb| {
                        for ((o, d), p) in gb.data_mut().iter_mut().zip(dy.data()).zip(av.data()) {
                            *o += d * p;
                        }
                    });
                }
                Op::Div(a, b) => {
                    let bv = &nodes[b.0].value;
                    acc_into(&mut g, &nodes, *a, |ga| {
                        for ((o, d), q) in ga.data_mut().iter_mut().zip(dy.data()).zip(bv.data()) {
                            *o += d / q;
                        }
                    });
                    acc_into(&mut g, &nodes, *b, |gb| {
                        for (((o, d), q), yv) in gb
                            .data_mut()
                            .iter_mut()
                            .zip(dy.data())
                            .zip(bv.data())
                            .zip(y.data())
                        {
                            *o -= d * yv / q;
                        }
                    });
                }
                Op::AddRow(a, b) => {
                    acc_into(&mut g, &nodes, *a, |ga| ga.add_assign(&dy));
                    acc_into(&mut g, &nodes, *b, |gb| {
                        for r in 0..dy.rows() {
                            for (o, d) in gb.data_mut().iter_mut().zip(dy.row_slice(r)) {
                                *o += d;
                            }
                        }
                    });
                }
                Op::Scale(a, s) => acc_into(&mut g, &nodes, *a, |ga| {
                    for (o, d) in ga.data_mut().iter_mut().zip(dy.data()) {
                        *o += d * s;
                    }
                }),
                Op::AddScalar(a) => acc_into(&mut g, &nodes, *a, |ga| ga.add_assign(&dy)),
                Op::Sigmoid(a) => elementwise(&mut g, &nodes, *a, &dy, y, |_, yv| yv * (1.0 - yv)),
                Op::Tanh(a) => elementwise(&mut g, &nodes, *a, &dy, y, |_, yv| 1.0 - yv * yv),
                Op::Exp(a) => elementwise(&mut g, &nodes, *a, &dy, y, |_, yv| yv),
                Op::Log(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| 1.0 / x),
                Op::Softplus(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| sigmoid(x)),
                Op::Abs(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }),
                Op::Square(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| 2.0 * x),
                Op::Gelu(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| gelu_grad(x)),
                Op::NormalCdf(a) => elementwise(&mut g, &nodes, *a, &dy, y, |x, _| normal_pdf(x)),
                Op::Softmax(a) => acc_into(&mut g, &nodes, *a, |ga| {
                    for r in 0..y.rows() {
                        let (yr, dr) = (y.row_slice(r), dy.row_slice(r));
                        let dot: f64 = yr.iter().zip(dr).map(|(p, q)| p * q).sum();
                        for ((o, &yv), &d) in ga.row_slice_mut(r).iter_mut().zip(yr).zip(dr) {
                            *o += yv * (d - dot);
                        }
                    }
                }),
                Op::LogSoftmax(a) => acc_into(&mut g, &nodes, *a, |ga| {
                    for r in 0..y.rows() {
                        let (yr, dr) = (y.row_slice(r), dy.row_slice(r));
                        let total: f64 = dr.iter().sum();
                        for ((o, &yv), &d) in ga.row_slice_mut(r).iter_mut().zip(yr).zip(dr) {
                            *o += d - yv.exp() * total;
                        }
                    }
                }),
                Op::LogSumExp(a) => {
                    let x = &nodes[a.0].value;
                    acc_into(&mut g, &nodes, *a, |ga| {
                        for r in 0..x.rows() {
                            let lse = y.get(r, 0);
                            let d = dy.get(r, 0);
                            for (o, &xv) in ga.row_slice_mut(r).iter_mut().zip(x.row_slice(r)) {
                                *o += d * (xv - lse).exp();
                            }
                        }
                    });
                }
                Op::GatherParam(id, idx) => {
                    let gt = acc.get_mut(*id);
                    for (r, &row) in idx.iter().enumerate() {
                        for (o, d) in gt.row_slice_mut(row).iter_mut().zip(dy.row_slice(r)) {
                            *o += d;
                        }
                    }
                }
                Op::Gather(table, idx) => {
                    if let Op::Param(id) = nodes[table.0].op {
                        // Scatter straight into the accumulator; avoids a dense
                        // vocabulary-sized buffer per tape.
                        let gt = acc.get_mut(id);
                        for (r, &row) in idx.iter().enumerate() {
                            for (o, d) in gt.row_slice_mut(row).iter_mut().zip(dy.row_slice(r)) {
                                *o += d;
                            }
                        }
                    } else {
                        acc_into(&mut g, &nodes, *table, |gt| {
                            for (r, &row) in idx.iter().enumerate() {
                                for (o, d) in gt.row_slice_mut(row).iter_mut().zip(dy.row_slice(r)) {
                                    *o += d;
                                }
                            }
                        });
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut c0 = 0;
                    for &p in parts {
                        let w = nodes[p.0].value.cols();
                        acc_into(&mut g, &nodes, p, |gp| {
                            for r in 0..dy.rows() {
                                for (o, d) in gp
                                    .row_slice_mut(r)
                                    .iter_mut()
                                    .zip(&dy.row_slice(r)[c0..c0 + w])
                                {
                                    *o += d;
                                }
                            }
                        });
                        c0 += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = nodes[p.0].value.len();
                        acc_into(&mut g, &nodes, p, |gp| {
                            for (o, d) in gp.data_mut().iter_mut().zip(&dy.data()[off..off + n]) {
                                *o += d;
                            }
                        });
                        off += n;
                    }
                }
                Op::SliceCols(a, c0) => acc_into(&mut g, &nodes, *a, |ga| {
                    for r in 0..dy.rows() {
                        let w = dy.cols();
                        for (o, d) in ga.row_slice_mut(r)[*c0..*c0 + w].iter_mut().zip(dy.row_slice(r)) {
                            *o += d;
                        }
                    }
                }),
                Op::SliceRows(a, r0) => acc_into(&mut g, &nodes, *a, |ga| {
                    let cols = dy.cols();
                    let off = r0 * cols;
                    for (o, d) in ga.data_mut()[off..off + dy.len()].iter_mut().zip(dy.data()) {
                        *o += d;
                    }
                }),
                Op::Transpose(a) => {
                    let dt = dy.transpose();
                    acc_into(&mut g, &nodes, *a, |ga| ga.add_assign(&dt));
                }
                Op::Dropout(a, mask) => acc_into(&mut g, &nodes, *a, |ga| {
                    for ((o, d), m) in ga.data_mut().iter_mut().zip(dy.data()).zip(mask) {
                        *o += d * m;
                    }
                }),
                Op::Sum(a) => {
                    let d = dy.item();
                    acc_into(&mut g, &nodes, *a, |ga| {
                        for o in ga.data_mut() {
                            *o += d;
                        }
                    });
                }
                Op::Element(a, r, c) => {
                    let d = dy.item();
                    acc_into(&mut g, &nodes, *a, |ga| {
                        let cols = ga.cols();
                        ga.data_mut()[r * cols + c] += d;
                    });
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let gv = &nodes[gamma.0].value;
                    let n = xhat.cols() as f64;
                    acc_into(&mut g, &nodes, *gamma, |gg| {
                        for r in 0..dy.rows() {
                            for ((o, d), xh) in gg.data_mut().iter_mut().zip(dy.row_slice(r)).zip(xhat.row_slice(r)) {
                                *o += d * xh;
                            }
                        }
                    });
                    acc_into(&mut g, &nodes, *beta, |gb| {
                        for r in 0..dy.rows() {
                            for (o, d) in gb.data_mut().iter_mut().zip(dy.row_slice(r)) {
                                *o += d;
                            }
                        }
                    });
                    acc_into(&mut g, &nodes, *x, |gx| {
                        for r in 0..dy.rows() {
                            let dxhat: Vec<f64> = dy
                                .row_slice(r)
                                .iter()
                                .zip(gv.data())
                                .map(|(d, gm)| d * gm)
                                .collect();
                            let xr = xhat.row_slice(r);
                            let s1: f64 = dxhat.iter().sum();
                            let s2: f64 = dxhat.iter().zip(xr).map(|(a, b)| a * b).sum();
                            let is = inv_std[r];
                            for ((o, dh), xh) in gx.row_slice_mut(r).iter_mut().zip(&dxhat).zip(xr) {
                                *o += is / n * (n * dh - s1 - xh * s2);
                            }
                        }
                    });
                }
            }
        }
        Ok(())
    }
}

/// Accumulates `dy * f(x, y)` into the gradient of `a`.
fn elementwise(
    g: &mut [Option<Array>],
    nodes: &[Node],
    a: Var,
    dy: &Array,
    y: &Array,
    f: impl Fn(f64, f64) -> f64,
) {
    let x = &nodes[a.0].value;
    let slot = &mut g[a.0];
    if slot.is_none() {
        *slot = Some(Array::zeros(x.rows(), x.cols()));
    }
    let ga = slot.as_mut().unwrap();
    for (((o, d), &xv), &yv) in ga.data_mut().iter_mut().zip(dy.data()).zip(x.data()).zip(y.data()) {
        *o += d * f(xv, yv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::ParamGroup;

    #[test]
    fn softmax_and_sigmoid_values() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store, Mode::Eval, 0);
        let x = t.constant(Array::row(vec![0.0, 0.0, 0.0]));
        let s = t.softmax(x);
        for &p in t.value(s).data() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let z = t.constant_scalar(0.0);
        let sg = t.sigmoid(z);
        assert_eq!(t.scalar(sg), 0.5);
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut store = ParamStore::new();
        let p = store.add("p", Array::row(vec![1.0, 2.0]), ParamGroup::Head);
        let mut t = Tape::new(&store, Mode::Train, 0);
        let v = t.param(p);
        let sq = t.mul(v, v).unwrap();
        let loss = t.sum(sq);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(p).data(), &[2.0, 4.0]);
    }

    #[test]
    fn log_softmax_gradient_is_onehot_minus_softmax() {
        let mut store = ParamStore::new();
        let p = store.add("x", Array::row(vec![0.3, -1.2, 2.0, 0.5]), ParamGroup::Head);
        let k = 2;
        let mut t = Tape::new(&store, Mode::Train, 0);
        let x = t.param(p);
        let ls = t.log_softmax(x);
        let pick = t.element(ls, 0, k).unwrap();
        let sm = softmax_rows(store.get(p));
        let g = t.backward(pick).unwrap();
        for (j, &gv) in g.get(p).data().iter().enumerate() {
            let expect = f64::from(u8::from(j == k)) - sm.data()[j];
            assert!((gv - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store, Mode::Train, 0);
        let x = t.constant(Array::row(vec![1.0, 2.0]));
        assert!(matches!(t.backward(x), Err(Error::NonScalarLoss([1, 2]))));
    }

    #[test]
    fn shape_errors_report_both_shapes() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store, Mode::Train, 0);
        let a = t.constant(Array::zeros(2, 3));
        let b = t.constant(Array::zeros(2, 1));
        match t.matmul(a, b) {
            Err(Error::Shape { left, right, .. }) => assert_eq!((left, right), ([2, 3], [2, 1])),
            other => panic!("unexpected {other:?}"),
        }
        let c = t.constant(Array::zeros(3, 1));
        let d = t.matmul(a, c).unwrap();
        assert_eq!(t.value(d).shape(), [2, 1]);
    }

    #[test]
    fn dropout_is_identity_in_eval() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store, Mode::Eval, 3);
        let x = t.constant(Array::row(vec![1.0; 8]));
        let y = t.dropout(x, 0.7);
        assert_eq!(x, y);
        let mut t = Tape::new(&store, Mode::Train, 3);
        let x = t.constant(Array::row(vec![1.0; 1000]));
        let y = t.dropout(x, 0.7);
        let zeros = t.value(y).data().iter().filter(|&&v| v == 0.0).count();
        assert!((200..400).contains(&zeros));
    }
}
