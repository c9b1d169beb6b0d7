use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    AnyDensity, DiscreteExponent, FlowLaplace, FlowParams, GaussianMixture, GmmComponents,
    LogLaplace, EXPONENTS, MANTISSA_HI, MANTISSA_LO, SIGMA_MAX, SIGMA_MIN,
};
use crate::diffmath::{Array, ParamGroup, ParamId, ParamStore, Tape, Var};
use crate::encoder::{NumericEmbedder, NumericKind};
use crate::error::{Error, Result};
use crate::nn::Linear;
use crate::numtext::{check_range, decade, decompose, pow10, MAX_VALUE};

const LN_2: f64 = std::f64::consts::LN_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Loglp,
    Flowlp,
    #[default]
    Dexp,
    Gmm,
    Disc,
}

impl HeadKind {
    pub fn is_generative(self) -> bool {
        self != HeadKind::Disc
    }
}

/// Inverse of softplus.
fn softplus_inv(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

/// Inverse of `lo + (hi − lo)·sigmoid(x)`.
fn scaled_sigmoid_inv(y: f64, lo: f64, hi: f64) -> f64 {
    let p = (y - lo) / (hi - lo);
    (p / (1.0 - p)).ln()
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

/// Laplace base scale shared by every example, softplus-parameterized.
fn global_scale(store: &mut ParamStore, name: &str) -> ParamId {
    store.add(name, Array::scalar(softplus_inv(1.0)), ParamGroup::Head)
}

/// `−ln Laplace(z; μ, s)` on the tape.
fn laplace_nll(tape: &mut Tape, z: Var, mu: Var, s: Var) -> Result<Var> {
    let d = tape.sub(z, mu)?;
    let a = tape.abs(d);
    let q = tape.div(a, s)?;
    let ls = tape.log(s);
    let sum = tape.add(ls, q)?;
    Ok(tape.add_scalar(sum, LN_2))
}

#[derive(Debug, Clone, Copy)]
pub struct LogLpHead {
    loc: Linear,
    scale: ParamId,
}

impl LogLpHead {
    pub fn new(store: &mut ParamStore, input: usize, rng: &mut impl Rng) -> Self {
        Self {
            loc: Linear::new(store, "head.loglp.loc", input, 1, ParamGroup::Head, rng),
            scale: global_scale(store, "head.loglp.scale"),
        }
    }

    fn params(&self, tape: &mut Tape, h: Var) -> Result<(Var, Var)> {
        let mu = self.loc.forward(tape, h)?;
        let raw = tape.param(self.scale);
        Ok((mu, tape.softplus(raw)))
    }

    pub fn nll(&self, tape: &mut Tape, h: Var, y: f64) -> Result<Var> {
        check_range(y)?;
        let (mu, s) = self.params(tape, h)?;
        let z = tape.constant(Array::scalar(y.ln()));
        let l = laplace_nll(tape, z, mu, s)?;
        Ok(tape.add_scalar(l, y.ln()))
    }

    pub fn density(&self, tape: &mut Tape, h: Var) -> Result<LogLaplace> {
        let (mu, s) = self.params(tape, h)?;
        LogLaplace::new(tape.scalar(mu), tape.scalar(s))
    }

    fn init_prior(&self, store: &mut ParamStore, values: &[f64]) {
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        if let Some(m) = median(&logs) {
            self.loc.fill_bias(store, m);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowLpHead {
    shift: Linear,
    in_scale: Linear,
    out_scale: Linear,
    loc: Linear,
    scale: ParamId,
}

impl FlowLpHead {
    pub fn new(store: &mut ParamStore, input: usize, rng: &mut impl Rng) -> Self {
        let g = ParamGroup::Head;
        let head = Self {
            shift: Linear::new(store, "head.flowlp.a", input, 1, g, rng),
            in_scale: Linear::new(store, "head.flowlp.b", input, 1, g, rng),
            out_scale: Linear::new(store, "head.flowlp.c", input, 1, g, rng),
            loc: Linear::new(store, "head.flowlp.loc", input, 1, g, rng),
            scale: global_scale(store, "head.flowlp.scale"),
        };
        // Start near the identity flow: a ≈ 0, b = c = 1.
        head.shift.fill_bias(store, -5.0);
        let one = scaled_sigmoid_inv(1.0, FlowParams::SCALE_MIN, FlowParams::SCALE_MAX);
        head.in_scale.fill_bias(store, one);
        head.out_scale.fill_bias(store, one);
        head
    }

    /// `(a, b, c, μ, s)`.
    fn params(&self, tape: &mut Tape, h: Var) -> Result<[Var; 5]> {
        let (lo, hi) = (FlowParams::SCALE_MIN, FlowParams::SCALE_MAX);
        let a = self.shift.forward(tape, h)?;
        let a = tape.softplus(a);
        let b = self.in_scale.forward(tape, h)?;
        let b = tape.scaled_sigmoid(b, lo, hi);
        let c = self.out_scale.forward(tape, h)?;
        let c = tape.scaled_sigmoid(c, lo, hi);
        let mu = self.loc.forward(tape, h)?;
        let raw = tape.param(self.scale);
        let s = tape.softplus(raw);
        Ok([a, b, c, mu, s])
    }

    pub fn nll(&self, tape: &mut Tape, h: Var, y: f64) -> Result<Var> {
        check_range(y)?;
        let [a, b, c, mu, s] = self.params(tape, h)?;
        let ya = tape.add_scalar(a, y);
        let bya = tape.mul(b, ya)?;
        let l = tape.log(bya);
        let z = tape.mul(c, l)?;
        let base = laplace_nll(tape, z, mu, s)?;
        // − ln c + ln(y + a)
        let lc = tape.log(c);
        let lya = tape.log(ya);
        let jac = tape.sub(lya, lc)?;
        tape.add(base, jac)
    }

    pub fn density(&self, tape: &mut Tape, h: Var) -> Result<FlowLaplace> {
        let [a, b, c, mu, s] = self.params(tape, h)?;
        let flow = FlowParams::new(
            tape.scalar(a),
            tape.scalar(b).clamp(FlowParams::SCALE_MIN, FlowParams::SCALE_MAX),
            tape.scalar(c).clamp(FlowParams::SCALE_MIN, FlowParams::SCALE_MAX),
        )?;
        FlowLaplace::new(flow, tape.scalar(mu), tape.scalar(s))
    }

    fn init_prior(&self, store: &mut ParamStore, values: &[f64]) {
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        if let Some(m) = median(&logs) {
            self.loc.fill_bias(store, m);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DExpHead {
    exponent: Linear,
    mantissa_hidden: Linear,
    mantissa_mean: Linear,
    mantissa_scale: ParamId,
}

pub const DEXP_MANTISSA_HIDDEN: usize = 64;

impl DExpHead {
    pub fn new(store: &mut ParamStore, input: usize, rng: &mut impl Rng) -> Self {
        let g = ParamGroup::Head;
        let init = scaled_sigmoid_inv(0.25, SIGMA_MIN, SIGMA_MAX);
        Self {
            exponent: Linear::new(store, "head.dexp.exponent", input, EXPONENTS, g, rng),
            mantissa_hidden: Linear::new(store, "head.dexp.mantissa1", input, DEXP_MANTISSA_HIDDEN, g, rng),
            mantissa_mean: Linear::new(store, "head.dexp.mantissa2", DEXP_MANTISSA_HIDDEN, EXPONENTS, g, rng),
            mantissa_scale: store.add("head.dexp.sigma", Array::full(1, EXPONENTS, init), g),
        }
    }

    /// `(log π, μ_m, σ)`, each `1 × 17`.
    fn params(&self, tape: &mut Tape, h: Var) -> Result<(Var, Var, Var)> {
        let logits = self.exponent.forward(tape, h)?;
        let log_pi = tape.log_softmax(logits);
        let hid = self.mantissa_hidden.forward(tape, h)?;
        let hid = tape.tanh(hid);
        let mu = self.mantissa_mean.forward(tape, hid)?;
        let mu = tape.scaled_sigmoid(mu, MANTISSA_LO, MANTISSA_HI);
        let raw = tape.param(self.mantissa_scale);
        let sigma = tape.scaled_sigmoid(raw, SIGMA_MIN, SIGMA_MAX);
        Ok((log_pi, mu, sigma))
    }

    /// `−ln π_e − ln TruncNormal(m; μ_e, σ_e)`; only the observed exponent's
    /// component receives gradient.
    pub fn nll(&self, tape: &mut Tape, h: Var, y: f64) -> Result<Var> {
        let em = decompose(y)?;
        let i = (em.exponent - 1) as usize;
        let (log_pi, mu, sigma) = self.params(tape, h)?;
        let lp = tape.element(log_pi, 0, i)?;
        let mu = tape.element(mu, 0, i)?;
        let sigma = tape.element(sigma, 0, i)?;
        let m = tape.constant(Array::scalar(em.mantissa));
        let d = tape.sub(m, mu)?;
        let z = tape.div(d, sigma)?;
        let zz = tape.square(z);
        let half = tape.scale(zz, 0.5);
        let ls = tape.log(sigma);
        let neg_mu = tape.neg(mu);
        let hi = tape.add_scalar(neg_mu, MANTISSA_HI);
        let hi = tape.div(hi, sigma)?;
        let lo = tape.add_scalar(neg_mu, MANTISSA_LO);
        let lo = tape.div(lo, sigma)?;
        let fh = tape.normal_cdf(hi);
        let fl = tape.normal_cdf(lo);
        let mass = tape.sub(fh, fl)?;
        let lm = tape.log(mass);
        let t = tape.add(half, ls)?;
        let t = tape.add(t, lm)?;
        let t = tape.sub(t, lp)?;
        Ok(tape.add_scalar(t, LN_SQRT_2PI))
    }

    pub fn density(&self, tape: &mut Tape, h: Var) -> Result<DiscreteExponent> {
        let (log_pi, mu, sigma) = self.params(tape, h)?;
        let clamp = |v: &Array, lo: f64, hi: f64| -> Vec<f64> {
            v.data().iter().map(|x| x.clamp(lo, hi)).collect()
        };
        DiscreteExponent::new(
            tape.value(log_pi).data(),
            &clamp(tape.value(mu), MANTISSA_LO, MANTISSA_HI),
            &clamp(tape.value(sigma), SIGMA_MIN, SIGMA_MAX),
        )
    }

    fn init_prior(&self, store: &mut ParamStore, values: &[f64]) {
        let mut counts = [1.0; EXPONENTS];
        for &v in values {
            if let Ok(em) = decompose(v) {
                counts[(em.exponent - 1) as usize] += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        let bias = store.get_mut(self.exponent.bias).data_mut();
        for (b, c) in bias.iter_mut().zip(counts) {
            *b = (c / total).ln();
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmHead {
    weights: Linear,
    components: Arc<GmmComponents>,
}

impl GmmHead {
    pub fn new(
        store: &mut ParamStore,
        input: usize,
        components: Arc<GmmComponents>,
        rng: &mut impl Rng,
    ) -> Self {
        let weights = Linear::new(store, "head.gmm.weights", input, components.k(), ParamGroup::Head, rng);
        let bias = store.get_mut(weights.bias).data_mut();
        for (b, w) in bias.iter_mut().zip(&components.weights) {
            *b = w.max(1e-12).ln();
        }
        Self {
            weights,
            components,
        }
    }

    pub fn components(&self) -> &Arc<GmmComponents> {
        &self.components
    }

    /// Marginal negative log-likelihood over all components.
    pub fn nll(&self, tape: &mut Tape, h: Var, y: f64) -> Result<Var> {
        check_range(y)?;
        let space = self.components.space;
        let logits = self.weights.forward(tape, h)?;
        let lw = tape.log_softmax(logits);
        let comp = self.components.component_log_pdfs(space.transform(y));
        let comp = tape.constant(Array::row(comp));
        let joint = tape.add(lw, comp)?;
        let lse = tape.logsumexp(joint);
        let nll = tape.neg(lse);
        Ok(tape.add_scalar(nll, -space.log_jacobian(y)))
    }

    pub fn density(&self, tape: &mut Tape, h: Var) -> Result<GaussianMixture> {
        let logits = self.weights.forward(tape, h)?;
        GaussianMixture::new(self.components.clone(), tape.value(logits).data().to_vec())
    }
}

pub const DISC_HIDDEN: usize = 64;

/// Scores (context, candidate value) pairs as real or fake.
#[derive(Debug, Clone, Copy)]
pub struct DiscHead {
    embed: NumericEmbedder,
    hidden: Linear,
    out: Linear,
}

/// Value standing for exponent row `r` when a point estimate is needed:
/// the geometric middle of `[10^r, 10^(r+1))`, capped at the range top.
pub fn decade_representative(row: usize) -> f64 {
    (pow10(row as i32) * std::f64::consts::SQRT_2 * 5f64.sqrt()).min(MAX_VALUE)
}

impl DiscHead {
    /// `numeric` picks the candidate embedder; `NONE` falls back to exponents.
    pub fn new(store: &mut ParamStore, input: usize, numeric: NumericKind, rng: &mut impl Rng) -> Self {
        let kind = if numeric == NumericKind::None {
            NumericKind::Exponent
        } else {
            numeric
        };
        let dim = input;
        let embed = NumericEmbedder::new(store, "head.disc.candidate", kind, dim, rng);
        Self {
            embed,
            hidden: Linear::new(store, "head.disc.hidden", input + dim, DISC_HIDDEN, ParamGroup::Head, rng),
            out: Linear::new(store, "head.disc.out", DISC_HIDDEN, 1, ParamGroup::Head, rng),
        }
    }

    fn score_rows(&self, tape: &mut Tape, h: Var, cands: Var) -> Result<Var> {
        let n = tape.value(cands).rows();
        let ones = tape.constant(Array::full(n, 1, 1.0));
        let hs = tape.matmul(ones, h)?;
        let cat = tape.concat_cols(&[hs, cands])?;
        let z = self.hidden.forward(tape, cat)?;
        let z = tape.tanh(z);
        self.out.forward(tape, z)
    }

    /// Logit that `candidate` is the true value for context `h`.
    pub fn logit(&self, tape: &mut Tape, h: Var, candidate: f64) -> Result<Var> {
        let e = self.embed.embed(tape, &[candidate])?;
        self.score_rows(tape, h, e)
    }

    /// Binary cross-entropy for one positive and one negative candidate.
    pub fn loss(&self, tape: &mut Tape, h: Var, positive: f64, negative: f64) -> Result<Var> {
        let e = self.embed.embed(tape, &[positive, negative])?;
        let logits = self.score_rows(tape, h, e)?;
        // softplus(−l₊) + softplus(l₋)
        let sign = tape.constant(Array::from_vec(2, 1, vec![-1.0, 1.0])?);
        let signed = tape.mul(logits, sign)?;
        let sp = tape.softplus(signed);
        Ok(tape.sum(sp))
    }

    /// Logits for all 17 exponent rows as candidates.
    pub fn exponent_scores(&self, tape: &mut Tape, h: Var) -> Result<Vec<f64>> {
        if self.embed.kind() != NumericKind::Exponent {
            return Err(Error::Unsupported(
                "exponent prediction needs the exponent candidate embedder".into(),
            ));
        }
        let table = self.embed.exponent_table().expect("exponent embedder has a table");
        let rows: Vec<usize> = (0..EXPONENTS).collect();
        let e = tape.gather_param(table, &rows)?;
        let s = self.score_rows(tape, h, e)?;
        Ok(tape.value(s).data().to_vec())
    }

    /// Row (`floor(log10 ŷ)`) of the best-scoring exponent candidate.
    pub fn predict_exponent(&self, tape: &mut Tape, h: Var) -> Result<usize> {
        Ok(argmax_lowest(&self.exponent_scores(tape, h)?))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// A trainable output head.
#[derive(Debug, Clone)]
pub enum OutputHead {
    LogLp(LogLpHead),
    FlowLp(FlowLpHead),
    DExp(DExpHead),
    Gmm(GmmHead),
    Disc(DiscHead),
}

impl OutputHead {
    /// `components` is required for the mixture head and ignored otherwise.
    pub fn new(
        kind: HeadKind,
        store: &mut ParamStore,
        input: usize,
        numeric: NumericKind,
        components: Option<Arc<GmmComponents>>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Ok(match kind {
            HeadKind::Loglp => OutputHead::LogLp(LogLpHead::new(store, input, rng)),
            HeadKind::Flowlp => OutputHead::FlowLp(FlowLpHead::new(store, input, rng)),
            HeadKind::Dexp => OutputHead::DExp(DExpHead::new(store, input, rng)),
            HeadKind::Gmm => {
                let c = components.ok_or_else(|| {
                    Error::Config("mixture head needs pretrained components".into())
                })?;
                OutputHead::Gmm(GmmHead::new(store, input, c, rng))
            }
            HeadKind::Disc => OutputHead::Disc(DiscHead::new(store, input, numeric, rng)),
        })
    }

    pub fn kind(&self) -> HeadKind {
        match self {
            OutputHead::LogLp(_) => HeadKind::Loglp,
            OutputHead::FlowLp(_) => HeadKind::Flowlp,
            OutputHead::DExp(_) => HeadKind::Dexp,
            OutputHead::Gmm(_) => HeadKind::Gmm,
            OutputHead::Disc(_) => HeadKind::Disc,
        }
    }

    /// Sets output biases from training values so optimization starts at
    /// the marginal distribution's scale.
    pub fn init_prior(&self, store: &mut ParamStore, values: &[f64]) {
        match self {
            OutputHead::LogLp(h) => h.init_prior(store, values),
            OutputHead::FlowLp(h) => h.init_prior(store, values),
            OutputHead::DExp(h) => h.init_prior(store, values),
            OutputHead::Gmm(_) | OutputHead::Disc(_) => {}
        }
    }

    /// Training loss for target `y`. The discriminative head needs a
    /// `negative` candidate.
    pub fn loss(&self, tape: &mut Tape, h: Var, y: f64, negative: Option<f64>) -> Result<Var> {
        match self {
            OutputHead::LogLp(head) => head.nll(tape, h, y),
            OutputHead::FlowLp(head) => head.nll(tape, h, y),
            OutputHead::DExp(head) => head.nll(tape, h, y),
            OutputHead::Gmm(head) => head.nll(tape, h, y),
            OutputHead::Disc(head) => {
                let neg = negative.ok_or_else(|| {
                    Error::Config("discriminative loss needs a negative candidate".into())
                })?;
                head.loss(tape, h, y, neg)
            }
        }
    }

    /// Output density; `None` for the discriminative head.
    pub fn density(&self, tape: &mut Tape, h: Var) -> Result<Option<AnyDensity>> {
        Ok(Some(match self {
            OutputHead::LogLp(head) => AnyDensity::LogLaplace(head.density(tape, h)?),
            OutputHead::FlowLp(head) => AnyDensity::FlowLaplace(head.density(tape, h)?),
            OutputHead::DExp(head) => AnyDensity::DiscreteExponent(head.density(tape, h)?),
            OutputHead::Gmm(head) => AnyDensity::GaussianMixture(head.density(tape, h)?),
            OutputHead::Disc(_) => return Ok(None),
        }))
    }

    /// Components of the mixture head, if any.
    pub fn components(&self) -> Option<&Arc<GmmComponents>> {
        match self {
            OutputHead::Gmm(h) => Some(h.components()),
            _ => None,
        }
    }
}

/// Row of the exponent table a value falls in.
pub fn value_row(y: f64) -> Result<usize> {
    check_range(y)?;
    Ok(decade(y) as usize)
}
