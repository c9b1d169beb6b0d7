//! Shared test oracles and fixtures.
#![allow(dead_code)]

use std::f64::consts::LN_10;

use numpred::heads::{DiscreteExponent, FlowLaplace};
use numpred::numtext::NormalizedSentence;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn cached_nodes(n: usize) -> std::rc::Rc<(Vec<f64>, Vec<f64>)> {
    thread_local! {
        static CACHE: std::cell::RefCell<std::collections::HashMap<usize, std::rc::Rc<(Vec<f64>, Vec<f64>)>>> =
            Default::default();
    }
    CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| std::rc::Rc::new(gauss_legendre(n)))
            .clone()
    })
}

/// Composite rule: the nodes are shared out over the panels between
/// consecutive `breaks`, proportional to panel width.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], total_nodes: usize) -> f64 {
    let span = breaks[breaks.len() - 1] - breaks[0];
    let mut sum = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((total_nodes as f64 * (b - a) / span / 16.0).ceil() as usize).max(1) * 16;
        let nodes = cached_nodes(n);
        let (x, w) = (&nodes.0, &nodes.1);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for (xi, wi) in x.iter().zip(w) {
            sum += wi * half * f(mid + half * xi);
        }
    }
    sum
}

/// `∫ exp(log_density(y)) dy` over y > shift, done in `u = ln(y − shift)`.
pub fn log_space_mass(log_density: impl Fn(f64) -> f64, shift: f64, u_breaks: &[f64]) -> f64 {
    integrate(
        |u| {
            let y = shift + u.exp();
            (log_density(y) + u).exp()
        },
        u_breaks,
        2048,
    )
}

/// Evenly spaced break points.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

pub fn sentence(text: &str, values: &[f64]) -> NormalizedSentence {
    let tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
    let positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| *t == numpred::numtext::MASK_TOKEN)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(positions.len(), values.len(), "mask count must match values");
    NormalizedSentence::new(tokens, positions.into_iter().zip(values.iter().copied()).collect())
}

/// Small model settings so training tests stay quick.
pub fn small_config() -> numpred::pipeline::RunConfig {
    let mut cfg = numpred::pipeline::RunConfig::default();
    cfg.model.encoder.bigru.embed_dim = 16;
    cfg.model.encoder.bigru.hidden = 16;
    let t = &mut cfg.model.encoder.transformer;
    t.layers = 1;
    t.heads = 2;
    t.model_dim = 16;
    t.ff_dim = 32;
    cfg.train.batch_size = 4;
    cfg
}

/// Decade edges plus extra panels around each mantissa peak so narrow
/// truncated normals are resolved.
pub fn dexp_breaks(d: &DiscreteExponent, e_lo: usize, e_hi: usize) -> Vec<f64> {
    let mut b = Vec::new();
    for e in e_lo..=e_hi {
        let (lo, hi) = ((e - 1) as f64 * LN_10, e as f64 * LN_10);
        b.push(lo);
        let (mu, sd) = (d.mantissa_mean()[e - 1], d.mantissa_scale()[e - 1]);
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            let m = mu + k * sd;
            if m > 0.1 && m < 1.0 {
                b.push(lo + (10.0 * m).ln());
            }
        }
        b.push(hi);
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Panels in `ln(y + a)` on either side of the Laplace kink.
pub fn flow_breaks(d: &FlowLaplace) -> Vec<f64> {
    let (b, c) = (d.flow.b(), d.flow.c());
    let kink = d.location / c - b.ln();
    let w = 60.0 * d.scale / c;
    let mut br = linspace(kink - w, kink, 8);
    br.extend(linspace(kink, kink + w, 8).into_iter().skip(1));
    br
}
