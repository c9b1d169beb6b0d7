use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{grid_argmax, Density};
use crate::diffmath::normal_cdf;
use crate::error::{Error, Result};
use crate::numtext::{MAX_VALUE, MIN_VALUE};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Space in which the mixture components live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSpace {
    /// `t = y`.
    Raw,
    /// `t = log10 y`.
    #[default]
    Log10,
}

impl FitSpace {
    pub fn transform(self, y: f64) -> f64 {
        match self {
            FitSpace::Raw => y,
            FitSpace::Log10 => y.log10(),
        }
    }

    pub fn inverse(self, t: f64) -> f64 {
        match self {
            FitSpace::Raw => t,
            FitSpace::Log10 => 10f64.powf(t),
        }
    }

    /// `ln |dt/dy|`; `-inf` where the transform is undefined.
    pub fn log_jacobian(self, y: f64) -> f64 {
        match self {
            FitSpace::Raw => 0.0,
            FitSpace::Log10 if y > 0.0 => -(y * std::f64::consts::LN_10).ln(),
            FitSpace::Log10 => f64::NEG_INFINITY,
        }
    }
}

fn gauss_log_pdf(t: f64, mu: f64, sigma: f64) -> f64 {
    let z = (t - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Frozen one-dimensional Gaussian components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmComponents {
    pub space: FitSpace,
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Mixing weights found by EM; used to initialize the weight network.
    pub weights: Vec<f64>,
}

impl GmmComponents {
    pub fn new(space: FitSpace, means: Vec<f64>, sigmas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let k = means.len();
        if k == 0 || sigmas.len() != k || weights.len() != k {
            return Err(Error::Config(
                "mixture needs matching, nonempty means, sigmas and weights".into(),
            ));
        }
        if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mixture components must be finite with positive sigma".into()));
        }
        Ok(Self {
            space,
            means,
            sigmas,
            weights,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// `ln N(t; μ_k, σ_k)` for every component.
    pub fn component_log_pdfs(&self, t: f64) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.sigmas)
            .map(|(&m, &s)| gauss_log_pdf(t, m, s))
            .collect()
    }

    /// Log-likelihood of `data` (already in fit space) under the EM weights.
    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        let lw: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let mut buf = vec![0.0; self.k()];
        data.iter()
            .map(|&t| {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = lw[k] + gauss_log_pdf(t, self.means[k], self.sigmas[k]);
                }
                logsumexp(&buf)
            })
            .sum()
    }

    /// One EM update on `data` (in fit space) with a variance floor.
    /// Returns the updated components and the log-likelihood before the update.
    pub fn em_step(&self, data: &[f64], var_floor: f64) -> (GmmComponents, f64) {
        let k = self.k();
        let lw: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let mut nk = vec![0.0; k];
        let mut sx = vec![0.0; k];
        let mut resp = vec![0.0; k];
        let mut ll = 0.0;
        let mut all_resp = Vec::with_capacity(data.len() * k);
        for &t in data {
            for j in 0..k {
                resp[j] = lw[j] + gauss_log_pdf(t, self.means[j], self.sigmas[j]);
            }
            let lse = logsumexp(&resp);
            ll += lse;
            for j in 0..k {
                let r = (resp[j] - lse).exp();
                nk[j] += r;
                sx[j] += r * t;
                all_resp.push(r);
            }
        }
        let n = data.len() as f64;
        let mut out = self.clone();
        for j in 0..k {
            if nk[j] <= 1e-300 {
                continue;
            }
            out.means[j] = sx[j] / nk[j];
        }
        let mut sxx = vec![0.0; k];
        for (i, &t) in data.iter().enumerate() {
            for j in 0..k {
                let d = t - out.means[j];
                sxx[j] += all_resp[i * k + j] * d * d;
            }
        }
        for j in 0..k {
            out.weights[j] = (nk[j] / n).max(1e-300);
            if nk[j] > 1e-300 {
                out.sigmas[j] = (sxx[j] / nk[j]).max(var_floor).sqrt();
            }
        }
        (out, ll)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub k: usize,
    pub iters: usize,
    pub seed: u64,
    pub space: FitSpace,
    /// Variance floor as a fraction of the data variance in fit space.
    pub var_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            k: 31,
            iters: 100,
            seed: 0,
            space: FitSpace::Log10,
            var_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub components: GmmComponents,
    /// Log-likelihood after initialization and after every iteration.
    pub log_likelihood: Vec<f64>,
}

/// Fits one-dimensional Gaussian components to `values` by EM.
///
/// Centers start from k-means++ seeding over distinct values.
pub fn gmm_pretrain_em(values: &[f64], cfg: &EmConfig) -> Result<EmFit> {
    if values.is_empty() {
        return Err(Error::Empty("EM training values"));
    }
    if cfg.k == 0 {
        return Err(Error::Config("mixture needs at least one component".into()));
    }
    if cfg.space == FitSpace::Log10 && values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config("log10 fit space needs positive values".into()));
    }
    let data: Vec<f64> = values.iter().map(|&v| cfg.space.transform(v)).collect();
    let mut distinct = data.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if cfg.k > distinct.len() {
        return Err(Error::Config(format!(
            "{} components requested but only {} distinct values",
            cfg.k,
            distinct.len()
        )));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let floor = (cfg.var_floor * var).max(1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers = vec![distinct[rng.random_range(0..distinct.len())]];
    let mut d2: Vec<f64> = distinct.iter().map(|t| (t - centers[0]).powi(2)).collect();
    while centers.len() < cfg.k {
        let total: f64 = d2.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && u < d {
                pick = i;
                break;
            }
            u -= d;
        }
        let c = distinct[pick];
        centers.push(c);
        for (d, t) in d2.iter_mut().zip(&distinct) {
            *d = d.min((t - c).powi(2));
        }
    }
    centers.sort_by(f64::total_cmp);

    // Hard assignment gives starting widths and weights.
    let k = cfg.k;
    let mut cnt = vec![0.0; k];
    let mut ss = vec![0.0; k];
    for &t in &data {
        let j = (0..k)
            .min_by(|&a, &b| (t - centers[a]).abs().total_cmp(&(t - centers[b]).abs()))
            .unwrap();
        cnt[j] += 1.0;
        ss[j] += (t - centers[j]).powi(2);
    }
    let sigmas = (0..k)
        .map(|j| if cnt[j] > 1.0 { (ss[j] / cnt[j]).max(floor).sqrt() } else { var.max(floor).sqrt() / k as f64 })
        .map(|s: f64| s.max(floor.sqrt()))
        .collect();
    let weights = cnt.iter().map(|c| (c / n).max(1.0 / (n * k as f64))).collect::<Vec<_>>();
    let wsum: f64 = weights.iter().sum();
    let weights = weights.into_iter().map(|w| w / wsum).collect();
    let mut comps = GmmComponents::new(cfg.space, centers, sigmas, weights)?;

    let mut trace = Vec::with_capacity(cfg.iters + 1);
    for _ in 0..cfg.iters {
        let (next, ll) = comps.em_step(&data, floor);
        trace.push(ll);
        comps = next;
    }
    trace.push(comps.log_likelihood(&data));
    if trace.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("EM log-likelihood is not finite".into()));
    }
    Ok(EmFit {
        components: comps,
        log_likelihood: trace,
    })
}

/// Frozen components with per-example mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Arc<GmmComponents>,
    log_weights: Vec<f64>,
}

impl GaussianMixture {
    /// `log_weights` need not be normalized.
    pub fn new(components: Arc<GmmComponents>, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != components.k() {
            return Err(Error::Config(format!(
                "expected {} mixture weights, got {}",
                components.k(),
                log_weights.len()
            )));
        }
        let lse = logsumexp(&log_weights);
        if !lse.is_finite() {
            return Err(Error::Numerical("mixture weights are not finite".into()));
        }
        Ok(Self {
            components,
            log_weights: log_weights.into_iter().map(|l| l - lse).collect(),
        })
    }

    pub fn components(&self) -> &GmmComponents {
        &self.components
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Mixture log-density in fit space.
    pub fn log_density_t(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .component_log_pdfs(t)
            .into_iter()
            .zip(&self.log_weights)
            .map(|(c, w)| c + w)
            .collect();
        logsumexp(&terms)
    }
}

impl Density for GaussianMixture {
    fn log_density(&self, y: f64) -> f64 {
        let space = self.components.space;
        let jac = space.log_jacobian(y);
        if jac == f64::NEG_INFINITY {
            return jac;
        }
        self.log_density_t(space.transform(y)) + jac
    }

    fn cdf(&self, y: f64) -> f64 {
        let space = self.components.space;
        if space == FitSpace::Log10 && y <= 0.0 {
            return 0.0;
        }
        let t = space.transform(y);
        let c = &self.components;
        (0..c.k())
            .map(|k| self.log_weights[k].exp() * normal_cdf((t - c.means[k]) / c.sigmas[k]))
            .sum()
    }

    /// Mode of the fit-space density over the supported value range.
    fn point_prediction(&self) -> f64 {
        let space = self.components.space;
        grid_argmax(|y| self.log_density_t(space.transform(y)), MIN_VALUE, MAX_VALUE)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let c = &self.components;
        let mut acc = 0.0;
        let mut idx = c.k() - 1;
        for (k, l) in self.log_weights.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                idx = k;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        c.space.inverse(c.means[idx] + c.sigmas[idx] * z)
    }
}
