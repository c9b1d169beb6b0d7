//! Output distributions over positive reals and the networks that produce them.

mod dexp;
mod gmm;
mod laplace;
mod net;
pub mod truncnorm;

use rand::RngCore;

pub use dexp::{DiscreteExponent, MANTISSA_HI, MANTISSA_LO, SIGMA_MAX, SIGMA_MIN};
pub use gmm::{gmm_pretrain_em, EmConfig, EmFit, FitSpace, GaussianMixture, GmmComponents};
pub use laplace::{FlowLaplace, FlowParams, LogLaplace};
pub use net::{
    argmax_lowest, decade_representative, value_row, DExpHead, DiscHead, FlowLpHead, GmmHead,
    HeadKind, LogLpHead, OutputHead,
};

use crate::numtext::{pow10, MAX_VALUE, MIN_VALUE};

/// Number of base-10 exponents covered: `e = 1..=17`.
pub const EXPONENTS: usize = 17;

/// A probability distribution over values.
pub trait Density {
    /// Natural-log density; `-inf` outside the support.
    fn log_density(&self, y: f64) -> f64;

    fn cdf(&self, y: f64) -> f64;

    /// Single best guess, clamped to `[1, 1e16]`.
    fn point_prediction(&self) -> f64;

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Mass in each decade `[10^(e−1), 10^e)` for `e = 1..=17`.
    fn decade_probabilities(&self) -> [f64; EXPONENTS] {
        let mut out = [0.0; EXPONENTS];
        let mut lo = self.cdf(1.0);
        for (i, p) in out.iter_mut().enumerate() {
            let hi = self.cdf(pow10(i as i32 + 1));
            *p = (hi - lo).max(0.0);
            lo = hi;
        }
        out
    }

    /// Exponent `e` of the most probable decade; ties go to the smallest.
    fn argmax_exponent(&self) -> i32 {
        let p = self.decade_probabilities();
        let mut best = 0;
        for i in 1..EXPONENTS {
            if p[i] > p[best] {
                best = i;
            }
        }
        best as i32 + 1
    }
}

/// Any of the generative densities.
#[derive(Debug, Clone)]
pub enum AnyDensity {
    LogLaplace(LogLaplace),
    FlowLaplace(FlowLaplace),
    DiscreteExponent(DiscreteExponent),
    GaussianMixture(GaussianMixture),
}

macro_rules! dispatch {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            AnyDensity::LogLaplace($d) => $e,
            AnyDensity::FlowLaplace($d) => $e,
            AnyDensity::DiscreteExponent($d) => $e,
            AnyDensity::GaussianMixture($d) => $e,
        }
    };
}

impl Density for AnyDensity {
    fn log_density(&self, y: f64) -> f64 {
        dispatch!(self, d => d.log_density(y))
    }

    fn cdf(&self, y: f64) -> f64 {
        dispatch!(self, d => d.cdf(y))
    }

    fn point_prediction(&self) -> f64 {
        dispatch!(self, d => d.point_prediction())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        dispatch!(self, d => d.sample(rng))
    }

    fn decade_probabilities(&self) -> [f64; EXPONENTS] {
        dispatch!(self, d => d.decade_probabilities())
    }
}

pub(crate) fn clamp_prediction(y: f64) -> f64 {
    if y.is_nan() {
        return MIN_VALUE;
    }
    y.clamp(MIN_VALUE, MAX_VALUE)
}

const GRID_POINTS: usize = 1024;

/// Maximizes `f` over `[lo, hi]` (both positive): 1024 log-spaced points,
/// then golden-section search in log space around the best one.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (ulo, uhi) = (lo.log10(), hi.log10());
    let step = (uhi - ulo) / (GRID_POINTS - 1) as f64;
    let g = |u: f64| f(10f64.powf(u));
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let v = g(ulo + step * i as f64);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = ulo + step * best.saturating_sub(1) as f64;
    let mut b = (ulo + step * (best + 1) as f64).min(uhi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let (u_best, v_best) = if fc >= fd { (c, fc) } else { (d, fd) };
    if v_best >= best_val {
        10f64.powf(u_best).clamp(lo, hi)
    } else {
        10f64.powf(ulo + step * best as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_argmax_finds_interior_peak() {
        let y = grid_argmax(|y| -(y.log10() - 7.3).powi(2), 1.0, 1e16);
        assert!((y.log10() - 7.3).abs() < 1e-6);
    }

    #[test]
    fn grid_argmax_handles_boundaries() {
        assert_eq!(grid_argmax(|y| -y, 1.0, 1e16), 1.0);
        let top = grid_argmax(|y| y, 1.0, 1e16);
        assert!((top / 1e16 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decade_probabilities_from_cdf() {
        let d = LogLaplace::new(5.5 * std::f64::consts::LN_10, 0.3).unwrap();
        let p = d.decade_probabilities();
        assert_eq!(d.argmax_exponent(), 6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}
