//! Normal distribution truncated to a closed interval.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::diffmath::normal_cdf;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(Φ((hi−μ)/σ) − Φ((lo−μ)/σ))`.
pub fn log_mass(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    // Evaluate on the side with better precision.
    let mass = if a > 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    };
    mass.ln()
}

pub fn log_pdf(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    if !(lo..=hi).contains(&x) {
        return f64::NEG_INFINITY;
    }
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI - log_mass(mu, sigma, lo, hi)
}

pub fn cdf(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let fa = normal_cdf((lo - mu) / sigma);
    let fb = normal_cdf((hi - mu) / sigma);
    ((normal_cdf((x - mu) / sigma) - fa) / (fb - fa)).clamp(0.0, 1.0)
}

/// Rejection sampler; efficient whenever the interval holds a sizeable
/// share of the untruncated mass, as it does for means inside the interval.
pub fn sample(rng: &mut dyn RngCore, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..10_000 {
        let z: f64 = StandardNormal.sample(rng);
        let x = mu + sigma * z;
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    rng.random_range(lo..=hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untruncated_limit_matches_normal() {
        let lp = log_pdf(0.3, 0.0, 1.0, -50.0, 50.0);
        assert!((lp - (-0.045 - LN_SQRT_2PI)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_interval_halves_nothing() {
        assert!((log_mass(0.0, 1.0, 0.0, 60.0) - 0.5f64.ln()).abs() < 1e-12);
        assert!((cdf(0.55, 0.55, 0.1, 0.1, 1.0) - 0.5).abs() < 1e-12);
    }
}
