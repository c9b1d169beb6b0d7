use rand::{Rng, RngCore};

use super::{truncnorm, Density, EXPONENTS};
use crate::error::{Error, Result};
use crate::numtext::{decade, decompose, pow10};

pub const MANTISSA_LO: f64 = 0.1;
pub const MANTISSA_HI: f64 = 1.0;
pub const SIGMA_MIN: f64 = 0.01;
pub const SIGMA_MAX: f64 = 1.0;

/// Categorical exponent with a truncated-normal mantissa per exponent.
///
/// Index `i` describes exponent `e = i + 1`, i.e. values in
/// `[10^(e−1), 10^e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteExponent {
    log_pi: [f64; EXPONENTS],
    mu: [f64; EXPONENTS],
    sigma: [f64; EXPONENTS],
}

impl DiscreteExponent {
    /// `log_pi` need not be normalized; it is shifted to sum to one.
    pub fn new(log_pi: &[f64], mu: &[f64], sigma: &[f64]) -> Result<Self> {
        if log_pi.len() != EXPONENTS || mu.len() != EXPONENTS || sigma.len() != EXPONENTS {
            return Err(Error::Config(format!(
                "discrete-exponent parameters need {EXPONENTS} entries each"
            )));
        }
        let max = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numerical("exponent logits are not finite".into()));
        }
        let lse = max + log_pi.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        let mut out = Self {
            log_pi: [0.0; EXPONENTS],
            mu: [0.0; EXPONENTS],
            sigma: [0.0; EXPONENTS],
        };
        for i in 0..EXPONENTS {
            if !(MANTISSA_LO..=MANTISSA_HI).contains(&mu[i]) {
                return Err(Error::Config(format!("mantissa mean {} outside [0.1, 1]", mu[i])));
            }
            if !(SIGMA_MIN..=SIGMA_MAX).contains(&sigma[i]) {
                return Err(Error::Config(format!("mantissa scale {} outside [0.01, 1]", sigma[i])));
            }
            out.log_pi[i] = log_pi[i] - lse;
            out.mu[i] = mu[i];
            out.sigma[i] = sigma[i];
        }
        Ok(out)
    }

    pub fn log_pi(&self) -> &[f64; EXPONENTS] {
        &self.log_pi
    }

    pub fn probabilities(&self) -> [f64; EXPONENTS] {
        self.log_pi.map(f64::exp)
    }

    pub fn mantissa_mean(&self) -> &[f64; EXPONENTS] {
        &self.mu
    }

    pub fn mantissa_scale(&self) -> &[f64; EXPONENTS] {
        &self.sigma
    }

    /// Most probable exponent `e` in `1..=17`; ties go to the smallest.
    pub fn argmax_exponent(&self) -> i32 {
        let mut best = 0;
        for i in 1..EXPONENTS {
            if self.log_pi[i] > self.log_pi[best] {
                best = i;
            }
        }
        best as i32 + 1
    }

    pub fn mantissa_log_density(&self, e: i32, m: f64) -> f64 {
        let i = (e - 1) as usize;
        truncnorm::log_pdf(m, self.mu[i], self.sigma[i], MANTISSA_LO, MANTISSA_HI)
    }

    /// Decomposition used for scoring: exponent clamped to `1..=17` and the
    /// mantissa clipped to `[0.1, 1]`.
    fn clamped_parts(y: f64) -> (i32, f64) {
        if let Ok(p) = decompose(y) {
            return (p.exponent, p.mantissa);
        }
        let e = (decade(y) + 1).clamp(1, EXPONENTS as i32);
        (e, (y / pow10(e)).clamp(MANTISSA_LO, MANTISSA_HI))
    }
}

impl Density for DiscreteExponent {
    fn log_density(&self, y: f64) -> f64 {
        if !(y > 0.0) || !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        let (e, m) = Self::clamped_parts(y);
        self.log_pi[(e - 1) as usize] + self.mantissa_log_density(e, m)
            - e as f64 * std::f64::consts::LN_10
    }

    fn cdf(&self, y: f64) -> f64 {
        if y < 1.0 {
            return 0.0;
        }
        let (e, m) = Self::clamped_parts(y);
        if y >= pow10(EXPONENTS as i32) {
            return 1.0;
        }
        let i = (e - 1) as usize;
        let below: f64 = self.log_pi[..i].iter().map(|l| l.exp()).sum();
        below
            + self.log_pi[i].exp()
                * truncnorm::cdf(m, self.mu[i], self.sigma[i], MANTISSA_LO, MANTISSA_HI)
    }

    fn point_prediction(&self) -> f64 {
        let e = self.argmax_exponent();
        let m = self.mu[(e - 1) as usize].clamp(MANTISSA_LO, MANTISSA_HI);
        super::clamp_prediction(m * pow10(e))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = EXPONENTS - 1;
        for (i, l) in self.log_pi.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                idx = i;
                break;
            }
        }
        let m = truncnorm::sample(rng, self.mu[idx], self.sigma[idx], MANTISSA_LO, MANTISSA_HI);
        m * pow10(idx as i32 + 1)
    }

    fn decade_probabilities(&self) -> [f64; EXPONENTS] {
        self.probabilities()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(e: i32, mu: f64) -> DiscreteExponent {
        let mut lp = [f64::NEG_INFINITY; EXPONENTS];
        lp[(e - 1) as usize] = 0.0;
        DiscreteExponent::new(&lp, &[mu; EXPONENTS], &[0.25; EXPONENTS]).unwrap()
    }

    #[test]
    fn plug_in_at_one_hot_exponent() {
        let d = one_hot(13, 0.2);
        let want = truncnorm::log_pdf(0.2, 0.2, 0.25, 0.1, 1.0) - 13.0 * std::f64::consts::LN_10;
        assert!((d.log_density(2e12) - want).abs() < 1e-9);
        assert_eq!(d.log_density(2e11), f64::NEG_INFINITY);
        assert!((d.point_prediction() / 2e12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_exponents_cost_ln17() {
        let d = DiscreteExponent::new(&[0.3; EXPONENTS], &[0.5; EXPONENTS], &[0.25; EXPONENTS])
            .unwrap();
        for l in d.log_pi() {
            assert!((-l - (EXPONENTS as f64).ln()).abs() < 1e-12);
        }
        assert_eq!(d.argmax_exponent(), 1);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(DiscreteExponent::new(&[0.0; EXPONENTS], &[0.05; EXPONENTS], &[0.2; EXPONENTS]).is_err());
        assert!(DiscreteExponent::new(&[0.0; EXPONENTS], &[0.5; EXPONENTS], &[2.0; EXPONENTS]).is_err());
        assert!(DiscreteExponent::new(&[0.0; 3], &[0.5; 3], &[0.2; 3]).is_err());
    }

    #[test]
    fn scoring_clamps_outside_the_range() {
        let d = DiscreteExponent::new(&[0.0; EXPONENTS], &[0.5; EXPONENTS], &[0.25; EXPONENTS])
            .unwrap();
        assert!(d.log_density(0.5).is_finite());
        assert!(d.log_density(1e20).is_finite());
        assert_eq!(d.log_density(0.0), f64::NEG_INFINITY);
    }
}
