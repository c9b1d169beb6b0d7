use rand::{Rng, RngCore};

use super::{clamp_prediction, Density};
use crate::error::{Error, Result};

fn laplace_log_pdf(z: f64, mu: f64, s: f64) -> f64 {
    -(2.0 * s).ln() - (z - mu).abs() / s
}

fn laplace_cdf(z: f64, mu: f64, s: f64) -> f64 {
    if z < mu {
        0.5 * ((z - mu) / s).exp()
    } else {
        1.0 - 0.5 * (-(z - mu) / s).exp()
    }
}

fn laplace_sample(rng: &mut dyn RngCore, mu: f64, s: f64) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    mu - s * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// `ln y ~ Laplace(location, scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLaplace {
    pub location: f64,
    pub scale: f64,
}

impl LogLaplace {
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !location.is_finite() {
            return Err(Error::Numerical(format!(
                "log-Laplace needs finite location and positive scale, got ({location}, {scale})"
            )));
        }
        Ok(Self { location, scale })
    }
}

impl Density for LogLaplace {
    fn log_density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = y.ln();
        laplace_log_pdf(z, self.location, self.scale) - z
    }

    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        laplace_cdf(y.ln(), self.location, self.scale)
    }

    fn point_prediction(&self) -> f64 {
        clamp_prediction(self.location.exp())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        laplace_sample(rng, self.location, self.scale).exp()
    }
}

/// Monotone map between values and the Laplace base variable:
/// `z = c·ln(b·(y + a))`, `y = exp(z/c)/b − a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    a: f64,
    b: f64,
    c: f64,
}

impl FlowParams {
    pub const SCALE_MIN: f64 = 0.1;
    pub const SCALE_MAX: f64 = 10.0;

    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let scale = Self::SCALE_MIN..=Self::SCALE_MAX;
        if !(a >= 0.0 && a.is_finite()) || !scale.contains(&b) || !scale.contains(&c) {
            return Err(Error::Config(format!(
                "flow parameters out of range: a={a}, b={b}, c={c}"
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn identity() -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            c: 1.0,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `g⁻¹(y)`; NaN outside the support `y > −a`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= -self.a {
            return f64::NAN;
        }
        self.c * (self.b * (y + self.a)).ln()
    }

    /// `g(z)`.
    pub fn forward(&self, z: f64) -> f64 {
        (z / self.c).exp() / self.b - self.a
    }

    /// `ln |d g⁻¹ / dy|`.
    pub fn log_jacobian(&self, y: f64) -> f64 {
        self.c.ln() - (y + self.a).ln()
    }
}

/// Laplace base distribution pushed through a [`FlowParams`] map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowLaplace {
    pub flow: FlowParams,
    pub location: f64,
    pub scale: f64,
}

impl FlowLaplace {
    pub fn new(flow: FlowParams, location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !location.is_finite() {
            return Err(Error::Numerical(format!(
                "flow-Laplace needs finite location and positive scale, got ({location}, {scale})"
            )));
        }
        Ok(Self {
            flow,
            location,
            scale,
        })
    }
}

impl Density for FlowLaplace {
    fn log_density(&self, y: f64) -> f64 {
        if y <= -self.flow.a {
            return f64::NEG_INFINITY;
        }
        let z = self.flow.inverse(y);
        laplace_log_pdf(z, self.location, self.scale) + self.flow.log_jacobian(y)
    }

    fn cdf(&self, y: f64) -> f64 {
        if y <= -self.flow.a {
            return 0.0;
        }
        laplace_cdf(self.flow.inverse(y), self.location, self.scale)
    }

    fn point_prediction(&self) -> f64 {
        clamp_prediction(self.flow.forward(self.location))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.flow
            .forward(laplace_sample(rng, self.location, self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_laplace_at_location() {
        let d = LogLaplace::new(100f64.ln(), 0.7).unwrap();
        let want = -(1.4f64).ln() - 100f64.ln();
        assert!((d.log_density(100.0) - want).abs() < 1e-12);
        assert_eq!(d.log_density(0.0), f64::NEG_INFINITY);
        assert_eq!(d.log_density(-3.0), f64::NEG_INFINITY);
    }

    #[test]
    fn log_laplace_median() {
        let d = LogLaplace::new(2e12f64.ln(), 1.0).unwrap();
        assert!((d.point_prediction() / 2e12 - 1.0).abs() < 1e-12);
        assert!((d.cdf(2e12) - 0.5).abs() < 1e-12);
        let tiny = LogLaplace::new(-5.0, 1.0).unwrap();
        assert_eq!(tiny.point_prediction(), 1.0);
    }

    #[test]
    fn flow_params_validate_ranges() {
        assert!(FlowParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(FlowParams::new(0.0, 0.05, 1.0).is_err());
        assert!(FlowParams::new(0.0, 1.0, 10.5).is_err());
        assert!(FlowParams::new(3.0, 0.1, 10.0).is_ok());
    }

    #[test]
    fn flow_outside_support_is_impossible() {
        let d = FlowLaplace::new(FlowParams::new(2.0, 1.0, 1.0).unwrap(), 0.0, 1.0).unwrap();
        assert_eq!(d.log_density(-2.0), f64::NEG_INFINITY);
        assert!(d.log_density(-1.5).is_finite());
    }
}
