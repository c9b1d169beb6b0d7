mod common;

use common::{gauss_legendre, integrate, linspace};

#[test]
fn quadrature_integrates_polynomials_and_gaussians() {
    let (x, w) = gauss_legendre(5);
    let sum: f64 = w.iter().sum();
    assert!((sum - 2.0).abs() < 1e-14);
    // exact for degree 9
    let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
    assert!((p - 2.0 / 9.0).abs() < 1e-14);
    let g = integrate(|t| (-t * t / 2.0).exp(), &linspace(-12.0, 12.0, 4), 2048);
    assert!((g - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    let (x, w) = gauss_legendre(2048);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-10);
    assert!(x.windows(2).all(|p| p[0] < p[1]));
}
