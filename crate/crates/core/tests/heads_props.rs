mod common;

use std::f64::consts::LN_10;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dexp_breaks, flow_breaks, integrate, linspace, log_space_mass};
use numpred::heads::{
    Density, DiscreteExponent, FitSpace, FlowLaplace, FlowParams, GaussianMixture, GmmComponents,
    LogLaplace, EXPONENTS,
};

fn dexp_strategy() -> impl Strategy<Value = DiscreteExponent> {
    (
        prop::collection::vec(-4.0..4.0f64, EXPONENTS),
        prop::collection::vec(0.1..1.0f64, EXPONENTS),
        prop::collection::vec(0.01..1.0f64, EXPONENTS),
    )
        .prop_map(|(l, m, s)| DiscreteExponent::new(&l, &m, &s).unwrap())
}

/// Median drawn in [1, 1e16]. The spread in `ln(y + a)` stays below about
/// 2.1: further out, `y + a` rounds to zero at `y = -a` and the tail past
/// that point is lost to the quadrature.
fn flow_strategy() -> impl Strategy<Value = FlowLaplace> {
    (0.0..50.0f64, 0.1..10.0f64, 0.1..10.0f64, 0.0..16.0f64, 0.05..0.7f64).prop_map(
        |(a, b, c, med, spread)| {
            let flow = FlowParams::new(a, b, c).unwrap();
            let mu = flow.inverse(10f64.powf(med));
            FlowLaplace::new(flow, mu, 3.0 * spread * c).unwrap()
        },
    )
}

fn gmm_strategy() -> impl Strategy<Value = GaussianMixture> {
    (1usize..6)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.0..16.0f64, k),
                prop::collection::vec(0.05..2.0f64, k),
                prop::collection::vec(-3.0..3.0f64, k),
            )
        })
        .prop_map(|(m, s, w)| {
            let k = m.len();
            let c = GmmComponents::new(FitSpace::Log10, m, s, vec![1.0 / k as f64; k]).unwrap();
            GaussianMixture::new(Arc::new(c), w).unwrap()
        })
}

fn dexp_mass(d: &DiscreteExponent) -> f64 {
    log_space_mass(|y| d.log_density(y), 0.0, &dexp_breaks(d, 1, EXPONENTS))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loglp_integrates_to_one(mu in -5.0..40.0f64, s in 0.2..3.0f64) {
        let d = LogLaplace::new(mu, s).unwrap();
        let mut b = linspace(mu - 60.0 * s, mu, 8);
        b.extend(linspace(mu, mu + 60.0 * s, 8).into_iter().skip(1));
        let mass = log_space_mass(|y| d.log_density(y), 0.0, &b);
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
    }

    #[test]
    fn flowlp_integrates_to_one(d in flow_strategy()) {
        let mass = log_space_mass(|y| d.log_density(y), -d.flow.a(), &flow_breaks(&d));
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
    }

    #[test]
    fn dexp_integrates_to_one_with_decade_masses(d in dexp_strategy()) {
        prop_assert!((dexp_mass(&d) - 1.0).abs() < 1e-6);
        let pi = d.probabilities();
        for e in 1..=EXPONENTS {
            let m = log_space_mass(|y| d.log_density(y), 0.0, &dexp_breaks(&d, e, e));
            prop_assert!((m - pi[e - 1]).abs() < 1e-6, "decade {} mass {} vs {}", e, m, pi[e - 1]);
        }
        let dp = d.decade_probabilities();
        for (a, b) in dp.iter().zip(&pi) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gmm_integrates_to_one(d in gmm_strategy()) {
        let mass = log_space_mass(|y| d.log_density(y), 0.0, &linspace(-40.0 * LN_10, 60.0 * LN_10, 200));
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
    }

    #[test]
    fn raw_gmm_integrates_over_the_line(m in prop::collection::vec(-50.0..50.0f64, 1..4), s in 0.5..5.0f64) {
        let k = m.len();
        let c = GmmComponents::new(FitSpace::Raw, m, vec![s; k], vec![1.0 / k as f64; k]).unwrap();
        let d = GaussianMixture::new(Arc::new(c), vec![0.0; k]).unwrap();
        let mass = integrate(|y| d.log_density(y).exp(), &linspace(-200.0, 200.0, 40), 2048);
        prop_assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flow_round_trip(a in 0.0..100.0f64, b in 0.1..10.0f64, c in 0.1..10.0f64, u in 0.0..16.0f64) {
        let f = FlowParams::new(a, b, c).unwrap();
        let y = 10f64.powf(u);
        let back = f.forward(f.inverse(y));
        prop_assert!(((back - y) / y).abs() < 1e-9);
    }

    #[test]
    fn identity_flow_matches_loglp(mu in -5.0..40.0f64, s in 0.1..3.0f64, u in -2.0..18.0f64) {
        let y = 10f64.powf(u);
        let l = LogLaplace::new(mu, s).unwrap().log_density(y);
        let f = FlowLaplace::new(FlowParams::identity(), mu, s).unwrap().log_density(y);
        prop_assert!((l - f).abs() < 1e-9);
    }

    #[test]
    fn predictions_and_samples_stay_in_range(d in dexp_strategy(), seed in 0u64..1000) {
        let p = d.point_prediction();
        prop_assert!((1.0..=1e16).contains(&p));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let y = d.sample(&mut rng);
            prop_assert!((1.0..1e17).contains(&y));
            prop_assert!(d.log_density(y).is_finite());
        }
    }

    #[test]
    fn cdf_is_monotone(d in flow_strategy(), a in 0.0..16.0f64, b in 0.0..16.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(d.cdf(10f64.powf(lo)) <= d.cdf(10f64.powf(hi)) + 1e-15);
    }

    #[test]
    fn dexp_point_prediction_decade_matches_argmax(d in dexp_strategy()) {
        let e = d.argmax_exponent();
        let p = d.point_prediction();
        prop_assert_eq!(numpred::numtext::decade(p), e - 1);
    }
}
