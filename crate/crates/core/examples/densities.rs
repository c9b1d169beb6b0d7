//! The four output distributions as plain value objects: log-density,
//! point prediction, samples and per-decade mass.
//!
//! cargo run --example densities

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numpred::heads::{
    Density, DiscreteExponent, FitSpace, FlowLaplace, FlowParams, GaussianMixture, GmmComponents,
    LogLaplace,
};
use std::sync::Arc;

fn show(name: &str, d: &dyn Density) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<String> = (0..4).map(|_| format!("{:.3e}", d.sample(&mut rng))).collect();
    let decades = d.decade_probabilities();
    let top = (0..decades.len()).max_by(|&a, &b| decades[a].total_cmp(&decades[b])).unwrap();
    println!(
        "{name:<8} log p(1e4) {:>9.3}  guess {:>10.3e}  top decade 1e{top} ({:.2})  samples {}",
        d.log_density(1e4),
        d.point_prediction(),
        decades[top],
        samples.join(" ")
    );
}

fn main() -> numpred::Result<()> {
    show("loglp", &LogLaplace::new(1e4f64.ln(), 1.0)?);
    show("flowlp", &FlowLaplace::new(FlowParams::new(5.0, 0.5, 1.5)?, 12.0, 0.8)?);

    // two plausible magnitudes: hundreds or hundreds of millions
    let mut log_pi = vec![-20.0; 17];
    log_pi[2] = 0.6f64.ln();
    log_pi[8] = 0.4f64.ln();
    show("dexp", &DiscreteExponent::new(&log_pi, &[0.3; 17], &[0.2; 17])?);

    let comps = GmmComponents::new(FitSpace::Log10, vec![2.5, 8.5], vec![0.3, 0.3], vec![0.5, 0.5])?;
    show("gmm", &GaussianMixture::new(Arc::new(comps), vec![0.7f64.ln(), 0.3f64.ln()])?);
    Ok(())
}
