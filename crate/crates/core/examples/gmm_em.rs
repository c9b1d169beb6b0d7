//! Fits mixture components to a sample of magnitudes with EM and prints the
//! recovered components and the log-likelihood trace.
//!
//! cargo run --release --example gmm_em

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use numpred::heads::{gmm_pretrain_em, EmConfig};

fn main() -> numpred::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut values = Vec::new();
    for (mean, sd, n) in [(2.0, 0.3, 400), (5.0, 0.5, 300), (9.0, 0.4, 300)] {
        let d = Normal::new(mean, sd).unwrap();
        values.extend((0..n).map(|_| 10f64.powf(d.sample(&mut rng)).clamp(1.0, 1e16)));
    }
    let cfg = EmConfig {
        k: 3,
        iters: 50,
        ..EmConfig::default()
    };
    let fit = gmm_pretrain_em(&values, &cfg)?;
    let c = &fit.components;
    for i in 0..c.k() {
        println!(
            "component {i}: mean {:.3}  sd {:.3}  weight {:.3}  (log10 space)",
            c.means[i], c.sigmas[i], c.weights[i]
        );
    }
    let ll = &fit.log_likelihood;
    println!("log-likelihood {:.2} -> {:.2} over {} iterations", ll[0], ll[ll.len() - 1], ll.len());
    Ok(())
}
