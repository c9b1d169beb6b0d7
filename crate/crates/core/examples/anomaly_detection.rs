//! Numeric anomaly detection: string edits and random substitutions, ranked
//! against the true value by a trained model's density.
//!
//! cargo run --release --example anomaly_detection

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numpred::corpus::{value_pool, EvalMode};
use numpred::evalkit::{anomaly_random, anomaly_string, evaluate, AnomalyKind};
use numpred::pipeline::{synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let spec = SynthSpec::preset("contextual8")?;
    let train_set = synth_corpus(&spec, 2000, 1)?;
    let valid = synth_corpus(&spec, 300, 2)?;
    let test = synth_corpus(&spec, 300, 3)?;
    let pool = value_pool(&train_set);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for y in [7.0, 42.0, 1250.5, 3.2e7] {
        let s = anomaly_string(y, &pool, &mut rng);
        let r = anomaly_random(&pool, y, &mut rng);
        println!("{y:>12}  string {:>14} ({:?})  random {:>14.1}", s.value, s.op, r);
    }

    let mut cfg = RunConfig::default();
    cfg.train.max_epochs = 4;
    let model = train(&cfg, &train_set, &valid, &mut |_| {})?.model;
    let ev = evaluate(&model, &test, EvalMode::Standard, &pool, 9)?;
    println!("\nr-AUC {:.3}  s-AUC {:.3}", ev.report.r_auc.unwrap(), ev.report.s_auc.unwrap());
    for r in ev.records.iter().take(5) {
        let a = r.anomalies.iter().find(|a| a.kind == AnomalyKind::String).unwrap();
        println!(
            "  true {:>14.2} log p {:>8.2} | edit {:>14.2} log p {:>8.2}",
            r.y,
            r.log_p_true.unwrap(),
            a.value,
            a.log_p.unwrap()
        );
    }
    Ok(())
}
