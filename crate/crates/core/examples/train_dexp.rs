//! Trains a BiGRU encoder with the discrete-exponent head on a synthetic
//! corpus where each sentence template pins the number to its own decade,
//! then compares against the train-median baseline.
//!
//! cargo run --release --example train_dexp [n_train]

use std::time::Instant;

use numpred::corpus::{value_pool, EvalMode};
use numpred::evalkit::{baseline_constant, evaluate, BaselineKind, MetricsReport};
use numpred::pipeline::{synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let n_train: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5000);
    let preset = std::env::args().nth(2).unwrap_or_else(|| "contextual8".into());
    let spec = SynthSpec::preset(&preset)?;
    let train_set = synth_corpus(&spec, n_train, 1)?;
    let valid = synth_corpus(&spec, 500, 2)?;
    let test = synth_corpus(&spec, 500, 3)?;

    let cfg = RunConfig::default();
    let start = Instant::now();
    let outcome = train(&cfg, &train_set, &valid, &mut |r| {
        println!(
            "epoch {:>2}  train {:.4}  valid {:.4}  |g| {:.2}  ({:.1}s)",
            r.epoch,
            r.train_loss,
            r.valid_loss,
            r.max_grad_norm,
            start.elapsed().as_secs_f64()
        );
    })?;
    println!("best epoch {}", outcome.best_epoch);

    let pool = value_pool(&train_set);
    let median = baseline_constant(&pool, BaselineKind::Median)?;
    println!("{}", MetricsReport::table_header());
    let base = evaluate(&median, &test, EvalMode::Standard, &pool, 7)?;
    println!("{}", base.report.table_row("train-median"));
    let ev = evaluate(&outcome.model, &test, EvalMode::Standard, &pool, 7)?;
    println!("{}", ev.report.table_row("bigru-dexp"));
    if let Ok(path) = std::env::var("RECORDS") {
        let mut f = std::fs::File::create(path)?;
        numpred::evalkit::write_records_jsonl(&ev.records, &mut f)?;
    }
    Ok(())
}
