//! One-vs-all ablation: a corpus where one number's decade is fixed by the
//! other's. Scoring with the other number visible versus hidden shows how
//! much the model leans on numeric context.
//!
//! cargo run --release --example one_vs_all

use numpred::corpus::{value_pool, EvalMode};
use numpred::evalkit::{evaluate, MetricsReport};
use numpred::pipeline::{synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let spec = SynthSpec::preset("linked")?;
    let train_set = synth_corpus(&spec, 3000, 11)?;
    let valid = synth_corpus(&spec, 300, 12)?;
    let test = synth_corpus(&spec, 500, 13)?;
    let cfg = RunConfig::default();
    let outcome = train(&cfg, &train_set, &valid, &mut |r| {
        println!("epoch {:>2}  valid {:.4}", r.epoch, r.valid_loss)
    })?;
    let pool = value_pool(&train_set);
    println!("{}", MetricsReport::table_header());
    for (name, mode) in [("standard", EvalMode::Standard), ("all-masked", EvalMode::AllMasked)] {
        let ev = evaluate(&outcome.model, &test, mode, &pool, 5)?;
        println!("{}", ev.report.table_row(name));
    }
    Ok(())
}
