//! Saves a trained model with its run configuration and reloads it; the
//! reloaded model reproduces the metrics exactly.
//!
//! cargo run --release --example checkpoint

use numpred::corpus::{value_pool, EvalMode};
use numpred::evalkit::evaluate;
use numpred::pipeline::{load_checkpoint, save_checkpoint, synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let spec = SynthSpec::preset("two-template")?;
    let train_set = synth_corpus(&spec, 400, 1)?;
    let valid = synth_corpus(&spec, 100, 2)?;
    let mut cfg = RunConfig::default();
    cfg.model.head = numpred::heads::HeadKind::Flowlp;
    cfg.train.max_epochs = 2;
    let outcome = train(&cfg, &train_set, &valid, &mut |_| {})?;
    let pool = value_pool(&train_set);

    let dir = std::env::temp_dir().join("numpred-checkpoint-example");
    save_checkpoint(&dir, &outcome.model, &cfg, &pool, outcome.best_epoch, &outcome.history)?;
    let ckpt = load_checkpoint(&dir)?;

    let before = evaluate(&outcome.model, &valid, EvalMode::Standard, &pool, 1)?.report;
    let after = evaluate(&ckpt.model, &valid, EvalMode::Standard, &ckpt.pool, 1)?.report;
    println!("saved to {}", dir.display());
    println!("before: {before:?}\nafter:  {after:?}\nidentical: {}", before == after);
    Ok(())
}
