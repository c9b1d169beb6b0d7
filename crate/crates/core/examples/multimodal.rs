//! Context-free bimodal corpus (decades 2 and 8 with equal mass): compares
//! unimodal log-shaped heads against the discrete-exponent head.
//!
//! cargo run --release --example multimodal

use numpred::corpus::{value_pool, EvalMode};
use numpred::evalkit::{evaluate, MetricsReport};
use numpred::heads::HeadKind;
use numpred::pipeline::{synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let spec = SynthSpec::preset("bimodal")?;
    let train_set = synth_corpus(&spec, 2000, 21)?;
    let valid = synth_corpus(&spec, 300, 22)?;
    let test = synth_corpus(&spec, 500, 23)?;
    let pool = value_pool(&train_set);
    println!("{}{:>12}", MetricsReport::table_header(), "valid NLL");
    for head in [HeadKind::Loglp, HeadKind::Flowlp, HeadKind::Dexp, HeadKind::Gmm] {
        let mut cfg = RunConfig::default();
        cfg.model.head = head;
        let outcome = train(&cfg, &train_set, &valid, &mut |_| {})?;
        let nll = outcome.history[outcome.best_epoch - 1].valid_loss;
        let ev = evaluate(&outcome.model, &test, EvalMode::Standard, &pool, 5)?;
        println!("{}{:>12.3}", ev.report.table_row(&format!("{head:?}").to_lowercase()), nll);
    }
    Ok(())
}
