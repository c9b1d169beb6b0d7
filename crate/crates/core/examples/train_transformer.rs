//! A small from-scratch transformer encoder with separate learning rates
//! for the encoder body and the embeddings and head.
//!
//! cargo run --release --example train_transformer

use numpred::corpus::{value_pool, EvalMode};
use numpred::encoder::EncoderKind;
use numpred::evalkit::{evaluate, MetricsReport};
use numpred::heads::HeadKind;
use numpred::pipeline::{synth_corpus, train, RunConfig, SynthSpec};

fn main() -> numpred::Result<()> {
    let spec = SynthSpec::preset("contextual8")?;
    let train_set = synth_corpus(&spec, 1000, 1)?;
    let valid = synth_corpus(&spec, 200, 2)?;
    let test = synth_corpus(&spec, 300, 3)?;

    let mut cfg = RunConfig::default();
    cfg.model.encoder.kind = EncoderKind::Transformer;
    let t = &mut cfg.model.encoder.transformer;
    t.layers = 2;
    t.model_dim = 64;
    t.ff_dim = 128;
    cfg.train.body_lr = 1e-3;
    cfg.train.max_epochs = 4;
    let pool = value_pool(&train_set);
    println!("{}", MetricsReport::table_header());
    for head in [HeadKind::Dexp, HeadKind::Disc] {
        cfg.model.head = head;
        let model = train(&cfg, &train_set, &valid, &mut |r| {
            eprintln!("{head:?} epoch {} valid {:.4}", r.epoch, r.valid_loss)
        })?
        .model;
        let ev = evaluate(&model, &test, EvalMode::Standard, &pool, 0)?;
        println!("{}", ev.report.table_row(&format!("transformer-{head:?}").to_lowercase()));
    }
    Ok(())
}
