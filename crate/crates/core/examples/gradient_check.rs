//! End-to-end finite-difference gradient checks: both encoders with every
//! output head, on one 12-token sentence.
//!
//! cargo run --release --example gradient_check

use numpred::corpus::{MaskPlan, NumberRole};
use numpred::diffmath::{GradCheckOptions, Mode};
use numpred::encoder::{EncoderConfig, EncoderKind, TransformerConfig, Vocab};
use numpred::heads::{gmm_pretrain_em, EmConfig, HeadKind};
use numpred::model::{Model, ModelConfig};
use numpred::numtext::NormalizedSentence;
use numpred::pipeline::check_model_gradients;

fn main() -> numpred::Result<()> {
    let words = "the firm raised [#MASK] dollars from [#MASK] investors in the spring .";
    let tokens: Vec<String> = words.split(' ').map(String::from).collect();
    let sentence = NormalizedSentence::new(tokens, vec![(3, 3.2e7), (6, 12.0)]);
    let vocab = Vocab::build(std::slice::from_ref(&sentence), 100);
    let mut plan = MaskPlan::all_context(&sentence);
    plan.roles[0] = NumberRole::TargetHidden;
    let components = gmm_pretrain_em(
        &[3.0, 40.0, 500.0, 7e3, 2e6, 3e7, 1e9],
        &EmConfig {
            k: 3,
            ..EmConfig::default()
        },
    )?
    .components;

    let opts = GradCheckOptions {
        mode: Mode::Train,
        seed: 3,
        max_per_param: Some(12),
        ..GradCheckOptions::default()
    };
    for kind in [EncoderKind::Bigru, EncoderKind::Transformer] {
        for head in [HeadKind::Loglp, HeadKind::Flowlp, HeadKind::Dexp, HeadKind::Gmm, HeadKind::Disc] {
            let mut encoder = EncoderConfig {
                kind,
                transformer: TransformerConfig {
                    layers: 2,
                    heads: 2,
                    model_dim: 16,
                    ff_dim: 32,
                    dropout: 0.1,
                },
                ..EncoderConfig::default()
            };
            encoder.bigru.embed_dim = 16;
            encoder.bigru.hidden = 12;
            let cfg = ModelConfig {
                encoder,
                head,
                ..ModelConfig::default()
            };
            let comps = (head == HeadKind::Gmm).then(|| components.clone());
            let mut model = Model::new(cfg, vocab.clone(), comps, 1)?;
            let report = check_model_gradients(&mut model, &sentence, &plan, &opts)?;
            println!(
                "{:<12} {:<7} checked {:>5}  max rel err {:.2e}  {}",
                format!("{kind:?}"),
                format!("{head:?}"),
                report.checked,
                report.max_error,
                if report.passed() { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
