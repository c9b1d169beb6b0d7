//! Document-level splits, training mask plans and evaluation targets.
//!
//! cargo run --example masking

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numpred::corpus::{
    build_splits, eval_rng, plan_masks, sample_eval_target, value_pool, EvalMode, MaskConfig,
    SplitRatios,
};
use numpred::pipeline::{synth_corpus, SynthSpec};

fn main() -> numpred::Result<()> {
    let corpus = synth_corpus(&SynthSpec::preset("linked")?, 100, 3)?;
    let splits = build_splits(corpus, SplitRatios::default(), 7)?;
    println!(
        "train {}  valid {}  test {}",
        splits.train.len(),
        splits.valid.len(),
        splits.test.len()
    );

    let pool = value_pool(&splits.train);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = &splits.train[0];
    println!("\n{}", s.tokens.join(" "));
    for _ in 0..5 {
        let plan = plan_masks(s, &mut rng, &MaskConfig::default(), &pool)?;
        println!("  train plan: {:?}", plan.roles);
    }
    for mode in [EvalMode::Standard, EvalMode::AllMasked] {
        let plan = sample_eval_target(s, &mut eval_rng(s, 0), mode)?;
        println!("  {mode:?} eval plan: {:?}", plan.roles);
    }
    Ok(())
}
