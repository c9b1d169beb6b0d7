//! Splits, masking plans and corpus statistics.

mod masking;
mod splits;
mod stats;

pub use masking::{
    eval_rng, plan_masks, sample_eval_target, EvalMode, MaskConfig, MaskPlan, NumberRole,
};
pub use splits::{build_splits, SplitManifest, SplitRatios, Splits};
pub use stats::{compute_stats, nearest_rank, CorpusStats, Quantiles};

/// All values in the corpus, in order of appearance.
pub fn value_pool(sentences: &[crate::numtext::NormalizedSentence]) -> Vec<f64> {
    sentences.iter().flat_map(|s| s.values()).collect()
}
