//! Synthetic corpora and their summary statistics.
//!
//! cargo run --example synth_stats

use numpred::corpus::compute_stats;
use numpred::pipeline::{synth_corpus, SynthSpec};

fn main() -> numpred::Result<()> {
    for name in SynthSpec::PRESETS {
        let corpus = synth_corpus(&SynthSpec::preset(name)?, 1000, 0)?;
        println!("== {name}\n{}\n{}", corpus[0].tokens.join(" "), compute_stats(&corpus)?.to_table());
    }
    Ok(())
}
