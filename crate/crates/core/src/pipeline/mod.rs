//! Configuration, training, data files and synthetic corpora.

mod checkpoint;
mod config;
mod io;
mod synth;
mod train;

pub use checkpoint::{
    apply_data_filter, load_checkpoint, predict, save_checkpoint, Checkpoint, Prediction,
};
pub use config::{DataConfig, RunConfig, TrainConfig};
pub use io::{read_jsonl, read_text_or_jsonl, write_jsonl};
pub use synth::{synth_corpus, synth_corpus_labeled, SlotDist, SynthSpec, Template};
pub use train::{
    check_model_gradients,    derive_seed, init_model, train, validation_loss, EarlyStopping, EpochReport, StopDecision,
    TrainOutcome,
};
