use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochReport, RunConfig};
use crate::corpus::MaskPlan;
use crate::error::{Error, Result};
use crate::heads::EXPONENTS;
use crate::model::{CheckpointManifest, Model};
use crate::numtext::NormalizedSentence;

const POOL_FILE: &str = "train_values.json";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RunSummary {
    run: Option<RunConfig>,
    best_epoch: usize,
    history: Vec<EpochReport>,
}

/// A trained model plus what evaluation needs from its training run.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub run: Option<RunConfig>,
    /// Training values; random anomalies are drawn from here.
    pub pool: Vec<f64>,
    pub best_epoch: usize,
    pub history: Vec<EpochReport>,
    pub manifest: CheckpointManifest,
}

pub fn save_checkpoint(
    dir: &Path,
    model: &Model,
    run: &RunConfig,
    pool: &[f64],
    best_epoch: usize,
    history: &[EpochReport],
) -> Result<()> {
    let summary = RunSummary {
        run: Some(run.clone()),
        best_epoch,
        history: history.to_vec(),
    };
    model.save(dir, serde_json::to_value(summary)?)?;
    std::fs::write(dir.join(POOL_FILE), serde_json::to_string(pool)?)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let (model, manifest) = Model::load(dir)?;
    let summary: RunSummary = if manifest.extra.is_null() {
        RunSummary::default()
    } else {
        serde_json::from_value(manifest.extra.clone())?
    };
    let pool_path = dir.join(POOL_FILE);
    let pool = if pool_path.exists() {
        serde_json::from_str(&std::fs::read_to_string(pool_path)?)?
    } else {
        Vec::new()
    };
    Ok(Checkpoint {
        model,
        run: summary.run,
        pool,
        best_epoch: summary.best_epoch,
        history: summary.history,
        manifest,
    })
}

/// Masked prediction for one number of a sentence: every other number
/// stays visible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub slot: usize,
    pub y_hat: f64,
    /// Entry `r` is the mass on `10^r <= y < 10^(r+1)`.
    pub decades: [f64; EXPONENTS],
}

pub fn predict(model: &Model, sentence: &NormalizedSentence, slot: usize) -> Result<Prediction> {
    if slot >= sentence.numbers.len() {
        return Err(Error::Index {
            index: slot,
            len: sentence.numbers.len(),
        });
    }
    let mut plan = MaskPlan::all_context(sentence);
    plan.roles[slot] = crate::corpus::NumberRole::TargetHidden;
    let scorers = model.scorers(sentence, &plan)?;
    let (_, scorer) = &scorers[0];
    Ok(Prediction {
        slot,
        y_hat: scorer.point_prediction()?,
        decades: scorer.decade_probabilities()?,
    })
}

/// Keeps sentences with at least one dollar amount when `dollar_only`.
pub fn apply_data_filter(run: &RunConfig, sentences: Vec<NormalizedSentence>) -> Vec<NormalizedSentence> {
    if !run.data.dollar_only {
        return sentences;
    }
    sentences
        .into_iter()
        .filter(|s| (0..s.numbers.len()).any(|i| s.is_dollar(i)))
        .collect()
}
