use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtext::NormalizedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let r = [self.train, self.valid, self.test];
        if r.iter().any(|x| !(0.0..=1.0).contains(x)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must be in [0, 1] and sum to 1, got {r:?}"
            )));
        }
        Ok(())
    }
}

/// Indices into the input corpus for each split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<NormalizedSentence>,
    pub valid: Vec<NormalizedSentence>,
    pub test: Vec<NormalizedSentence>,
    pub manifest: SplitManifest,
}

/// Shuffles and partitions the corpus. Sentences sharing a document id stay
/// together; sentences without one are their own unit.
pub fn build_splits(
    sentences: Vec<NormalizedSentence>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Splits> {
    ratios.validate()?;
    if sentences.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut by_doc: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, s) in sentences.iter().enumerate() {
        match s.doc {
            Some(d) => {
                let g = *by_doc.entry(d).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(i);
            }
            None => groups.push(vec![i]),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let g = groups.len() as f64;
    let n_train = ((ratios.train * g).round() as usize).min(groups.len());
    let n_valid = ((ratios.valid * g).round() as usize).min(groups.len() - n_train);

    let flatten = |gs: &[Vec<usize>]| gs.iter().flatten().copied().collect::<Vec<_>>();
    let manifest = SplitManifest {
        seed,
        train: flatten(&groups[..n_train]),
        valid: flatten(&groups[n_train..n_train + n_valid]),
        test: flatten(&groups[n_train + n_valid..]),
    };
    let mut slots: Vec<Option<NormalizedSentence>> = sentences.into_iter().map(Some).collect();
    let mut take = |ids: &[usize]| -> Vec<NormalizedSentence> {
        ids.iter().map(|&i| slots[i].take().expect("index used once")).collect()
    };
    Ok(Splits {
        train: take(&manifest.train),
        valid: take(&manifest.valid),
        test: take(&manifest.test),
        manifest,
    })
}
