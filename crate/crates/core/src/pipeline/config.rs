use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{MaskConfig, SplitRatios};
use crate::diffmath::{GroupRates, OptimizerKind};
use crate::encoder::EncoderKind;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub optimizer: OptimizerKind,
    /// Global gradient-norm limit; `0` disables clipping.
    pub clip_norm: f64,
    /// Single learning rate (recurrent encoder).
    pub lr: f64,
    /// Encoder-layer rate when the transformer is used.
    pub body_lr: f64,
    /// Embedding and head rate when the transformer is used.
    pub head_lr: f64,
    pub mask: MaskConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 10,
            patience: 3,
            optimizer: OptimizerKind::Adam,
            clip_norm: 5.0,
            lr: 2e-2,
            body_lr: 3e-5,
            head_lr: 1e-2,
            mask: MaskConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Keep only sentences with a number preceded by `$`.
    pub dollar_only: bool,
    pub splits: SplitRatios,
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.mask.validate()?;
        self.data.splits.validate()?;
        let t = &self.train;
        if t.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if t.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if [t.lr, t.body_lr, t.head_lr].iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(t.clip_norm >= 0.0) {
            return Err(Error::Config("clip norm must be nonnegative".into()));
        }
        Ok(())
    }

    /// Two rate groups for the transformer, one rate otherwise.
    pub fn rates(&self) -> GroupRates {
        match self.model.encoder.kind {
            EncoderKind::Transformer => GroupRates {
                body: self.train.body_lr,
                head: self.train.head_lr,
            },
            EncoderKind::Bigru => GroupRates::single(self.train.lr),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::HeadKind;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let partial = RunConfig::from_toml("seed = 4\n[model]\nhead = \"flowlp\"\n").unwrap();
        assert_eq!(partial.seed, 4);
        assert_eq!(partial.model.head, HeadKind::Flowlp);
        assert_eq!(partial.train.batch_size, 32);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[train]\nbatch_size = 0\n").is_err());
        assert!(RunConfig::from_toml("[train]\npatience = 0\n").is_err());
        assert!(RunConfig::from_toml("[model]\nhead = \"nope\"\n").is_err());
        assert!(RunConfig::from_toml("[model.encoder.bigru]\ndropout = 1.0\n").is_err());
    }
}
