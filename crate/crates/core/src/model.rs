//! A complete number predictor: vocabulary, embeddings, encoder and head.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::MaskPlan;
use crate::diffmath::{Array, Mode, ParamInfo, ParamStore, Tape, Var};
use crate::encoder::{target_state, Encoder, EncoderConfig, InputEmbedder, NumericKind, Vocab};
use crate::error::{Error, Result};
use crate::heads::{
    decade_representative, AnyDensity, Density, EmConfig, GmmComponents, HeadKind, OutputHead,
    EXPONENTS,
};
use crate::numtext::{decade, NormalizedSentence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub head: HeadKind,
    pub numeric: NumericKind,
    pub vocab_size: usize,
    /// Mixture pretraining; used by the `gmm` head only.
    pub gmm: EmConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            head: HeadKind::Dexp,
            numeric: NumericKind::Exponent,
            vocab_size: 8000,
            gmm: EmConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.vocab_size < 2 {
            return Err(Error::Config("vocabulary must hold the two special tokens".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
    embedder: InputEmbedder,
    encoder: Encoder,
    head: OutputHead,
}

/// How a model judges one target: its guess and a score for any candidate.
#[derive(Debug, Clone)]
pub enum TargetScorer<'m> {
    Density(AnyDensity),
    /// Discriminative logits; `h` is the target state.
    Logits { model: &'m Model, h: Array },
}

impl TargetScorer<'_> {
    /// Log-density for generative heads, logit for the discriminative head.
    pub fn score(&self, y: f64) -> Result<f64> {
        match self {
            TargetScorer::Density(d) => Ok(d.log_density(y)),
            TargetScorer::Logits { model, h } => {
                let OutputHead::Disc(head) = &model.head else {
                    unreachable!("logit scorers come from discriminative heads")
                };
                let mut tape = Tape::new(&model.params, Mode::Eval, 0);
                let hv = tape.constant(h.clone());
                let l = head.logit(&mut tape, hv, y)?;
                Ok(tape.scalar(l))
            }
        }
    }

    pub fn point_prediction(&self) -> Result<f64> {
        match self {
            TargetScorer::Density(d) => Ok(d.point_prediction()),
            TargetScorer::Logits { .. } => Ok(decade_representative(self.best_row()?)),
        }
    }

    /// Probability per decade row `floor(log10 y) = 0..=16`. The
    /// discriminative head gives a softmax over its exponent scores.
    pub fn decade_probabilities(&self) -> Result<[f64; EXPONENTS]> {
        match self {
            TargetScorer::Density(d) => Ok(d.decade_probabilities()),
            TargetScorer::Logits { model, h } => {
                let OutputHead::Disc(head) = &model.head else {
                    unreachable!("logit scorers come from discriminative heads")
                };
                let mut tape = Tape::new(&model.params, Mode::Eval, 0);
                let hv = tape.constant(h.clone());
                let s = head.exponent_scores(&mut tape, hv)?;
                let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = s.iter().map(|x| (x - max).exp()).sum();
                let mut out = [0.0; EXPONENTS];
                for (o, x) in out.iter_mut().zip(&s) {
                    *o = (x - max).exp() / z;
                }
                Ok(out)
            }
        }
    }

    fn best_row(&self) -> Result<usize> {
        match self {
            TargetScorer::Density(d) => Ok((d.argmax_exponent() - 1) as usize),
            TargetScorer::Logits { model, h } => {
                let OutputHead::Disc(head) = &model.head else {
                    unreachable!("logit scorers come from discriminative heads")
                };
                let mut tape = Tape::new(&model.params, Mode::Eval, 0);
                let hv = tape.constant(h.clone());
                head.predict_exponent(&mut tape, hv)
            }
        }
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub config: ModelConfig,
    pub vocab_file: String,
    pub params_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm: Option<GmmComponents>,
    pub params: Vec<ParamInfo>,
    /// Free-form training summary.
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl Model {
    /// Fresh parameters drawn from `seed`. The mixture head needs `components`.
    pub fn new(
        config: ModelConfig,
        vocab: Vocab,
        components: Option<GmmComponents>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let embedder = InputEmbedder::new(
            &mut params,
            vocab.len(),
            config.encoder.embed_dim(),
            config.numeric,
            &mut rng,
        );
        let encoder = Encoder::new(&mut params, &config.encoder, &mut rng)?;
        let head = OutputHead::new(
            config.head,
            &mut params,
            encoder.output_dim(),
            config.numeric,
            components.map(Arc::new),
            &mut rng,
        )?;
        Ok(Self {
            config,
            vocab,
            params,
            embedder,
            encoder,
            head,
        })
    }

    pub fn head(&self) -> &OutputHead {
        &self.head
    }

    pub fn head_kind(&self) -> HeadKind {
        self.head.kind()
    }

    /// Per-position encoding `H` for the sentence under `plan`.
    pub fn encode(&self, tape: &mut Tape, sentence: &NormalizedSentence, plan: &MaskPlan) -> Result<Var> {
        let x = self.embedder.embed(tape, &self.vocab, sentence, plan)?;
        self.encoder.encode(tape, x)
    }

    /// Summed loss over the plan's targets and the number of targets.
    /// `negative` draws a fake candidate for the discriminative head.
    pub fn loss(
        &self,
        tape: &mut Tape,
        sentence: &NormalizedSentence,
        plan: &MaskPlan,
        negative: &mut dyn FnMut(f64) -> f64,
    ) -> Result<(Var, usize)> {
        let h = self.encode(tape, sentence, plan)?;
        let mut total: Option<Var> = None;
        let mut count = 0;
        for slot in plan.targets() {
            let (pos, y) = sentence.numbers[slot];
            let hk = target_state(tape, h, pos)?;
            let neg = (self.head.kind() == HeadKind::Disc).then(|| negative(y));
            let l = self.head.loss(tape, hk, y, neg)?;
            total = Some(match total {
                Some(t) => tape.add(t, l)?,
                None => l,
            });
            count += 1;
        }
        let total = total.ok_or(Error::Empty("mask plan targets"))?;
        Ok((total, count))
    }

    /// Evaluation-mode scorers for every target in `plan`, as
    /// `(slot, scorer)` pairs.
    pub fn scorers(&self, sentence: &NormalizedSentence, plan: &MaskPlan) -> Result<Vec<(usize, TargetScorer<'_>)>> {
        let mut tape = Tape::new(&self.params, Mode::Eval, 0);
        let h = self.encode(&mut tape, sentence, plan)?;
        let mut out = Vec::new();
        for slot in plan.targets() {
            let (pos, _) = sentence.numbers[slot];
            let hk = target_state(&mut tape, h, pos)?;
            let scorer = match self.head.density(&mut tape, hk)? {
                Some(d) => TargetScorer::Density(d),
                None => TargetScorer::Logits {
                    model: self,
                    h: tape.value(hk).clone(),
                },
            };
            out.push((slot, scorer));
        }
        Ok(out)
    }

    /// Biases output layers toward the marginal distribution of `values`.
    pub fn init_prior(&mut self, values: &[f64]) {
        self.head.init_prior(&mut self.params, values);
    }

    pub fn save(&self, dir: &Path, extra: serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = CheckpointManifest {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            vocab_file: "vocab.txt".into(),
            params_file: "params.bin".into(),
            gmm: self.head.components().map(|c| (**c).clone()),
            params: self.params.infos().to_vec(),
            extra,
        };
        self.vocab.save(&dir.join(&manifest.vocab_file))?;
        std::fs::write(dir.join(&manifest.params_file), self.params.to_le_bytes())?;
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(Self, CheckpointManifest)> {
        let manifest: CheckpointManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not supported",
                manifest.version
            )));
        }
        let vocab = Vocab::load(&dir.join(&manifest.vocab_file))?;
        let mut model = Self::new(manifest.config.clone(), vocab, manifest.gmm.clone(), 0)?;
        if model.params.infos() != manifest.params.as_slice() {
            return Err(Error::Config(
                "checkpoint parameters do not match the configured architecture".into(),
            ));
        }
        let bytes = std::fs::read(dir.join(&manifest.params_file))?;
        model.params.load_le_bytes(&bytes)?;
        Ok((model, manifest))
    }
}

/// Row `floor(log10 y)` used for decade tables.
pub fn decade_row(y: f64) -> usize {
    decade(y).clamp(0, EXPONENTS as i32 - 1) as usize
}
