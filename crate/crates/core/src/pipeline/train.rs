use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::corpus::{eval_rng, plan_masks, sample_eval_target, value_pool, EvalMode};
use crate::corpus::MaskPlan;
use crate::diffmath::{finite_diff_check, GradCheckOptions, GradCheckReport, Gradients, Mode, Optimizer, Tape};
use crate::encoder::Vocab;
use crate::error::{Error, Result};
use crate::evalkit::anomaly_random;
use crate::heads::{gmm_pretrain_em, HeadKind};
use crate::model::Model;
use crate::numtext::NormalizedSentence;

/// Mixes a base seed with tags into an independent stream seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut x = seed;
    for &t in tags {
        // splitmix64 finalizer
        x = x.wrapping_add(t.wrapping_add(0x9e37_79b9_7f4a_7c15));
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops after `patience` consecutive epochs without a new best loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    bad: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.bad = 0;
            return StopDecision::Improved;
        }
        self.bad += 1;
        if self.bad >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss per target over the epoch's training batches.
    pub train_loss: f64,
    /// Mean loss per target on the validation split.
    pub valid_loss: f64,
    /// Largest pre-clipping gradient norm seen.
    pub max_grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub model: Model,
    pub history: Vec<EpochReport>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Mean validation loss per target, with one fixed hidden target per
/// sentence.
pub fn validation_loss(model: &Model, valid: &[NormalizedSentence], pool: &[f64], seed: u64) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0;
    for s in valid {
        let mut rng = eval_rng(s, seed);
        let plan = match sample_eval_target(s, &mut rng, EvalMode::Standard) {
            Ok(p) => p,
            Err(Error::Skip(_)) => continue,
            Err(e) => return Err(e),
        };
        let mut tape = Tape::new(&model.params, Mode::Eval, 0);
        let (loss, n) = model.loss(&mut tape, s, &plan, &mut |y| anomaly_random(pool, y, &mut rng))?;
        total += tape.scalar(loss);
        count += n;
    }
    if count == 0 {
        return Err(Error::Empty("validation targets"));
    }
    Ok(total / count as f64)
}

/// Builds a fresh model (vocabulary, mixture components and output priors
/// from `train`).
pub fn init_model(cfg: &RunConfig, train: &[NormalizedSentence]) -> Result<Model> {
    let pool = value_pool(train);
    let vocab = Vocab::build(train, cfg.model.vocab_size);
    let components = if cfg.model.head == HeadKind::Gmm {
        let mut em = cfg.model.gmm.clone();
        em.seed = derive_seed(cfg.seed, &[em.seed, 1]);
        Some(gmm_pretrain_em(&pool, &em)?.components)
    } else {
        None
    };
    let mut model = Model::new(cfg.model.clone(), vocab, components, cfg.seed)?;
    model.init_prior(&pool);
    Ok(model)
}

/// Masked-number training with early stopping on validation loss.
/// `on_epoch` sees each epoch's summary as it completes.
pub fn train(
    cfg: &RunConfig,
    train: &[NormalizedSentence],
    valid: &[NormalizedSentence],
    on_epoch: &mut dyn FnMut(&EpochReport),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if valid.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let pool = value_pool(train);
    let mut model = init_model(cfg, train)?;
    let clip = (cfg.train.clip_norm > 0.0).then_some(cfg.train.clip_norm);
    let mut opt = Optimizer::new(cfg.train.optimizer, cfg.rates(), clip);
    let mut stopper = EarlyStopping::new(cfg.train.patience);
    let mut best = model.params.clone();
    let mut history = Vec::new();
    let mut grads = Gradients::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopped_early = false;

    for epoch in 1..=cfg.train.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[2, epoch as u64]));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_targets = 0;
        let mut max_norm: f64 = 0.0;
        for (b, batch) in order.chunks(cfg.train.batch_size).enumerate() {
            grads.clear();
            let mut batch_loss = 0.0;
            let mut batch_targets = 0;
            for &i in batch {
                let s = &train[i];
                let plan = plan_masks(s, &mut rng, &cfg.train.mask, &pool)?;
                let mut tape = Tape::new(&model.params, Mode::Train, rng.random());
                let (loss, n) =
                    model.loss(&mut tape, s, &plan, &mut |y| anomaly_random(&pool, y, &mut rng))?;
                let lv = tape.scalar(loss);
                if !lv.is_finite() {
                    return Err(Error::Numerical(format!(
                        "training diverged: loss {lv} at epoch {epoch}, batch {b}, sentence {i}"
                    )));
                }
                batch_loss += lv;
                batch_targets += n;
                tape.backward_into(loss, &mut grads)?;
            }
            grads.scale(1.0 / batch_targets as f64);
            if !grads.is_finite() {
                return Err(Error::Numerical(format!(
                    "training diverged: non-finite gradient at epoch {epoch}, batch {b}"
                )));
            }
            max_norm = max_norm.max(opt.step(&mut model.params, &grads));
            epoch_loss += batch_loss;
            epoch_targets += batch_targets;
        }
        let valid_loss = validation_loss(&model, valid, &pool, cfg.seed)?;
        if !valid_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "training diverged: validation loss {valid_loss} after epoch {epoch}"
            )));
        }
        let report = EpochReport {
            epoch,
            train_loss: epoch_loss / epoch_targets as f64,
            valid_loss,
            max_grad_norm: max_norm,
        };
        on_epoch(&report);
        history.push(report);
        match stopper.observe(epoch, valid_loss) {
            StopDecision::Improved => best = model.params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    model.params = best;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch: stopper.best_epoch(),
        stopped_early,
    })
}

/// Finite-difference check of the full model loss on one sentence. The
/// discriminative head gets a fixed negative a few decades off the truth.
pub fn check_model_gradients(
    model: &mut Model,
    sentence: &NormalizedSentence,
    plan: &MaskPlan,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let frozen = model.clone();
    let negative = |y: f64| if y < 1e8 { y * 1e3 } else { y / 1e3 };
    finite_diff_check(
        &mut model.params,
        |tape| Ok(frozen.loss(tape, sentence, plan, &mut |y| negative(y))?.0),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_rule() {
        let mut s = EarlyStopping::new(3);
        let losses = [5.0, 4.0, 4.1, 4.2, 4.3, 1.0];
        let mut stopped_at = None;
        for (i, &l) in losses.iter().enumerate() {
            if s.observe(i + 1, l) == StopDecision::Stop {
                stopped_at = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped_at, Some(5));
        assert_eq!(s.best_epoch(), 2);
        assert_eq!(s.best_loss(), 4.0);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[2, 1]), derive_seed(1, &[2, 2]));
        assert_eq!(derive_seed(1, &[2, 1]), derive_seed(1, &[2, 1]));
    }
}
