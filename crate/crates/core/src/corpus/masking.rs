use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtext::NormalizedSentence;

/// What the model sees, and whether it is scored, at one number position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NumberRole {
    /// Visible context; not scored.
    Context,
    /// Value withheld from the input; not scored.
    ContextHidden,
    /// Value withheld; scored.
    TargetHidden,
    /// Input shows the substitute; the true value is scored.
    TargetRandom(f64),
    /// Input shows the true value; scored.
    TargetKept,
}

impl NumberRole {
    pub fn is_target(&self) -> bool {
        matches!(
            self,
            NumberRole::TargetHidden | NumberRole::TargetRandom(_) | NumberRole::TargetKept
        )
    }

    /// Value fed to the numeric embedding, if any.
    pub fn visible_value(&self, true_value: f64) -> Option<f64> {
        match *self {
            NumberRole::Context | NumberRole::TargetKept => Some(true_value),
            NumberRole::TargetRandom(v) => Some(v),
            NumberRole::ContextHidden | NumberRole::TargetHidden => None,
        }
    }
}

/// One role per entry of [`NormalizedSentence::numbers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub roles: Vec<NumberRole>,
}

impl MaskPlan {
    /// Every number visible, nothing scored.
    pub fn all_context(sentence: &NormalizedSentence) -> Self {
        Self {
            roles: vec![NumberRole::Context; sentence.numbers.len()],
        }
    }

    /// Slots (indices into the sentence's numbers) that carry a loss.
    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_target())
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub select: f64,
    pub hidden: f64,
    pub random: f64,
    pub kept: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            select: 0.5,
            hidden: 0.8,
            random: 0.1,
            kept: 0.1,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.select, self.hidden, self.random, self.kept];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("masking probabilities must lie in [0, 1]".into()));
        }
        if ((self.hidden + self.random + self.kept) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(
                "hidden, random and kept probabilities must sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// Training-time masking. `pool` supplies substitutes for random replacement.
///
/// If no number is selected, one is chosen uniformly so every sentence
/// contributes a loss.
pub fn plan_masks(
    sentence: &NormalizedSentence,
    rng: &mut impl Rng,
    cfg: &MaskConfig,
    pool: &[f64],
) -> Result<MaskPlan> {
    cfg.validate()?;
    let n = sentence.numbers.len();
    if n == 0 {
        return Err(Error::Empty("sentence numbers"));
    }
    let mut selected: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < cfg.select).collect();
    if !selected.iter().any(|&s| s) {
        selected[rng.random_range(0..n)] = true;
    }
    let mut roles = Vec::with_capacity(n);
    for sel in selected {
        if !sel {
            roles.push(NumberRole::Context);
            continue;
        }
        let u: f64 = rng.random();
        let role = if u < cfg.hidden {
            NumberRole::TargetHidden
        } else if u < cfg.hidden + cfg.random {
            if pool.is_empty() {
                return Err(Error::Empty("substitute pool"));
            }
            NumberRole::TargetRandom(pool[rng.random_range(0..pool.len())])
        } else {
            NumberRole::TargetKept
        };
        roles.push(role);
    }
    Ok(MaskPlan { roles })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// One hidden target; all other numbers visible.
    #[default]
    Standard,
    /// One hidden target; every other number's value hidden too.
    AllMasked,
}

/// Stable per-sentence generator so evaluation targets do not change
/// between runs.
pub fn eval_rng(sentence: &NormalizedSentence, seed: u64) -> ChaCha8Rng {
    // FNV-1a over tokens and value bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for t in &sentence.tokens {
        eat(t.as_bytes());
        eat(&[0xff]);
    }
    for &(i, v) in &sentence.numbers {
        eat(&(i as u64).to_le_bytes());
        eat(&v.to_bits().to_le_bytes());
    }
    ChaCha8Rng::seed_from_u64(h ^ seed)
}

/// Evaluation plan with a single scored, hidden target.
pub fn sample_eval_target(
    sentence: &NormalizedSentence,
    rng: &mut impl Rng,
    mode: EvalMode,
) -> Result<MaskPlan> {
    let n = sentence.numbers.len();
    if n == 0 {
        return Err(Error::Skip("sentence has no numbers"));
    }
    if mode == EvalMode::AllMasked && n < 2 {
        return Err(Error::Skip("one-vs-all evaluation needs at least two numbers"));
    }
    let target = rng.random_range(0..n);
    let rest = match mode {
        EvalMode::Standard => NumberRole::Context,
        EvalMode::AllMasked => NumberRole::ContextHidden,
    };
    let roles = (0..n)
        .map(|i| if i == target { NumberRole::TargetHidden } else { rest })
        .collect();
    Ok(MaskPlan { roles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(k: usize) -> NormalizedSentence {
        let tokens = (0..k).map(|_| crate::numtext::MASK_TOKEN.to_string()).collect();
        NormalizedSentence::new(tokens, (0..k).map(|i| (i, 10.0 + i as f64)).collect())
    }

    #[test]
    fn degenerate_config_hides_everything() {
        let cfg = MaskConfig {
            select: 1.0,
            hidden: 1.0,
            random: 0.0,
            kept: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = plan_masks(&sentence(5), &mut rng, &cfg, &[]).unwrap();
        assert!(plan.roles.iter().all(|r| *r == NumberRole::TargetHidden));
    }

    #[test]
    fn never_selects_nothing() {
        let cfg = MaskConfig {
            select: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let plan = plan_masks(&sentence(3), &mut rng, &cfg, &[5.0]).unwrap();
            assert_eq!(plan.targets().count(), 1);
        }
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let cfg = MaskConfig {
            hidden: 0.9,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(plan_masks(&sentence(1), &mut rng, &cfg, &[1.0]).is_err());
    }

    #[test]
    fn standard_eval_has_one_target() {
        let s = sentence(3);
        let plan = sample_eval_target(&s, &mut eval_rng(&s, 1), EvalMode::Standard).unwrap();
        assert_eq!(plan.targets().count(), 1);
        assert_eq!(plan.roles.iter().filter(|r| **r == NumberRole::Context).count(), 2);
        let again = sample_eval_target(&s, &mut eval_rng(&s, 1), EvalMode::Standard).unwrap();
        assert_eq!(plan, again);
    }

    #[test]
    fn all_masked_needs_two_numbers() {
        let s = sentence(1);
        let r = sample_eval_target(&s, &mut eval_rng(&s, 0), EvalMode::AllMasked);
        assert!(matches!(r, Err(Error::Skip(_))));
        let s = sentence(4);
        let plan = sample_eval_target(&s, &mut eval_rng(&s, 0), EvalMode::AllMasked).unwrap();
        assert_eq!(plan.targets().count(), 1);
        assert_eq!(plan.roles.iter().filter(|r| **r == NumberRole::ContextHidden).count(), 3);
    }
}
