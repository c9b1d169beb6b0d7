//! Metrics, anomaly generation and evaluation loops.

mod anomaly;
mod metrics;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use anomaly::{
    anomaly_random, anomaly_string, applicable_ops, apply_string_op, StringAnomaly, StringOp,
};
pub use metrics::{auc, e_acc, lmae, paired_win_rate, roc_auc, MetricsReport};

use crate::corpus::{eval_rng, sample_eval_target, EvalMode, MaskPlan};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numtext::NormalizedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    String,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub value: f64,
    pub kind: AnomalyKind,
    /// Model score; `None` for predictors without a density.
    pub log_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<StringOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub y: f64,
    pub y_hat: f64,
    pub log_p_true: Option<f64>,
    pub anomalies: Vec<Anomaly>,
}

/// A point guess and, when available, scores for the given candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub y_hat: f64,
    pub scores: Option<Vec<f64>>,
}

/// Anything that can guess a hidden number.
pub trait Predictor {
    /// Judges the number at `slot` of `sentence` under `plan`, scoring each
    /// of `candidates`.
    fn assess(
        &self,
        sentence: &NormalizedSentence,
        plan: &MaskPlan,
        slot: usize,
        candidates: &[f64],
    ) -> Result<Assessment>;
}

impl Predictor for Model {
    fn assess(
        &self,
        sentence: &NormalizedSentence,
        plan: &MaskPlan,
        slot: usize,
        candidates: &[f64],
    ) -> Result<Assessment> {
        let scorers = self.scorers(sentence, plan)?;
        let (_, scorer) = scorers
            .into_iter()
            .find(|(s, _)| *s == slot)
            .ok_or(Error::Index {
                index: slot,
                len: sentence.numbers.len(),
            })?;
        let scores = candidates
            .iter()
            .map(|&c| scorer.score(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Assessment {
            y_hat: scorer.point_prediction()?,
            scores: Some(scores),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Mean,
    Median,
}

/// Predicts one fixed value everywhere and scores nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPredictor {
    pub value: f64,
}

impl Predictor for ConstantPredictor {
    fn assess(&self, _: &NormalizedSentence, _: &MaskPlan, _: usize, _: &[f64]) -> Result<Assessment> {
        Ok(Assessment {
            y_hat: self.value,
            scores: None,
        })
    }
}

pub fn baseline_constant(values: &[f64], kind: BaselineKind) -> Result<ConstantPredictor> {
    if values.is_empty() {
        return Err(Error::Empty("training values"));
    }
    let value = match kind {
        BaselineKind::Mean => values.iter().sum::<f64>() / values.len() as f64,
        BaselineKind::Median => {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                (v[n / 2 - 1] + v[n / 2]) / 2.0
            }
        }
    };
    Ok(ConstantPredictor { value })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub records: Vec<EvalRecord>,
    /// Sentences without a usable target under the mode.
    pub skipped: usize,
}

/// Scores one hidden target per sentence against one anomaly of each kind.
/// `pool` holds training values for random anomalies; `seed` fixes targets
/// and anomalies.
pub fn evaluate(
    predictor: &dyn Predictor,
    sentences: &[NormalizedSentence],
    mode: EvalMode,
    pool: &[f64],
    seed: u64,
) -> Result<Evaluation> {
    let mut records = Vec::with_capacity(sentences.len());
    let mut skipped = 0;
    for s in sentences {
        let mut rng = eval_rng(s, seed);
        let plan = match sample_eval_target(s, &mut rng, mode) {
            Ok(p) => p,
            Err(Error::Skip(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let slot = plan.targets().next().expect("evaluation plans have one target");
        let y = s.numbers[slot].1;
        let string = anomaly_string(y, pool, &mut rng);
        let random = anomaly_random(pool, y, &mut rng);
        let a = predictor.assess(s, &plan, slot, &[y, string.value, random])?;
        let score = |i: usize| a.scores.as_ref().map(|v| v[i]);
        records.push(EvalRecord {
            y,
            y_hat: a.y_hat,
            log_p_true: score(0),
            anomalies: vec![
                Anomaly {
                    value: string.value,
                    kind: AnomalyKind::String,
                    log_p: score(1),
                    op: Some(string.op),
                },
                Anomaly {
                    value: random,
                    kind: AnomalyKind::Random,
                    log_p: score(2),
                    op: None,
                },
            ],
        });
    }
    if records.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(Evaluation {
        report: MetricsReport::from_records(&records)?,
        records,
        skipped,
    })
}

/// One JSON object per record.
pub fn write_records_jsonl(records: &[EvalRecord], out: &mut dyn Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oracle;

    impl Predictor for Oracle {
        fn assess(&self, s: &NormalizedSentence, _: &MaskPlan, slot: usize, c: &[f64]) -> Result<Assessment> {
            let y = s.numbers[slot].1;
            Ok(Assessment {
                y_hat: y,
                scores: Some(c.iter().map(|&v| if v == y { 0.0 } else { -1e9 }).collect()),
            })
        }
    }

    fn corpus() -> Vec<NormalizedSentence> {
        (0..20)
            .map(|i| {
                NormalizedSentence::new(
                    vec![format!("w{i}"), "[#MASK]".into(), "[#MASK]".into()],
                    vec![(1, 10.0 + i as f64), (2, 3000.0 + i as f64)],
                )
            })
            .collect()
    }

    #[test]
    fn perfect_oracle_is_perfect() {
        let pool = [5.0, 77.0, 123456.0];
        let ev = evaluate(&Oracle, &corpus(), EvalMode::Standard, &pool, 1).unwrap();
        assert_eq!(ev.report.lmae, 0.0);
        assert_eq!(ev.report.e_acc, 1.0);
        assert_eq!(ev.report.r_auc, Some(1.0));
        assert_eq!(ev.report.s_auc, Some(1.0));
    }

    #[test]
    fn baselines() {
        assert_eq!(baseline_constant(&[1.0, 2.0, 9.0], BaselineKind::Median).unwrap().value, 2.0);
        assert_eq!(baseline_constant(&[1.0, 2.0, 9.0], BaselineKind::Mean).unwrap().value, 4.0);
        assert!(baseline_constant(&[], BaselineKind::Mean).is_err());
        let ev = evaluate(
            &ConstantPredictor { value: 15.0 },
            &corpus(),
            EvalMode::Standard,
            &[1.0],
            0,
        )
        .unwrap();
        assert_eq!(ev.report.r_auc, None);
    }

    #[test]
    fn one_number_corpus_is_empty_when_all_masked() {
        let one = vec![NormalizedSentence::new(vec!["[#MASK]".into()], vec![(0, 4.0)])];
        assert!(matches!(
            evaluate(&Oracle, &one, EvalMode::AllMasked, &[1.0], 0),
            Err(Error::Empty(_))
        ));
    }
}
