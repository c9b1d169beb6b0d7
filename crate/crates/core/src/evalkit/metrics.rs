use serde::{Deserialize, Serialize};

use super::{AnomalyKind, EvalRecord};
use crate::error::{Error, Result};
use crate::numtext::decade;

/// Mean absolute difference of base-10 logs.
pub fn lmae(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("evaluation records"));
    }
    let sum: f64 = records
        .iter()
        .map(|r| (r.y.log10() - r.y_hat.log10()).abs())
        .sum();
    Ok(sum / records.len() as f64)
}

/// Fraction of records whose prediction shares the truth's decade.
pub fn e_acc(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("evaluation records"));
    }
    let hits = records
        .iter()
        .filter(|r| decade(r.y) == decade(r.y_hat))
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Area under the ROC curve via the Mann–Whitney statistic; ties count half.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Empty("AUC scores"));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::Numerical("AUC scores contain NaN".into()));
    }
    // Midranks over pooled scores.
    let mut pooled: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// AUC of true-value scores against anomalies of one kind.
pub fn roc_auc(records: &[EvalRecord], kind: AnomalyKind) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for r in records {
        let Some(lp) = r.log_p_true else { continue };
        let mut any = false;
        for a in r.anomalies.iter().filter(|a| a.kind == kind) {
            if let Some(s) = a.log_p {
                neg.push(s);
                any = true;
            }
        }
        if any {
            pos.push(lp);
        }
    }
    if pos.is_empty() {
        return Err(Error::Empty("records with scored anomalies"));
    }
    auc(&pos, &neg)
}

/// Per-item ranking: the fraction of (true, anomaly) pairs from the same
/// record where the true value scores higher, ties counting half.
pub fn paired_win_rate(records: &[EvalRecord], kind: AnomalyKind) -> Result<f64> {
    let mut wins = 0.0;
    let mut n = 0usize;
    for r in records {
        let Some(lp) = r.log_p_true else { continue };
        for s in r.anomalies.iter().filter(|a| a.kind == kind).filter_map(|a| a.log_p) {
            if lp.is_nan() || s.is_nan() {
                return Err(Error::Numerical("scores contain NaN".into()));
            }
            wins += if lp > s { 1.0 } else if lp == s { 0.5 } else { 0.0 };
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("records with scored anomalies"));
    }
    Ok(wins / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub lmae: f64,
    pub e_acc: f64,
    /// Random-substitution anomalies.
    pub r_auc: Option<f64>,
    /// String-edit anomalies.
    pub s_auc: Option<f64>,
}

impl MetricsReport {
    pub fn from_records(records: &[EvalRecord]) -> Result<Self> {
        Ok(Self {
            n: records.len(),
            lmae: lmae(records)?,
            e_acc: e_acc(records)?,
            r_auc: roc_auc(records, AnomalyKind::Random).ok(),
            s_auc: roc_auc(records, AnomalyKind::String).ok(),
        })
    }

    pub fn table_header() -> String {
        format!(
            "{:<16}{:>8}{:>10}{:>10}{:>10}{:>10}",
            "model", "n", "LMAE", "E-Acc", "r-AUC", "s-AUC"
        )
    }

    /// One aligned row; E-Acc as a percentage, missing AUCs as `-`.
    pub fn table_row(&self, name: &str) -> String {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        format!(
            "{:<16}{:>8}{:>10.3}{:>10.1}{:>10}{:>10}",
            name,
            self.n,
            self.lmae,
            100.0 * self.e_acc,
            opt(self.r_auc),
            opt(self.s_auc)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(y: f64, y_hat: f64) -> EvalRecord {
        EvalRecord {
            y,
            y_hat,
            log_p_true: None,
            anomalies: Vec::new(),
        }
    }

    #[test]
    fn lmae_examples() {
        assert_eq!(lmae(&[rec(100.0, 1000.0)]).unwrap(), 1.0);
        assert_eq!(lmae(&[rec(10.0, 10.0), rec(10.0, 1000.0)]).unwrap(), 1.0);
        assert!(lmae(&[]).is_err());
    }

    #[test]
    fn e_acc_examples() {
        assert_eq!(e_acc(&[rec(250.0, 329.0)]).unwrap(), 1.0);
        assert_eq!(e_acc(&[rec(99.0, 101.0)]).unwrap(), 0.0);
        assert_eq!(e_acc(&[rec(1000.0, 999.9999)]).unwrap(), 0.0);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[2.0, 3.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(auc(&[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.0], &[1.0]).unwrap(), 0.0);
        assert!(auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn paired_and_pooled_differ_across_scales() {
        let scored = |t: f64, a: f64| EvalRecord {
            y: 10.0,
            y_hat: 10.0,
            log_p_true: Some(t),
            anomalies: vec![super::super::Anomaly {
                value: 20.0,
                kind: AnomalyKind::Random,
                log_p: Some(a),
                op: None,
            }],
        };
        // each item ranks its truth first, but the second item lives on a
        // lower scale than the first item's anomaly
        let recs = [scored(-1.0, -5.0), scored(-30.0, -40.0)];
        assert_eq!(paired_win_rate(&recs, AnomalyKind::Random).unwrap(), 1.0);
        assert_eq!(roc_auc(&recs, AnomalyKind::Random).unwrap(), 0.75);
    }
}
