use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use numpred::evalkit::{
    anomaly_random, anomaly_string, applicable_ops, auc, e_acc, lmae, roc_auc, Anomaly,
    AnomalyKind, EvalRecord, StringOp,
};

/// O(n·m) pair count, independent of the rank-based implementation.
fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in pos {
        for n in neg {
            s += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

fn record(y: f64, y_hat: f64, lp: f64, la: f64) -> EvalRecord {
    EvalRecord {
        y,
        y_hat,
        log_p_true: Some(lp),
        anomalies: vec![Anomaly {
            value: y * 2.0,
            kind: AnomalyKind::Random,
            log_p: Some(la),
            op: None,
        }],
    }
}

fn digit_count(y: f64) -> Vec<u8> {
    format!("{y}").bytes().filter(u8::is_ascii_digit).collect()
}

#[test]
fn string_op_frequencies_are_uniform_over_applicable_ops() {
    let pool = [5.0, 50.0, 500.0];
    for y in [123456.0, 7.0, 1100.0, 98.5] {
        let ops = applicable_ops(&digit_count(y));
        let mut rng = ChaCha8Rng::seed_from_u64(y as u64);
        let mut counts: HashMap<StringOp, usize> = HashMap::new();
        let n = 10_000;
        for _ in 0..n {
            let a = anomaly_string(y, &pool, &mut rng);
            assert_ne!(a.value, y);
            assert!((1.0..=1e16).contains(&a.value));
            *counts.entry(a.op).or_default() += 1;
        }
        for op in &ops {
            let f = counts.get(op).copied().unwrap_or(0) as f64 / n as f64;
            assert!((f - 1.0 / ops.len() as f64).abs() < 0.02, "{y} {op:?}: {f}");
        }
    }
}

#[test]
fn iid_scores_give_half_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pos: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let neg: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    assert!((auc(&pos, &neg).unwrap() - 0.5).abs() < 0.02);
}

proptest! {
    #[test]
    fn anomalies_differ_and_stay_in_range(u in 0.0..16.0f64, seed in 0u64..10_000) {
        let y = (10f64.powf(u) * 100.0).round() / 100.0;
        let y = y.clamp(1.0, 1e16);
        let pool = [y, 3.0, 4e9];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = anomaly_string(y, &pool, &mut rng);
        prop_assert!(s.value != y && (1.0..=1e16).contains(&s.value));
        let r = anomaly_random(&pool, y, &mut rng);
        prop_assert!(r != y);
        let lonely = anomaly_random(&[y], y, &mut rng);
        prop_assert!(lonely != y && (1.0..=1e16).contains(&lonely));
    }

    #[test]
    fn auc_matches_brute_force(
        pos in prop::collection::vec(-5i32..5, 1..60),
        neg in prop::collection::vec(-5i32..5, 1..60),
    ) {
        // small integer scores force many ties
        let p: Vec<f64> = pos.iter().map(|&x| x as f64).collect();
        let n: Vec<f64> = neg.iter().map(|&x| x as f64).collect();
        prop_assert!((auc(&p, &n).unwrap() - brute_auc(&p, &n)).abs() < 1e-12);
    }

    #[test]
    fn roc_auc_is_invariant_to_monotone_transforms(
        scores in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 1..80),
    ) {
        let recs: Vec<EvalRecord> = scores.iter().map(|&(a, b)| record(10.0, 10.0, a, b)).collect();
        let moved: Vec<EvalRecord> = scores
            .iter()
            .map(|&(a, b)| record(10.0, 10.0, (a / 3.0).exp() + 7.0, (b / 3.0).exp() + 7.0))
            .collect();
        let x = roc_auc(&recs, AnomalyKind::Random).unwrap();
        let y = roc_auc(&moved, AnomalyKind::Random).unwrap();
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions(ys in prop::collection::vec(0.0..16.0f64, 1..50)) {
        let recs: Vec<EvalRecord> = ys.iter().map(|&u| {
            let y = 10f64.powf(u);
            record(y, y, 0.0, -1.0)
        }).collect();
        prop_assert_eq!(lmae(&recs).unwrap(), 0.0);
        prop_assert_eq!(e_acc(&recs).unwrap(), 1.0);
        prop_assert_eq!(roc_auc(&recs, AnomalyKind::Random).unwrap(), 1.0);
    }
}
