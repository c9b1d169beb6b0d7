use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numpred::corpus::{
    build_splits, compute_stats, eval_rng, plan_masks, sample_eval_target, EvalMode, MaskConfig,
    NumberRole, SplitRatios,
};
use numpred::numtext::{decade, NormalizedSentence, MASK_TOKEN};
use numpred::pipeline::{synth_corpus_labeled, SlotDist, SynthSpec, Template};

fn sentence(numbers: usize, doc: Option<u64>, tag: usize) -> NormalizedSentence {
    let mut tokens: Vec<String> = (0..8).map(|i| format!("w{tag}_{i}")).collect();
    let mut nums = Vec::new();
    for k in 0..numbers {
        nums.push((tokens.len(), (k + 2) as f64 * 10.0 + tag as f64));
        tokens.push(MASK_TOKEN.into());
    }
    let mut s = NormalizedSentence::new(tokens, nums);
    s.doc = doc;
    s
}

fn corpus() -> impl Strategy<Value = Vec<NormalizedSentence>> {
    prop::collection::vec((1usize..4, prop::option::of(0u64..6)), 1..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (n, d))| sentence(n, d, i))
            .collect()
    })
}

fn log_uniform_template(text: &str, lo: f64, hi: f64) -> Template {
    Template {
        text: text.into(),
        slots: vec![SlotDist::LogUniform { lo, hi }],
        weight: 1.0,
    }
}

#[test]
fn two_templates_share_the_corpus_evenly() {
    let spec = SynthSpec::preset("two-template").unwrap();
    let out = synth_corpus_labeled(&spec, 1000, 9).unwrap();
    let firsts = out.iter().filter(|(t, _)| *t == 0).count();
    // binomial(1000, 0.5): sd 15.8
    assert!((firsts as i64 - 500).abs() < 60, "{firsts}");
    for (t, s) in &out {
        let v = s.numbers[0].1;
        let (lo, hi) = if *t == 0 { (1e6, 1e9) } else { (1e3, 1e4) };
        assert!((lo..=hi).contains(&v), "{v} outside template {t}");
    }
}

#[test]
fn stats_median_matches_mixture_median() {
    // log10 values uniform on [2, 6] and [4, 8] with equal weight; the
    // mixture CDF 0.5·(x−2)/4 + 0.5·(x−4)/4 reaches 0.5 at x = 5
    let spec = SynthSpec {
        templates: vec![
            log_uniform_template("the first gauge {w} read {} units this morning", 1e2, 1e6),
            log_uniform_template("the second gauge {w} read {} units this evening", 1e4, 1e8),
        ],
        fillers: Vec::new(),
    };
    let out: Vec<_> = synth_corpus_labeled(&spec, 50_000, 2)
        .unwrap()
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let stats = compute_stats(&out).unwrap();
    assert!((stats.quantiles.p50 / 1e5 - 1.0).abs() < 0.1, "{}", stats.quantiles.p50);
}

#[test]
fn masking_rates_match_the_configured_probabilities() {
    let s = sentence(50, None, 0);
    let pool = [3.0, 4.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut total, mut picked, mut hidden, mut random, mut kept) = (0, 0, 0, 0, 0);
    while total < 100_000 {
        let plan = plan_masks(&s, &mut rng, &MaskConfig::default(), &pool).unwrap();
        for r in &plan.roles {
            total += 1;
            match r {
                NumberRole::TargetHidden => hidden += 1,
                NumberRole::TargetRandom(v) => {
                    assert!(pool.contains(v));
                    random += 1
                }
                NumberRole::TargetKept => kept += 1,
                _ => continue,
            }
            picked += 1;
        }
    }
    let f = |a: usize, b: usize| a as f64 / b as f64;
    assert!((f(picked, total) - 0.5).abs() < 0.01);
    assert!((f(hidden, picked) - 0.8).abs() < 0.01);
    assert!((f(random, picked) - 0.1).abs() < 0.01);
    assert!((f(kept, picked) - 0.1).abs() < 0.01);
}

#[test]
fn linked_corpus_decades() {
    let spec = SynthSpec::preset("linked").unwrap();
    for (_, s) in synth_corpus_labeled(&spec, 300, 0).unwrap() {
        assert_eq!(decade(s.numbers[1].1), decade(s.numbers[0].1) + 1);
    }
}

proptest! {
    #[test]
    fn splits_are_disjoint_exhaustive_and_keep_documents(c in corpus(), seed in 0u64..100) {
        let n = c.len();
        let splits = build_splits(c.clone(), SplitRatios::default(), seed).unwrap();
        let m = &splits.manifest;
        let all: Vec<usize> = m.train.iter().chain(&m.valid).chain(&m.test).copied().collect();
        let set: HashSet<usize> = all.iter().copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(set.len(), n);
        for (part, idx) in [(&m.train, 0), (&m.valid, 1), (&m.test, 2)] {
            for &i in part {
                if let Some(d) = c[i].doc {
                    for (j, s) in c.iter().enumerate() {
                        if s.doc == Some(d) {
                            let same = [&m.train, &m.valid, &m.test][idx].contains(&j);
                            prop_assert!(same, "document {} split apart", d);
                        }
                    }
                }
            }
        }
        let again = build_splits(c, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(&again.manifest, m);
    }

    #[test]
    fn plans_always_have_a_target(numbers in 1usize..6, seed in 0u64..1000) {
        let s = sentence(numbers, None, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = plan_masks(&s, &mut rng, &MaskConfig::default(), &[7.0]).unwrap();
        prop_assert!(plan.targets().count() >= 1);
        prop_assert_eq!(plan.roles.len(), numbers);
    }

    #[test]
    fn eval_plans_have_one_target(numbers in 1usize..6, seed in 0u64..1000) {
        let s = sentence(numbers, None, seed as usize);
        let std = sample_eval_target(&s, &mut eval_rng(&s, seed), EvalMode::Standard).unwrap();
        prop_assert_eq!(std.targets().count(), 1);
        prop_assert!(std.roles.iter().all(|r| matches!(r, NumberRole::TargetHidden | NumberRole::Context)));
        let all = sample_eval_target(&s, &mut eval_rng(&s, seed), EvalMode::AllMasked);
        if numbers < 2 {
            prop_assert!(all.is_err());
        } else {
            let all = all.unwrap();
            prop_assert_eq!(all.targets().count(), 1);
            prop_assert!(all.roles.iter().all(|r| !matches!(r, NumberRole::Context)));
        }
    }

    #[test]
    fn stats_are_ordered(c in corpus()) {
        let s = compute_stats(&c).unwrap();
        let q = s.quantiles;
        prop_assert!(q.min <= q.p50 && q.p50 <= q.p75 && q.p75 <= q.p90 && q.p90 <= q.max);
        prop_assert!((0.0..=100.0).contains(&s.percent_numbers));
    }
}
