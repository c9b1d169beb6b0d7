use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtext::{decade, pow10, NormalizedSentence, MASK_TOKEN, MAX_VALUE, MIN_VALUE};

/// Distribution of one number slot in a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SlotDist {
    /// `10^U(log10 lo, log10 hi)`.
    LogUniform { lo: f64, hi: f64 },
    /// A decade row `floor(log10 v)` chosen uniformly, then log-uniform
    /// within it.
    Decades { rows: Vec<i32> },
    /// Log-uniform within row `row(source slot) + offset`.
    Linked { source: usize, offset: i32 },
}

/// Whitespace-separated text. `{}` marks a number slot (consumed in order),
/// `{w}` a random filler word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub text: String,
    pub slots: Vec<SlotDist>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub templates: Vec<Template>,
    #[serde(default)]
    pub fillers: Vec<String>,
}

pub const MIN_WORDS: usize = 8;
pub const MAX_WORDS: usize = 50;

const FILLERS: [&str; 16] = [
    "reportedly", "recently", "again", "overall", "today", "meanwhile", "officially", "locally",
    "apparently", "finally", "quietly", "already", "roughly", "still", "also", "then",
];

fn default_fillers() -> Vec<String> {
    FILLERS.iter().map(|s| s.to_string()).collect()
}

fn row_value(rng: &mut impl Rng, row: i32) -> f64 {
    let v = 10f64.powf(row as f64 + rng.random::<f64>());
    if decade(v) == row {
        v
    } else {
        pow10(row)
    }
}

impl SlotDist {
    fn check(&self, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            SlotDist::LogUniform { lo, hi } => {
                if !(MIN_VALUE <= *lo && lo <= hi && *hi <= MAX_VALUE) {
                    return bad(format!("log-uniform range [{lo}, {hi}] outside [1, 1e16]"));
                }
            }
            SlotDist::Decades { rows } => {
                if rows.is_empty() || rows.iter().any(|r| !(0..16).contains(r)) {
                    return bad(format!("decade rows {rows:?} must be nonempty and in 0..16"));
                }
            }
            SlotDist::Linked { source, .. } => {
                if *source >= index {
                    return bad(format!("slot {index} links to slot {source}, which is not earlier"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng, earlier: &[f64]) -> f64 {
        match self {
            SlotDist::LogUniform { lo, hi } => {
                let (a, b) = (lo.log10(), hi.log10());
                10f64.powf(a + (b - a) * rng.random::<f64>()).clamp(*lo, *hi)
            }
            SlotDist::Decades { rows } => {
                let row = rows[rng.random_range(0..rows.len())];
                row_value(rng, row)
            }
            SlotDist::Linked { source, offset } => {
                let row = (decade(earlier[*source]) + offset).clamp(0, 15);
                row_value(rng, row)
            }
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(Error::Config("synthetic spec has no templates".into()));
        }
        for (t, tpl) in self.templates.iter().enumerate() {
            let words: Vec<&str> = tpl.text.split_whitespace().collect();
            let holes = words.iter().filter(|w| **w == "{}").count();
            if holes == 0 || holes != tpl.slots.len() {
                return Err(Error::Config(format!(
                    "template {t} has {holes} number holes but {} slot distributions",
                    tpl.slots.len()
                )));
            }
            if !(MIN_WORDS..=MAX_WORDS).contains(&words.len()) {
                return Err(Error::Config(format!(
                    "template {t} has {} words; sentences need {MIN_WORDS} to {MAX_WORDS}",
                    words.len()
                )));
            }
            if !(tpl.weight > 0.0) {
                return Err(Error::Config(format!("template {t} needs a positive weight")));
            }
            for (i, s) in tpl.slots.iter().enumerate() {
                s.check(i)?;
            }
        }
        Ok(())
    }

    /// Named specs: `contextual8` (eight templates on adjacent decades),
    /// `contextual8-wide` (the same templates spread over decades 1 to 15),
    /// `bimodal`, `linked`, `two-template`.
    pub fn preset(name: &str) -> Result<Self> {
        let tpl = |text: &str, slots: Vec<SlotDist>| Template {
            text: text.to_string(),
            slots,
            weight: 1.0,
        };
        let row = |r: i32| SlotDist::Decades { rows: vec![r] };
        let templates = match name {
            "contextual8" | "contextual8-wide" => {
                let rows: [i32; 8] = if name == "contextual8" {
                    [1, 2, 3, 4, 5, 6, 7, 8]
                } else {
                    [1, 3, 4, 6, 9, 11, 13, 15]
                };
                let texts = [
                    "the {w} bakery sold {} fresh loaves of bread this morning",
                    "the small {w} village library holds {} old books",
                    "the stadium crowd {w} reached {} fans for the final match",
                    "the city metro {w} carried {} riders during the year",
                    "the national budget {w} allocated $ {} for road repairs",
                    "the galaxy survey {w} catalogued {} distant stars in total",
                    "the global bond market {w} traded $ {} in notional value",
                    "the ocean sample {w} contained {} plankton cells per basin",
                ];
                texts.iter().zip(rows).map(|(t, r)| tpl(t, vec![row(r)])).collect()
            }
            "bimodal" => vec![tpl(
                "the {w} reading on the meter was {} units again",
                vec![SlotDist::Decades { rows: vec![2, 8] }],
            )],
            "linked" => vec![tpl(
                "the first {w} count was {} and the second count was {} overall",
                vec![
                    SlotDist::Decades {
                        rows: (0..15).collect(),
                    },
                    SlotDist::Linked {
                        source: 0,
                        offset: 1,
                    },
                ],
            )],
            "two-template" => vec![
                tpl(
                    "the firm raised $ {} in its latest {w} funding round",
                    vec![SlotDist::LogUniform { lo: 1e6, hi: 1e9 }],
                ),
                tpl(
                    "the ship carried {} containers across the {w} ocean",
                    vec![SlotDist::LogUniform { lo: 1e3, hi: 1e4 }],
                ),
            ],
            _ => return Err(Error::Config(format!("unknown synthetic preset {name:?}"))),
        };
        Ok(Self {
            templates,
            fillers: default_fillers(),
        })
    }

    pub const PRESETS: [&'static str; 5] =
        ["contextual8", "contextual8-wide", "bimodal", "linked", "two-template"];
}

/// Index of the template that produced each sentence, alongside the corpus.
pub fn synth_corpus_labeled(spec: &SynthSpec, n: usize, seed: u64) -> Result<Vec<(usize, NormalizedSentence)>> {
    spec.validate()?;
    let fillers = if spec.fillers.is_empty() {
        default_fillers()
    } else {
        spec.fillers.clone()
    };
    let total: f64 = spec.templates.iter().map(|t| t.weight).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let mut t = spec.templates.len() - 1;
        for (i, tpl) in spec.templates.iter().enumerate() {
            if u < tpl.weight {
                t = i;
                break;
            }
            u -= tpl.weight;
        }
        let tpl = &spec.templates[t];
        let mut values = Vec::with_capacity(tpl.slots.len());
        for slot in &tpl.slots {
            let v = slot.sample(&mut rng, &values);
            values.push(v);
        }
        let mut tokens = Vec::new();
        let mut numbers = Vec::new();
        let mut next = values.iter();
        for w in tpl.text.split_whitespace() {
            match w {
                "{}" => {
                    numbers.push((tokens.len(), *next.next().expect("validated slot count")));
                    tokens.push(MASK_TOKEN.to_string());
                }
                "{w}" => tokens.push(fillers[rng.random_range(0..fillers.len())].clone()),
                _ => tokens.push(w.to_lowercase()),
            }
        }
        out.push((t, NormalizedSentence::new(tokens, numbers)));
    }
    Ok(out)
}

/// `n` sentences drawn from `spec`; deterministic for a fixed seed.
pub fn synth_corpus(spec: &SynthSpec, n: usize, seed: u64) -> Result<Vec<NormalizedSentence>> {
    Ok(synth_corpus_labeled(spec, n, seed)?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}
