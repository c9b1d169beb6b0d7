use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use numpred::corpus::{build_splits, compute_stats, value_pool, EvalMode};
use numpred::encoder::{EncoderKind, NumericKind};
use numpred::evalkit::{
    baseline_constant, evaluate, write_records_jsonl, BaselineKind, MetricsReport, Predictor,
};
use numpred::heads::HeadKind;
use numpred::numtext::{normalize_document, FilterConfig, NormalizedSentence};
use numpred::pipeline::{
    apply_data_filter, load_checkpoint, predict, read_jsonl, read_text_or_jsonl, save_checkpoint,
    synth_corpus, train, write_jsonl, RunConfig, SynthSpec,
};
use numpred::{Error, Result};

#[derive(Parser)]
#[command(name = "numpred", version, about = "Masked number prediction and numeric anomaly scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw text (plain or JSONL with a `text` field) into sentences.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML file with filter settings.
        #[arg(long)]
        filters: Option<PathBuf>,
        #[arg(long)]
        min_words: Option<usize>,
        #[arg(long)]
        max_words: Option<usize>,
        #[arg(long)]
        dollar_only: bool,
        /// Unused; accepted so every subcommand takes a seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Corpus statistics.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model; writes a checkpoint directory.
    Train {
        /// Whole corpus, split by the configured ratios.
        #[arg(long, conflicts_with_all = ["train", "valid"])]
        data: Option<PathBuf>,
        #[arg(long, requires = "valid")]
        train: Option<PathBuf>,
        #[arg(long, requires = "train")]
        valid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_kind::<HeadKind>)]
        head: Option<HeadKind>,
        #[arg(long, value_parser = parse_kind::<EncoderKind>)]
        encoder: Option<EncoderKind>,
        #[arg(long, value_parser = parse_kind::<NumericKind>)]
        numeric: Option<NumericKind>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        sgd: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Masked-number metrics and anomaly AUCs.
    Eval {
        #[command(flatten)]
        args: EvalArgs,
    },
    /// Anomaly AUCs only.
    Anomaly {
        #[command(flatten)]
        args: EvalArgs,
    },
    /// Per-decade probabilities for one number of one sentence.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Raw sentence text.
        #[arg(long, conflicts_with = "json_sentence")]
        text: Option<String>,
        /// A normalized sentence as one JSON object.
        #[arg(long)]
        json_sentence: Option<String>,
        /// Which number in the sentence to hide (0-based).
        #[arg(long, default_value_t = 0)]
        slot: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// JSON template file.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Checkpoint directory; omit with --baseline.
    #[arg(long, required_unless_present = "baseline")]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_kind::<EvalMode>, default_value = "standard")]
    mode: EvalMode,
    /// Score a constant guess (`mean` or `median` of --train) instead of a model.
    #[arg(long, value_parser = parse_kind::<BaselineKind>)]
    baseline: Option<BaselineKind>,
    /// Training corpus for baselines or checkpoints without stored values.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-record JSONL dump.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn parse_kind<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn read_corpus(path: &Path) -> Result<Vec<NormalizedSentence>> {
    let file = File::open(path).map_err(|e| with_path(e, path))?;
    read_jsonl(BufReader::new(file), usize::MAX)
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_corpus(sentences: &[NormalizedSentence], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| with_path(e, p))?);
            write_jsonl(sentences, &mut w)?;
            w.flush()?;
        }
        None => write_jsonl(sentences, &mut std::io::stdout().lock())?,
    }
    Ok(())
}

/// Prints `text` and mirrors `json` to `out` when given.
fn emit(text: &str, json: &impl Serialize, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(p) = out {
        std::fs::write(p, serde_json::to_string_pretty(json)? + "\n").map_err(|e| with_path(e, p))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            out,
            filters,
            min_words,
            max_words,
            dollar_only,
            seed: _,
        } => {
            let mut cfg = match filters {
                Some(p) => toml::from_str(&std::fs::read_to_string(&p).map_err(|e| with_path(e, &p))?)
                    .map_err(|e| Error::Config(e.to_string()))?,
                None => FilterConfig::default(),
            };
            cfg.min_words = min_words.unwrap_or(cfg.min_words);
            cfg.max_words = max_words.unwrap_or(cfg.max_words);
            cfg.dollar_only |= dollar_only;
            let mut text = String::new();
            File::open(&input)
                .map_err(|e| with_path(e, &input))?
                .read_to_string(&mut text)?;
            let mut sentences = Vec::new();
            for (d, doc) in read_text_or_jsonl(&text).iter().enumerate() {
                for mut s in normalize_document(doc, &cfg) {
                    s.doc = Some(d as u64);
                    sentences.push(s);
                }
            }
            write_corpus(&sentences, out.as_deref())?;
            eprintln!("{} sentences", sentences.len());
        }
        Command::Stats {
            input,
            json,
            out,
            seed: _,
        } => {
            let stats = compute_stats(&read_corpus(&input)?)?;
            let text = if json {
                serde_json::to_string_pretty(&stats)? + "\n"
            } else {
                stats.to_table()
            };
            emit(&text, &stats, out.as_deref())?;
        }
        Command::Train {
            data,
            train: train_path,
            valid,
            config,
            out,
            seed,
            head,
            encoder,
            numeric,
            epochs,
            batch_size,
            patience,
            lr,
            sgd,
            quiet,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = head {
                cfg.model.head = h;
            }
            if let Some(e) = encoder {
                cfg.model.encoder.kind = e;
            }
            if let Some(n) = numeric {
                cfg.model.numeric = n;
            }
            cfg.train.max_epochs = epochs.unwrap_or(cfg.train.max_epochs);
            cfg.train.batch_size = batch_size.unwrap_or(cfg.train.batch_size);
            cfg.train.patience = patience.unwrap_or(cfg.train.patience);
            cfg.train.lr = lr.unwrap_or(cfg.train.lr);
            if sgd {
                cfg.train.optimizer = numpred::diffmath::OptimizerKind::Sgd;
            }
            cfg.validate()?;
            let (train_set, valid_set) = match (data, train_path, valid) {
                (Some(d), _, _) => {
                    let corpus = apply_data_filter(&cfg, read_corpus(&d)?);
                    let splits = build_splits(corpus, cfg.data.splits, cfg.seed)?;
                    let dir = out.join("splits");
                    std::fs::create_dir_all(&dir)?;
                    write_corpus(&splits.test, Some(&dir.join("test.jsonl")))?;
                    write_corpus(&splits.valid, Some(&dir.join("valid.jsonl")))?;
                    write_corpus(&splits.train, Some(&dir.join("train.jsonl")))?;
                    (splits.train, splits.valid)
                }
                (None, Some(t), Some(v)) => (
                    apply_data_filter(&cfg, read_corpus(&t)?),
                    apply_data_filter(&cfg, read_corpus(&v)?),
                ),
                _ => return Err(Error::Config("give --data, or --train with --valid".into())),
            };
            let outcome = train(&cfg, &train_set, &valid_set, &mut |r| {
                if !quiet {
                    eprintln!(
                        "epoch {:>3}  train {:>10.4}  valid {:>10.4}  grad-norm {:>8.3}",
                        r.epoch, r.train_loss, r.valid_loss, r.max_grad_norm
                    );
                }
            })?;
            let pool = value_pool(&train_set);
            save_checkpoint(&out, &outcome.model, &cfg, &pool, outcome.best_epoch, &outcome.history)?;
            std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
            println!(
                "best epoch {} of {}; checkpoint in {}",
                outcome.best_epoch,
                outcome.history.len(),
                out.display()
            );
        }
        Command::Eval { args } => run_eval(args, false)?,
        Command::Anomaly { args } => run_eval(args, true)?,
        Command::Predict {
            model,
            text,
            json_sentence,
            slot,
            json,
            out,
            seed: _,
        } => {
            let ckpt = load_checkpoint(&model)?;
            let sentence = match (text, json_sentence) {
                (Some(t), _) => {
                    let cfg = FilterConfig {
                        min_words: 1,
                        max_words: usize::MAX,
                        ..FilterConfig::default()
                    };
                    let mut found = normalize_document(&t, &cfg);
                    if found.len() != 1 {
                        return Err(Error::Data {
                            line: 1,
                            msg: format!("expected one sentence with a number, found {}", found.len()),
                        });
                    }
                    found.remove(0)
                }
                (None, Some(j)) => {
                    let s: NormalizedSentence = serde_json::from_str(&j).map_err(|e| Error::Data {
                        line: 1,
                        msg: e.to_string(),
                    })?;
                    s.validate(usize::MAX)?;
                    s
                }
                _ => return Err(Error::Config("give --text or --json-sentence".into())),
            };
            let p = predict(&ckpt.model, &sentence, slot)?;
            let mut shown = sentence.tokens.clone();
            shown[sentence.numbers[slot].0] = "___".into();
            let text = if json {
                serde_json::to_string_pretty(&p)? + "\n"
            } else {
                let mut t = format!("{}\n", shown.join(" "));
                t += &format!("true value  {}\nprediction  {}\n", sentence.numbers[slot].1, p.y_hat);
                t += &format!("{:<10}{:>12}\n", "decade", "probability");
                for (r, q) in p.decades.iter().enumerate() {
                    t += &format!("{:<10}{:>12.6}\n", format!("1e{r}"), q);
                }
                t
            };
            emit(&text, &p, out.as_deref())?;
        }
        Command::Synth {
            preset,
            spec,
            n,
            seed,
            out,
        } => {
            let spec = match (preset, spec) {
                (Some(name), _) => SynthSpec::preset(&name)?,
                (None, Some(p)) => serde_json::from_str(
                    &std::fs::read_to_string(&p).map_err(|e| with_path(e, &p))?,
                )?,
                _ => SynthSpec::preset("contextual8")?,
            };
            write_corpus(&synth_corpus(&spec, n, seed)?, out.as_deref())?;
        }
    }
    Ok(())
}

fn run_eval(args: EvalArgs, anomaly_only: bool) -> Result<()> {
    let data = read_corpus(&args.data)?;
    let train_pool = match &args.train {
        Some(p) => Some(value_pool(&read_corpus(p)?)),
        None => None,
    };
    let (predictor, pool, name): (Box<dyn Predictor>, Vec<f64>, String) = match (&args.model, args.baseline) {
        (_, Some(kind)) => {
            let pool = train_pool.ok_or_else(|| Error::Config("baselines need --train".into()))?;
            let p = baseline_constant(&pool, kind)?;
            (Box::new(p), pool, format!("train-{kind:?}").to_lowercase())
        }
        (Some(dir), None) => {
            let ckpt = load_checkpoint(dir)?;
            let pool = train_pool.unwrap_or(ckpt.pool);
            if pool.is_empty() {
                return Err(Error::Config("checkpoint has no stored training values; pass --train".into()));
            }
            let name = format!("{:?}-{:?}", ckpt.model.config.encoder.kind, ckpt.model.head_kind()).to_lowercase();
            (Box::new(ckpt.model), pool, name)
        }
        (None, None) => return Err(Error::Config("give --model or --baseline".into())),
    };
    let ev = evaluate(predictor.as_ref(), &data, args.mode, &pool, args.seed)?;
    let r = &ev.report;
    let text = if anomaly_only {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        format!(
            "{:<16}{:>8}{:>10}{:>10}\n{:<16}{:>8}{:>10}{:>10}\n",
            "model", "n", "r-AUC", "s-AUC", name, r.n, opt(r.r_auc), opt(r.s_auc)
        )
    } else {
        format!("{}\n{}\n", MetricsReport::table_header(), r.table_row(&name))
    };
    let json = serde_json::json!({
        "model": name,
        "mode": args.mode,
        "seed": args.seed,
        "skipped": ev.skipped,
        "report": r,
    });
    emit(&text, &json, args.out.as_deref())?;
    if let Some(p) = &args.records {
        let mut w = BufWriter::new(File::create(p).map_err(|e| with_path(e, p))?);
        write_records_jsonl(&ev.records, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
