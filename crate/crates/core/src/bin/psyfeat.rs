use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use psyfeat::corpus::{
    write_corpus_jsonl, CleanConfig, Preprocessor, SegmenterConfig, SegmenterMode,
};
use psyfeat::lda::{
    build_vocabulary, infer, load_model, save_model, train, write_theta_csv, InferParams,
    TrainParams,
};
use psyfeat::lexicon::{load_lexicon, write_features_csv};
use psyfeat::pipeline::synth::{self, SynthConfig};
use psyfeat::pipeline::{
    emit_figures, evaluate_features, load_corpus, read_report_csv, run_experiment, ExperimentConfig,
};
use psyfeat::stats::{kfold_cv, Direction, FeatureMatrix, RankPolicy, StepwiseOptions};

#[derive(Parser)]
#[command(
    name = "psyfeat",
    version,
    about = "Psycholinguistic features and score regression for microblog users"
)]
struct Cli {
    /// Random seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (TOML). Flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, segment and aggregate raw messages into a per-user corpus.
    Ingest(IngestArgs),
    /// Feature extraction.
    #[command(subcommand)]
    Features(FeaturesCommand),
    /// Topic model training and inference.
    #[command(subcommand)]
    Topics(TopicsCommand),
    /// Cross-validate stepwise regression on a feature CSV.
    Evaluate(EvaluateArgs),
    /// Run the full grid from a config file and write plot data.
    Experiment(ExperimentArgs),
    /// Regenerate plot data from an existing report.csv.
    Report(ReportArgs),
    /// Write a synthetic corpus with a planted score-correlated topic.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CorpusInput {
    /// Raw messages, one JSON object per line.
    #[arg(long, conflicts_with = "documents")]
    messages: Option<PathBuf>,
    /// Corpus previously written by `ingest`.
    #[arg(long)]
    documents: Option<PathBuf>,
    /// `user_id,score` CSV.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Drop users with fewer cleaned text bytes.
    #[arg(long)]
    min_bytes: Option<usize>,
    /// Whitespace-separated segmentation dictionary; enables maximum matching.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: CorpusInput,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum FeaturesCommand {
    /// Lexicon category frequencies per user.
    Liwc {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TopicsCommand {
    /// Fit LDA by collapsed Gibbs sampling.
    Train {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(long)]
        k: usize,
        /// Symmetric alpha is this value divided by K.
        #[arg(long)]
        alpha_sum: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        min_doc_freq: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the training theta.
        #[arg(long)]
        theta: Option<PathBuf>,
    },
    /// Infer theta for documents under a saved model.
    Infer {
        #[command(flatten)]
        input: CorpusInput,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Both,
    Backward,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Feature CSV with a leading `user_id` column.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    significance: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Fail on collinear columns instead of dropping them.
    #[arg(long)]
    keep_collinear: bool,
    /// Write the cross-validation result and final model here as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated topic counts.
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// report.csv; defaults to the one under the configured output directory.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    users: usize,
    #[arg(long, default_value_t = 5)]
    topics: usize,
    #[arg(long, default_value_t = 30)]
    words_per_topic: usize,
    #[arg(long, default_value_t = 200)]
    tokens_per_user: usize,
    #[arg(long, default_value_t = 0.5)]
    mixture_alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    noise_sd: f64,
    /// Also write `lexicon.dic` over the synthetic vocabulary.
    #[arg(long)]
    lexicon: bool,
}

struct Session {
    seed: Option<u64>,
    config: Option<ExperimentConfig>,
    config_path: Option<PathBuf>,
}

impl Session {
    fn seed(&self) -> u64 {
        self.seed
            .or(self.config.as_ref().map(|c| c.seed))
            .unwrap_or(0)
    }

    fn require_config(&self) -> anyhow::Result<&ExperimentConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| anyhow!("this command needs --config"))
    }

    fn preprocessor(&self, input: &CorpusInput) -> anyhow::Result<Preprocessor> {
        let mut seg = self
            .config
            .as_ref()
            .map(|c| c.segmenter.clone())
            .unwrap_or_default();
        if let Some(d) = &input.dictionary {
            seg = SegmenterConfig {
                mode: SegmenterMode::MaxMatch,
                dictionary_path: Some(d.clone()),
                ..seg
            };
        }
        if let Some(s) = &input.stopwords {
            seg.stopword_path = Some(s.clone());
        }
        let clean = CleanConfig {
            keep_hashtag_text: self
                .config
                .as_ref()
                .is_some_and(|c| c.corpus.keep_hashtag_text),
        };
        Ok(Preprocessor::from_config(clean, &seg)?)
    }

    fn corpus(
        &self,
        input: &CorpusInput,
        require_score: bool,
    ) -> anyhow::Result<psyfeat::corpus::Corpus> {
        let cfg = self.config.as_ref().map(|c| &c.corpus);
        let (messages, documents) = if input.messages.is_some() || input.documents.is_some() {
            (input.messages.clone(), input.documents.clone())
        } else {
            (
                cfg.and_then(|c| c.messages.clone()),
                cfg.and_then(|c| c.documents.clone()),
            )
        };
        if messages.is_none() && documents.is_none() {
            bail!("no corpus given: pass --messages or --documents, or set them in --config");
        }
        let scores = input
            .scores
            .clone()
            .or_else(|| cfg.and_then(|c| c.scores.clone()));
        if require_score && scores.is_none() {
            bail!("scores are required: pass --scores or set corpus.scores");
        }
        let min_bytes = input.min_bytes.or(cfg.map(|c| c.min_bytes)).unwrap_or(0);
        let pre = self.preprocessor(input)?;
        Ok(load_corpus(
            messages.as_deref(),
            documents.as_deref(),
            scores.as_deref(),
            min_bytes,
            require_score,
            &pre,
        )?)
    }
}

fn summary(command: &str, fields: serde_json::Value) -> serde_json::Value {
    let mut v = json!({ "command": command, "status": "ok" });
    if let (Some(obj), serde_json::Value::Object(extra)) = (v.as_object_mut(), fields) {
        obj.extend(extra);
    }
    v
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run(cli: Cli) -> anyhow::Result<serde_json::Value> {
    let config = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let ctx = Session {
        seed: cli.seed,
        config,
        config_path: cli.config.clone(),
    };

    match cli.command {
        Command::Ingest(a) => {
            let corpus = ctx.corpus(&a.input, false)?;
            write_corpus_jsonl(&corpus, &a.out)?;
            Ok(summary(
                "ingest",
                json!({ "users": corpus.len(), "tokens": corpus.total_tokens(), "output": path_str(&a.out) }),
            ))
        }
        Command::Features(FeaturesCommand::Liwc { input, lexicon, out }) => {
            let path = lexicon
                .or_else(|| ctx.config.as_ref().and_then(|c| c.lexicon.path.clone()))
                .ok_or_else(|| anyhow!("no lexicon given: pass --lexicon or set lexicon.path"))?;
            let lex = load_lexicon(&path)?;
            let corpus = ctx.corpus(&input, false)?;
            let rows: Vec<_> = corpus.documents.iter().map(|d| lex.extract_features(d)).collect();
            write_features_csv(&lex, &rows, &out)?;
            Ok(summary(
                "features liwc",
                json!({ "users": rows.len(), "categories": lex.categories().len(), "output": path_str(&out) }),
            ))
        }
        Command::Topics(TopicsCommand::Train {
            input,
            k,
            alpha_sum,
            beta,
            iterations,
            min_doc_freq,
            out,
            theta,
        }) => {
            let lda = ctx.config.as_ref().map(|c| c.lda.clone()).unwrap_or_default();
            if k == 0 {
                bail!("--k must be at least 1");
            }
            let corpus = ctx.corpus(&input, false)?;
            let vocab = build_vocabulary(&corpus, min_doc_freq.unwrap_or(lda.min_doc_freq))?;
            let params = TrainParams {
                k,
                alpha: alpha_sum.unwrap_or(lda.alpha_sum) / k as f64,
                beta: beta.unwrap_or(lda.beta),
                iterations: iterations.unwrap_or(lda.iterations),
            };
            let (model, thetas) = train(&corpus, vocab, &params, ctx.seed())?;
            save_model(&model, &out)?;
            if let Some(t) = &theta {
                write_theta_csv(&thetas, k, t)?;
            }
            Ok(summary(
                "topics train",
                json!({
                    "k": k,
                    "documents": corpus.len(),
                    "vocabulary": model.vocabulary().len(),
                    "iterations": params.iterations,
                    "seed": ctx.seed(),
                    "output": path_str(&out),
                }),
            ))
        }
        Command::Topics(TopicsCommand::Infer {
            input,
            model,
            iterations,
            burn_in,
            out,
        }) => {
            let lda = ctx.config.as_ref().map(|c| c.lda.clone()).unwrap_or_default();
            let m = load_model(&model)?;
            let corpus = ctx.corpus(&input, false)?;
            let params = InferParams {
                iterations: iterations.unwrap_or(lda.infer_iterations),
                burn_in: burn_in.unwrap_or(lda.infer_burn_in),
            };
            let seed = ctx.seed();
            let thetas = corpus
                .documents
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    infer(&m, d, params, seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
                })
                .collect::<psyfeat::Result<Vec<_>>>()?;
            write_theta_csv(&thetas, m.num_topics(), &out)?;
            Ok(summary(
                "topics infer",
                json!({ "k": m.num_topics(), "documents": thetas.len(), "output": path_str(&out) }),
            ))
        }
        Command::Evaluate(a) => {
            let eval = ctx.config.as_ref().map(|c| c.evaluation.clone()).unwrap_or_default();
            let scores_path = a
                .scores
                .clone()
                .or_else(|| ctx.config.as_ref().and_then(|c| c.corpus.scores.clone()))
                .ok_or_else(|| anyhow!("scores are required: pass --scores or set corpus.scores"))?;
            let scores = psyfeat::corpus::read_scores_csv(&scores_path)?;
            let x = FeatureMatrix::read_csv(&a.features)?;
            let y = x
                .row_ids()
                .iter()
                .map(|id| {
                    scores
                        .get(id)
                        .copied()
                        .ok_or_else(|| anyhow!("{}: no score for user `{id}`", scores_path.display()))
                })
                .collect::<anyhow::Result<Vec<f64>>>()?;
            let direction = match a.direction {
                Some(DirectionArg::Both) => Direction::Both,
                Some(DirectionArg::Backward) => Direction::Backward,
                None => eval.direction,
            };
            let opts = psyfeat::pipeline::EvalOptions {
                cv_folds: a.folds.unwrap_or(eval.cv_folds),
                seed: ctx.seed(),
                significance: a.significance.unwrap_or(eval.significance),
                stepwise: StepwiseOptions {
                    direction,
                    rank_policy: if a.keep_collinear || !eval.drop_collinear {
                        RankPolicy::Fail
                    } else {
                        RankPolicy::DropDependent
                    },
                },
            };
            let res = evaluate_features(&x, &y, x.column_names(), &opts)?;
            let baseline = kfold_cv(&x, &y, opts.cv_folds, opts.seed, |_, y| psyfeat::pipeline::intercept_only(y))?;
            let detail = json!({
                "fold_rmses": res.cv.fold_rmses,
                "mean_rmse": res.cv.mean_rmse,
                "intercept_only_rmse": baseline.mean_rmse,
                "model": res.model.to_json(),
                "n_significant": res.summary.n_significant,
                "max_abs_r": res.summary.max_abs_r,
                "argmax": res.summary.argmax,
            });
            if let Some(out) = &a.out {
                if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
                }
                std::fs::write(out, serde_json::to_string_pretty(&detail)? + "\n")
                    .with_context(|| out.display().to_string())?;
            }
            Ok(summary(
                "evaluate",
                json!({
                    "rows": x.n_rows(),
                    "mean_rmse": res.cv.mean_rmse,
                    "intercept_only_rmse": baseline.mean_rmse,
                    "selected_features": res.model.selected_features(),
                    "n_significant": res.summary.n_significant,
                }),
            ))
        }
        Command::Experiment(a) => {
            let mut cfg = ctx.require_config()?.clone();
            if let Some(s) = ctx.seed {
                cfg.seed = s;
            }
            if let Some(d) = a.output_dir {
                cfg.output_dir = d;
            }
            if let Some(ks) = a.k_list {
                cfg.lda.k_list = ks;
            }
            if a.no_cache {
                cfg.lda.cache = false;
            }
            let report = run_experiment(&cfg)?;
            let figures = emit_figures(&report.rows, &cfg.output_dir)?;
            let best = report
                .rows
                .iter()
                .min_by(|a, b| a.mean_rmse.total_cmp(&b.mean_rmse))
                .map(|r| json!({ "feature_set": r.feature_set.as_str(), "k": r.k, "mean_rmse": r.mean_rmse }));
            Ok(summary(
                "experiment",
                json!({
                    "rows": report.rows.len(),
                    "users": report.meta.n_users,
                    "seed": cfg.seed,
                    "best": best,
                    "report": path_str(&cfg.output_dir.join("report.csv")),
                    "figures": figures.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                }),
            ))
        }
        Command::Report(a) => {
            let out_dir = ctx.config.as_ref().map(|c| c.output_dir.clone());
            let report = a
                .report
                .or_else(|| out_dir.as_ref().map(|d| d.join("report.csv")))
                .ok_or_else(|| anyhow!("pass --report or --config"))?;
            let out = a
                .out
                .or(out_dir)
                .or_else(|| report.parent().map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from("."));
            let rows = read_report_csv(&report)?;
            let figures = emit_figures(&rows, &out)?;
            Ok(summary(
                "report",
                json!({
                    "rows": rows.len(),
                    "figures": figures.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                }),
            ))
        }
        Command::Synth(a) => {
            let cfg = SynthConfig {
                users: a.users,
                topics: a.topics,
                words_per_topic: a.words_per_topic,
                tokens_per_user: a.tokens_per_user,
                mixture_alpha: a.mixture_alpha,
                noise_sd: a.noise_sd,
                seed: ctx.seed(),
                ..SynthConfig::default()
            };
            let corpus = synth::generate(&cfg)?;
            corpus.write(&a.out)?;
            if a.lexicon {
                let path = a.out.join("lexicon.dic");
                std::fs::write(&path, synth::synthetic_lexicon(a.topics))
                    .with_context(|| path.display().to_string())?;
            }
            Ok(summary(
                "synth",
                json!({ "users": a.users, "messages": corpus.messages.len(), "output": path_str(&a.out) }),
            ))
        }
    }
    .map(|mut v| {
        if let (Some(p), Some(obj)) = (&ctx.config_path, v.as_object_mut()) {
            obj.insert("config".into(), json!(path_str(p)));
        }
        v
    })
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
