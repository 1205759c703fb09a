//! `booldr` command line. Exit codes: 0 success, 1 usage error, 2 runtime
//! error. Data goes to stdout, diagnostics to stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::chat::{ChatClient, ChatModel};
use crate::config::AppConfig;
use crate::embed::EmbedderKind;
use crate::eval::{evaluate_run, render_report, ReportFormat, RunResult};
use crate::genpipe::{
    assemble_dataset, cluster_passages, embedding_matrix, filter_questions, generate_questions,
    load_clusters, load_questions, reduce_dims, run_pipeline, save_clusters, save_questions,
    synth_corpus, GenMode, Generator, StopRule, SynthSpec, TemplateContext,
};
use crate::index::{self, build_index, Index, Similarity};
use crate::model::{
    compute_stats, judgments_to_jsonl, load_corpus, load_judgments, save_corpus, save_judgments,
    Corpus,
};
use crate::query::{
    decompose_question, evaluate_expr, parse_boolean_query, whole_query_retrieve, NotMode,
};
use crate::ranking::RankedList;

#[derive(Parser, Debug)]
#[command(name = "booldr", version, about = "Boolean dense retrieval toolkit")]
struct Cli {
    /// key = value config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective config to stderr
    #[arg(long, short, global = true)]
    verbose: bool,
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and persist a vector index
    #[command(subcommand)]
    Index(IndexCmd),
    /// Retrieve for one query or a batch of judged questions
    Search(SearchArgs),
    /// Score a run against judgments
    Eval(EvalArgs),
    /// Benchmark synthesis steps
    #[command(subcommand)]
    Gen(GenCmd),
    /// Dataset statistics of a judgments file
    Stats(StatsArgs),
}

#[derive(Subcommand, Debug)]
enum IndexCmd {
    Build(IndexBuildArgs),
}

#[derive(Args, Debug)]
struct EmbedFlags {
    #[arg(long)]
    embedder: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    embed_seed: Option<u64>,
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Args, Debug)]
struct IndexBuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sim: Option<Similarity>,
    #[command(flatten)]
    embed: EmbedFlags,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["query", "raw", "questions"]))]
struct SearchArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Natural-language question, decomposed unless --whole is given
    #[arg(long)]
    query: Option<String>,
    /// Boolean expression of quoted atoms
    #[arg(long)]
    raw: Option<String>,
    /// Judgments JSONL; writes a run with one ranked list per question
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Rank by the undecomposed question text
    #[arg(long)]
    whole: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    not_mode: Option<NotMode>,
    #[arg(long)]
    depth_factor: Option<usize>,
    #[arg(long)]
    normalize_scores: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    judgments: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    judgments: PathBuf,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args, Debug)]
struct GenFlags {
    #[arg(long)]
    mode: Option<GenMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    per_type: Option<usize>,
    #[arg(long)]
    max_concurrent: Option<usize>,
}

#[derive(Args, Debug)]
struct ClusterFlags {
    /// Stop at this many clusters
    #[arg(long, conflicts_with = "threshold")]
    clusters: Option<usize>,
    /// Stop when the closest clusters are farther apart than this
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    sample_cap: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    /// Write a planted-topic synthetic corpus
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        topics: usize,
        #[arg(long, default_value_t = 8)]
        per_topic: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reduce and cluster passage embeddings
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cluster: ClusterFlags,
        #[command(flatten)]
        embed: EmbedFlags,
    },
    /// Generate typed questions from clusters
    Questions {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Mark questions passing the cyclic-consistency check
    Filter {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Write judgments for filtered questions and print their statistics
    Assemble {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// All steps; writes clusters, questions and judgments into a directory
    Run {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
        #[command(flatten)]
        cluster: ClusterFlags,
        #[command(flatten)]
        embed: EmbedFlags,
    },
}

/// Runs the CLI with process stdout/stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                kind => {
                    let _ = write!(err, "{}", e.render());
                    if kind == ErrorKind::InvalidSubcommand {
                        let _ = write!(err, "\n{}", Cli::command().render_help());
                    }
                    1
                }
            };
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => AppConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => AppConfig::default(),
    };
    if let Some(l) = &cli.log_level {
        cfg.log_level = l.clone();
    }
    let _ = env_logger::Builder::new()
        .parse_filters(&cfg.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();

    match cli.command {
        Command::Index(IndexCmd::Build(a)) => {
            if let Some(s) = a.sim {
                cfg.similarity = s;
            }
            apply_embed(&mut cfg, &a.embed)?;
            verbose(cli.verbose, &cfg, err);
            index_build(&cfg, &a.corpus, &a.out, err)
        }
        Command::Search(a) => {
            if let Some(p) = &a.index {
                cfg.index = Some(p.clone());
            }
            if let Some(k) = a.k {
                cfg.merge.final_k = k;
            }
            if let Some(m) = a.not_mode {
                cfg.merge.not_mode = m;
            }
            if let Some(d) = a.depth_factor {
                cfg.merge.candidate_depth_factor = d;
            }
            if a.normalize_scores {
                cfg.merge.normalize_scores = true;
            }
            verbose(cli.verbose, &cfg, err);
            search(&cfg, &a, out)
        }
        Command::Eval(a) => {
            if let Some(k) = a.k {
                cfg.eval_k = k;
            }
            verbose(cli.verbose, &cfg, err);
            let format: ReportFormat = a.format.parse()?;
            let run = RunResult::load(&a.run)?;
            let judgments = load_judgments(&a.judgments)?;
            let report = evaluate_run(&run, &judgments, cfg.eval_k)?;
            for q in &report.missing {
                writeln!(err, "warning: {q} missing from run")?;
            }
            out.write_all(render_report(&report, format).as_bytes())?;
            Ok(())
        }
        Command::Stats(a) => {
            verbose(cli.verbose, &cfg, err);
            let stats = compute_stats(&load_judgments(&a.judgments)?);
            write_stats(&stats, &a.format, out)
        }
        Command::Gen(g) => gen(g, cfg, cli.verbose, out, err),
    }
}

fn verbose(on: bool, cfg: &AppConfig, err: &mut dyn Write) {
    if on {
        let _ = write!(err, "{}", cfg.render());
    }
}

fn apply_embed(cfg: &mut AppConfig, f: &EmbedFlags) -> Result<()> {
    if let Some(kind) = &f.embedder {
        cfg.embedder.kind = kind.parse::<EmbedderKind>()?;
        if cfg.embedder.kind == EmbedderKind::Remote {
            cfg.embedder.seed = None;
        }
    }
    if let Some(d) = f.dim {
        cfg.embedder.dim = d;
    }
    if let Some(s) = f.embed_seed {
        cfg.embedder.seed = Some(s);
    }
    if let Some(e) = &f.endpoint {
        cfg.embedder.endpoint = Some(e.clone());
    }
    cfg.embedder.validate()?;
    Ok(())
}

fn apply_gen(cfg: &mut AppConfig, f: &GenFlags) {
    if let Some(m) = f.mode {
        cfg.gen_mode = m;
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    if let Some(n) = f.per_type {
        cfg.per_type = n;
    }
    if let Some(n) = f.max_concurrent {
        cfg.max_concurrent = n;
    }
}

fn apply_cluster(cfg: &mut AppConfig, f: &ClusterFlags) {
    if let Some(c) = f.clusters {
        cfg.stop = StopRule::TargetCount(c);
    }
    if let Some(t) = f.threshold {
        cfg.stop = StopRule::Threshold(t);
    }
    if let Some(r) = f.rank {
        cfg.rank = r;
    }
    if let Some(c) = f.sample_cap {
        cfg.sample_cap = c;
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn index_build(cfg: &AppConfig, corpus_path: &Path, out: &Path, err: &mut dyn Write) -> Result<()> {
    let c = corpus(corpus_path)?;
    let idx = build_index(&c, &cfg.embedder, cfg.similarity)?;
    index::persist(&idx, out)?;
    writeln!(err, "indexed {} passages into {}", idx.len(), out.display())?;
    Ok(())
}

fn open_index(cfg: &AppConfig) -> Result<Index> {
    let Some(path) = &cfg.index else {
        bail!("no index given (use --index or the `index` config key)");
    };
    if !path.exists() {
        bail!("index file not found: {}", path.display());
    }
    let loaded = index::load(path).with_context(|| format!("loading index {}", path.display()))?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    Ok(loaded.index)
}

fn chat_client(cfg: &AppConfig) -> Result<Option<ChatClient>> {
    match cfg.chat_config() {
        Some(c) => Ok(Some(ChatClient::new(c)?)),
        None => Ok(None),
    }
}

fn search(cfg: &AppConfig, a: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let idx = open_index(cfg)?;
    let policy = cfg.merge;
    let chat = chat_client(cfg)?;
    let chat_ref = chat.as_ref().map(|c| c as &dyn ChatModel);
    let retrieve = |question: &str| -> Result<RankedList> {
        if a.whole {
            return Ok(whole_query_retrieve(&idx, question, policy.final_k)?);
        }
        let d = decompose_question(question, chat_ref)?;
        log::info!("decomposed {question:?} as {}", d.expr);
        Ok(evaluate_expr(&idx, &d.expr, &policy)?)
    };

    if let Some(path) = &a.questions {
        let judgments = load_judgments(path)?;
        let mut run = RunResult::new(Some(policy.final_k));
        for j in &judgments {
            run.insert(j.question_id.clone(), retrieve(&j.question)?);
        }
        match &a.out {
            Some(p) => run.save(p)?,
            None => out.write_all(run.to_jsonl().as_bytes())?,
        }
        return Ok(());
    }
    let list = match (&a.raw, &a.query) {
        (Some(raw), _) => evaluate_expr(&idx, &parse_boolean_query(raw)?, &policy)?,
        (None, Some(q)) => retrieve(q)?,
        (None, None) => unreachable!("clap requires an input"),
    };
    let text = match format {
        ReportFormat::Json => format!("{}\n", serde_json::to_string(&list)?),
        ReportFormat::Table => list
            .iter()
            .enumerate()
            .map(|(i, d)| format!("{}\t{}\t{:.6}\n", i + 1, d.doc_id, d.score))
            .collect(),
    };
    match &a.out {
        Some(p) => create(p)?.write_all(text.as_bytes())?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_stats(
    stats: &crate::model::DatasetStats,
    format: &str,
    out: &mut dyn Write,
) -> Result<()> {
    match format.parse::<ReportFormat>()? {
        ReportFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(stats)?)?,
        ReportFormat::Table => out.write_all(stats.render_table().as_bytes())?,
    }
    Ok(())
}

fn gen(
    cmd: GenCmd,
    mut cfg: AppConfig,
    verbose_on: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    match cmd {
        GenCmd::Synth {
            out: path,
            topics,
            per_topic,
            seed,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            verbose(verbose_on, &cfg, err);
            let s = synth_corpus(&SynthSpec {
                n_topics: topics,
                passages_per_topic: per_topic,
                seed: cfg.seed,
                ..SynthSpec::default()
            });
            save_corpus(&path, &s.corpus)?;
            writeln!(
                err,
                "wrote {} passages to {}",
                s.corpus.len(),
                path.display()
            )?;
        }
        GenCmd::Cluster {
            corpus: cp,
            out: path,
            seed,
            cluster,
            embed,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            apply_cluster(&mut cfg, &cluster);
            apply_embed(&mut cfg, &embed)?;
            verbose(verbose_on, &cfg, err);
            let c = corpus(&cp)?;
            let x = embedding_matrix(&c, &cfg.embedder)?;
            let rank = cfg.rank.min(cfg.embedder.dim - 1);
            let reduced = reduce_dims(&x, rank, cfg.sample_cap.max(rank), cfg.seed)?;
            for w in &reduced.warnings {
                writeln!(err, "warning: {w}")?;
            }
            let ids: Vec<String> = c.ids().map(str::to_string).collect();
            let clusters = cluster_passages(&reduced.projected, &ids, cfg.stop)?;
            save_clusters(&path, &clusters)?;
            writeln!(
                err,
                "wrote {} clusters to {}",
                clusters.len(),
                path.display()
            )?;
        }
        GenCmd::Questions {
            corpus: cp,
            clusters,
            out: path,
            gen,
        } => {
            apply_gen(&mut cfg, &gen);
            verbose(verbose_on, &cfg, err);
            let c = corpus(&cp)?;
            let clusters = load_clusters(&clusters)?;
            let spec = cfg.generator_spec();
            let questions =
                with_generator(&cfg, &c, |g| Ok(generate_questions(g, &clusters, &spec)?))?;
            save_questions(&path, &questions)?;
            writeln!(
                err,
                "wrote {} questions to {}",
                questions.len(),
                path.display()
            )?;
        }
        GenCmd::Filter {
            corpus: cp,
            questions,
            out: path,
            gen,
        } => {
            apply_gen(&mut cfg, &gen);
            verbose(verbose_on, &cfg, err);
            let c = corpus(&cp)?;
            let questions = load_questions(&questions)?;
            let filtered = with_generator(&cfg, &c, |g| {
                Ok(filter_questions(g, questions.clone(), cfg.max_concurrent))
            })?;
            let kept = filtered.iter().filter(|q| q.filtered).count();
            save_questions(&path, &filtered)?;
            writeln!(err, "kept {kept} of {} questions", filtered.len())?;
        }
        GenCmd::Assemble {
            corpus: cp,
            questions,
            out: path,
            format,
        } => {
            verbose(verbose_on, &cfg, err);
            let c = corpus(&cp)?;
            let (judgments, stats) = assemble_dataset(&load_questions(&questions)?, &c)?;
            save_judgments(&path, &judgments)?;
            write_stats(&stats, &format, out)?;
        }
        GenCmd::Run {
            corpus: cp,
            out_dir,
            gen,
            cluster,
            embed,
        } => {
            apply_gen(&mut cfg, &gen);
            apply_cluster(&mut cfg, &cluster);
            apply_embed(&mut cfg, &embed)?;
            verbose(verbose_on, &cfg, err);
            let c = corpus(&cp)?;
            let chat = if cfg.gen_mode == GenMode::Chat {
                Some(chat_client(&cfg)?.context("chat mode needs chat.model in the config")?)
            } else {
                None
            };
            let output = run_pipeline(
                &c,
                &cfg.pipeline_spec(),
                chat.as_ref().map(|c| c as &dyn ChatModel),
            )?;
            for w in &output.warnings {
                writeln!(err, "warning: {w}")?;
            }
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            save_clusters(out_dir.join("clusters.jsonl"), &output.clusters)?;
            save_questions(out_dir.join("questions.jsonl"), &output.questions)?;
            create(&out_dir.join("judgments.jsonl"))?
                .write_all(judgments_to_jsonl(&output.judgments).as_bytes())?;
            out.write_all(output.stats.render_table().as_bytes())?;
        }
    }
    Ok(())
}

fn with_generator<T>(
    cfg: &AppConfig,
    corpus: &Corpus,
    f: impl FnOnce(&Generator<'_>) -> Result<T>,
) -> Result<T> {
    match cfg.gen_mode {
        GenMode::Template => {
            let ctx = TemplateContext::new(corpus);
            f(&Generator::Template(&ctx))
        }
        GenMode::Chat => {
            let client = chat_client(cfg)?.context("chat mode needs chat.model in the config")?;
            let spec = cfg.generator_spec();
            f(&Generator::Chat {
                client: &client,
                prompts: &spec.prompts,
                corpus,
            })
        }
    }
}
