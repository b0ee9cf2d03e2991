//! Command-line front end: `tokenize`, `build-graph`, `train`, `evaluate`
//! and `inspect`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
//! `SEQ_HYGAN_THREADS` caps the number of worker threads.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, CorpusFormat, LabeledCorpus, SplitAssignment};
use crate::error::{Error, Result};
use crate::hypergraph::{build_hypergraph, SequenceHypergraph};
use crate::model::{export_attention, forward, top_members, GraphInputs, ModelConfig, ModelParameters, Mode};
use crate::numerics::ParamStore;
use crate::tokenize::{tokenize_corpus, TokenizerSpec, DEFAULT_MAX_MERGES};
use crate::trainer::{predict_all, run_experiment, score_ids, ExperimentOptions, HyperGrid, TrainConfig};

pub const THREADS_ENV: &str = "SEQ_HYGAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "seq-hygan", version, about = "Sequence classification with hypergraph attention")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a subsequence vocabulary and tokenize every sequence.
    Tokenize(TokenizeArgs),
    /// Build and export the sequence hypergraph.
    BuildGraph(BuildGraphArgs),
    /// Train and test over repeated random splits.
    Train(TrainArgs),
    /// Score a trained run on one of its split buckets.
    Evaluate(EvaluateArgs),
    /// Rank a sequence's subsequences by node-level attention.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kmer,
    Espf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Fasta,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Labeled sequences (`sequence,label` CSV or FASTA with `>id label` headers).
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
}

#[derive(Debug, Args)]
pub struct TokenizerArgs {
    /// Flat TOML file with `method`, `k`, `beta_freq`, `max_merges`.
    #[arg(long)]
    pub tokenizer_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub beta_freq: Option<u64>,
    /// Maximum number of ESPF merges.
    #[arg(long)]
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Output directory for `vocab.tsv`, `tokens.tsv` and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Output prefix; writes `<prefix>.incidence.tsv`, `.labels.tsv`, `.nodes.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Grid-search the hyperparameters, over the given TOML grid or the default one.
    #[arg(long, num_args = 0..=1, value_name = "FILE", conflicts_with = "config")]
    pub grid: Option<Option<PathBuf>>,
    /// Flat TOML training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Fraction of all sequences whose labels are used for training.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Replace both attention levels by mean aggregation.
    #[arg(long)]
    pub no_attention: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long, default_value = "test")]
    pub bucket: String,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Graph prefix as written by `build-graph` or `train`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Model configuration; defaults to `model_config.json` next to the checkpoint.
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub sequence_id: usize,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Also write every attention coefficient to this file.
    #[arg(long)]
    pub attention_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenizerFile {
    method: Option<String>,
    k: Option<usize>,
    beta_freq: Option<u64>,
    max_merges: Option<usize>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl TokenizerArgs {
    /// File values first, then flags on top.
    pub fn resolve(&self) -> Result<TokenizerSpec> {
        let file: TokenizerFile = match &self.tokenizer_config {
            Some(p) => read_toml(p)?,
            None => TokenizerFile::default(),
        };
        let method = match (self.method, file.method.as_deref()) {
            (Some(m), _) => m,
            (None, Some("kmer")) => Method::Kmer,
            (None, Some("espf")) => Method::Espf,
            (None, Some(other)) => return Err(Error::Config(format!("unknown tokenizer method `{other}`"))),
            (None, None) => return Err(Error::Config("no tokenizer method given (--method or --tokenizer-config)".into())),
        };
        Ok(match method {
            Method::Kmer => TokenizerSpec::Kmer {
                k: self
                    .k
                    .or(file.k)
                    .ok_or_else(|| Error::Config("k-mer tokenization needs --k".into()))?,
            },
            Method::Espf => TokenizerSpec::Espf {
                beta_freq: self
                    .beta_freq
                    .or(file.beta_freq)
                    .ok_or_else(|| Error::Config("ESPF tokenization needs --beta-freq".into()))?,
                max_merges: self.max_vocab.or(file.max_merges).unwrap_or(DEFAULT_MAX_MERGES),
            },
        })
    }
}

impl CorpusArgs {
    pub fn load(&self) -> Result<LabeledCorpus> {
        let format = match self.format {
            Some(InputFormat::Csv) => CorpusFormat::Csv,
            Some(InputFormat::Fasta) => CorpusFormat::Fasta,
            None => CorpusFormat::from_path(&self.input),
        };
        load_corpus(&self.input, format)
    }
}

impl TrainArgs {
    pub fn resolve_config(&self) -> Result<TrainConfig> {
        let mut cfg: TrainConfig = match &self.config {
            Some(p) => read_toml(p)?,
            None => TrainConfig::default(),
        };
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.max_epochs {
            cfg.max_epochs = e;
        }
        if let Some(p) = self.patience {
            cfg.patience = p;
        }
        if self.no_attention {
            cfg.attention = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_grid(&self) -> Result<Option<HyperGrid>> {
        match &self.grid {
            None => Ok(None),
            Some(None) => Ok(Some(HyperGrid::table4())),
            Some(Some(p)) => Ok(Some(read_toml(p)?)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation: resolved configuration, input digests
/// and written artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn write(&self, path: &Path) -> Result<()> {
        write_file(path, serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_tokenize(args: &TokenizeArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = args.corpus.load()?;
    let spec = args.tokenizer.resolve()?;
    let seqs: Vec<&str> = corpus.sequences().collect();
    let tok = tokenize_corpus(&seqs, &spec)?;
    create_dir(&args.out)?;
    let vocab = args.out.join("vocab.tsv");
    let tokens = args.out.join("tokens.tsv");
    tok.vocab.write(&vocab)?;
    tok.write_token_lists(&tokens)?;

    let mut manifest = RunManifest::new("tokenize", serde_json::to_value(spec)?);
    manifest.add_input(&args.corpus.input)?;
    manifest.artifacts = vec![file_name(&vocab), file_name(&tokens)];
    manifest.write(&args.out.join("manifest.json"))?;

    writeln!(out, "{spec}").ok();
    writeln!(out, "sequences={}", corpus.len()).ok();
    writeln!(out, "vocabulary={}", tok.vocab.len()).ok();
    writeln!(out, "nodes={}", tok.distinct_tokens()).ok();
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_build_graph(args: &BuildGraphArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = args.corpus.load()?;
    let spec = args.tokenizer.resolve()?;
    let seqs: Vec<&str> = corpus.sequences().collect();
    let tok = tokenize_corpus(&seqs, &spec)?;
    let hg = build_hypergraph(&corpus, &tok.token_lists())?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    hg.save(&args.out)?;

    let mut manifest = RunManifest::new("build-graph", serde_json::to_value(spec)?);
    manifest.add_input(&args.corpus.input)?;
    let base = file_name(&args.out);
    manifest.artifacts = [".incidence.tsv", ".labels.tsv", ".nodes.tsv"]
        .iter()
        .map(|s| format!("{base}{s}"))
        .collect();
    manifest.write(&with_suffix(&args.out, ".manifest.json"))?;

    let s = hg.stats();
    writeln!(out, "nodes={} hyperedges={} nnz={} kappa={:.4} chi={:.4}", s.n, s.m, s.nnz, s.kappa, s.chi).ok();
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.resolve_config()?;
    let grid = args.resolve_grid()?;
    let spec = args.tokenizer.resolve()?;
    let corpus = args.corpus.load()?;
    let opts = ExperimentOptions {
        grid,
        train_fraction: args.train_fraction,
    };
    let mut exp = run_experiment(&corpus, &spec, &cfg, &opts)?;

    let dir = &args.out_dir;
    create_dir(dir)?;
    let files = [
        "report.json",
        "checkpoint.bin",
        "model_config.json",
        "split.tsv",
        "vocab.tsv",
        "tokens.tsv",
        "graph.incidence.tsv",
        "graph.labels.tsv",
        "graph.nodes.tsv",
    ];
    exp.params.save(dir.join("checkpoint.bin"))?;
    exp.report.checkpoint = Some("checkpoint.bin".into());
    write_file(&dir.join("report.json"), exp.report.to_json()?)?;
    write_file(
        &dir.join("model_config.json"),
        serde_json::to_string_pretty(&exp.report.model)? + "\n",
    )?;
    exp.split.write_manifest(dir.join("split.tsv"))?;
    exp.tokenization.vocab.write(dir.join("vocab.tsv"))?;
    exp.tokenization.write_token_lists(dir.join("tokens.tsv"))?;
    exp.hypergraph.save(dir.join("graph"))?;

    let mut manifest = RunManifest::new(
        "train",
        serde_json::json!({
            "tokenizer": spec,
            "train": exp.report.config,
            "grid": opts.grid,
            "train_fraction": opts.train_fraction,
        }),
    );
    manifest.add_input(&args.corpus.input)?;
    for p in [&args.tokenizer.tokenizer_config, &args.config].into_iter().flatten() {
        manifest.add_input(p)?;
    }
    if let Some(Some(p)) = &args.grid {
        manifest.add_input(p)?;
    }
    manifest.artifacts = files.iter().map(|s| s.to_string()).collect();
    manifest.write(&dir.join("manifest.json"))?;

    let g = &exp.report.graph;
    writeln!(out, "nodes={} hyperedges={} nnz={}", g.n, g.m, g.nnz).ok();
    for r in &exp.report.repeats {
        writeln!(
            out,
            "repeat={} best_epoch={} epochs={} test_precision={:.4} test_recall={:.4} test_f1={:.4}",
            r.repeat, r.best_epoch, r.epochs_run, r.test.macro_avg.precision, r.test.macro_avg.recall, r.test.macro_avg.f1
        )
        .ok();
    }
    let m = &exp.report.mean.macro_avg;
    writeln!(out, "mean precision={:.4} recall={:.4} f1={:.4}", m.precision, m.recall, m.f1).ok();
    Ok(())
}

fn load_model(checkpoint: &Path, model_config: &Path, hg: &SequenceHypergraph) -> Result<(ModelConfig, GraphInputs, ModelParameters)> {
    let text = fs::read_to_string(model_config).map_err(|e| Error::io(model_config, e))?;
    let cfg: ModelConfig = serde_json::from_str(&text)?;
    if cfg.in_dim != hg.num_edges() || cfg.classes != hg.num_classes() {
        return Err(Error::Config(format!(
            "model expects {} hyperedges and {} classes, graph has {} and {}",
            cfg.in_dim,
            cfg.classes,
            hg.num_edges(),
            hg.num_classes()
        )));
    }
    let inputs = GraphInputs::one_hot(hg, cfg.node_init)?;
    let store = ParamStore::load(checkpoint)?;
    let params = ModelParameters::from_store(store, &cfg, inputs.node_features.cols())?;
    Ok((cfg, inputs, params))
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let dir = &args.run_dir;
    let hg = SequenceHypergraph::load(dir.join("graph"))?;
    let (cfg, inputs, params) = load_model(&dir.join("checkpoint.bin"), &dir.join("model_config.json"), &hg)?;
    let split = SplitAssignment::read_manifest(dir.join("split.tsv"), 0)?;
    let ids = match args.bucket.parse()? {
        crate::corpus::Bucket::Train => &split.train_ids,
        crate::corpus::Bucket::Val => &split.val_ids,
        crate::corpus::Bucket::Test => &split.test_ids,
        crate::corpus::Bucket::Unlabeled => &split.unlabeled_ids,
    };
    if ids.is_empty() {
        return Err(Error::InvalidArgument(format!("bucket `{}` is empty", args.bucket)));
    }
    let preds = predict_all(&hg, &inputs, &params, &cfg)?;
    let s = score_ids(&preds, hg.labels(), ids)?;
    writeln!(out, "bucket={} sequences={}", args.bucket, ids.len()).ok();
    for (name, sc) in [("macro", s.macro_avg), ("weighted", s.weighted_avg)] {
        writeln!(out, "{name} precision={:.4} recall={:.4} f1={:.4}", sc.precision, sc.recall, sc.f1).ok();
    }
    writeln!(out, "accuracy={:.4}", s.accuracy).ok();
    Ok(())
}

fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let hg = SequenceHypergraph::load(&args.graph)?;
    if args.sequence_id >= hg.num_edges() {
        return Err(Error::UnknownSequence(args.sequence_id));
    }
    let model_config = match &args.model_config {
        Some(p) => p.clone(),
        None => args
            .checkpoint
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("model_config.json"),
    };
    let (cfg, inputs, params) = load_model(&args.checkpoint, &model_config, &hg)?;
    let pass = forward(&hg, &inputs, &params, &cfg, Mode::Eval)?;
    if let Some(p) = &args.attention_out {
        export_attention(&hg, &pass.trace, p)?;
    }
    let label = &hg.label_names()[hg.labels()[args.sequence_id]];
    let pred = crate::model::predict(pass.logits())[args.sequence_id];
    writeln!(
        out,
        "sequence={} label={} predicted={}",
        args.sequence_id,
        label,
        hg.label_names()[pred]
    )
    .ok();
    for (rank, (node, delta)) in top_members(&hg, &pass.trace, args.sequence_id, args.top)?.into_iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.6}", rank + 1, hg.node_names()[node], delta).ok();
    }
    Ok(())
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let run = |out: &mut dyn Write| match &cli.command {
        Command::Tokenize(a) => cmd_tokenize(a, out),
        Command::BuildGraph(a) => cmd_build_graph(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    };
    match thread_count()? {
        None => run(out),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run(out))
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
