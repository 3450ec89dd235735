//! Subcommands of the `amrq` executable.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use amrq_core::dataset::{
    build_vocabs, debias_surface, generate_targets, resplit_by_sentence, synthetic_corpus, synthetic_gold, target_row,
    CorruptionPool, DatasetRecord, Encoder, GoldItem, SplitSpec, SynthOptions,
};
use amrq_core::dep::DepTree;
use amrq_core::exec::Executor;
use amrq_core::metrics::{dimension_names, quality_targets};
use amrq_core::model::{target_names, train, Example, GridPair, ModelConfig, RaterModel, TrainOptions};
use amrq_core::nn::{AdamConfig, Pooling};
use amrq_core::penman::{format_entry, serialize_penman, split_sembank};
use amrq_core::ridge::{featurize, DeprelSets, RidgeBaseline, DEFAULT_LAMBDAS};
use amrq_core::stats::{evaluate, fisher_z_test, Significance};
use amrq_core::{fnv1a64, mix_seed};
use clap::{Args, Parser, Subcommand};

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
use crate::config::{ConfigFile, ConfigFileError};
use crate::exec::{PoolExecutor, WallClock};
use crate::formats::{
    attach_deps, attach_gold, read_dep_trees, read_gold_sembanks, read_records, read_text, read_vocab,
    render_dep_sidecar, write_records, write_text, write_vocab, FormatError, Ingested, ScoreTable, Skipped,
    PENMAN_INDENT,
};
use crate::report::{bar_svg, eval_jsonl, eval_table, scatter_svg, train_jsonl, train_table};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "AMRQ_CONFIG";

/// File names inside a prepared data directory.
pub mod layout {
    pub const TRAIN: &str = "train.jsonl";
    pub const DEV: &str = "dev.jsonl";
    pub const TEST: &str = "test.jsonl";
    pub const DEPS: &str = "deps.conllu";
    pub const AMR_VOCAB: &str = "amr.vocab";
    pub const DEP_VOCAB: &str = "dep.vocab";
    pub const SENTENCE_VOCAB: &str = "sentence.vocab";
    pub const CHECKPOINT: &str = "model.ckpt";
}

#[derive(Debug, Parser)]
#[command(name = "amrq", version, about = "Reference-free quality rating of AMR graphs")]
pub struct Cli {
    /// `key = value` settings; command-line flags take precedence.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Worker threads for corpus-level work. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score candidate graphs against gold graphs: id plus 36 columns.
    Score(ScoreArgs),
    /// Build target scores, split by sentence, randomize surfaces, write vocabularies.
    Prepare(PrepareArgs),
    /// Train the rater on a prepared directory and write a checkpoint.
    Train(TrainArgs),
    /// Predict quality scores for records with a checkpoint.
    Predict(PredictArgs),
    /// Compare predictions with gold targets.
    Evaluate(EvaluateArgs),
    /// Fit and apply the ridge regression baseline.
    Baseline(BaselineArgs),
    /// Write a randomly edited copy of a sembank.
    Corrupt(CorruptArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Sembank of candidate graphs.
    #[arg(long)]
    pub candidate: PathBuf,
    /// Sembank of gold graphs, aligned by `# ::id` or by position.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Output table; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Records file (JSON lines) to ingest.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Gold sembank(s), joined to records by `# ::id`.
    #[arg(long)]
    pub gold_sembank: Vec<PathBuf>,
    /// CoNLL-U dependency parses keyed by `# sent_id`.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Synthesize candidates by corrupting the gold sembank.
    #[arg(long)]
    pub corrupt: bool,
    /// Synthesize candidates from this many built-in template sentences.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Candidates per gold graph when synthesizing.
    #[arg(long)]
    pub parses: Option<usize>,
    /// Largest number of edits per synthesized candidate.
    #[arg(long)]
    pub max_ops: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub dev_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Tokens rarer than this in the training split map to `<unk>`.
    #[arg(long)]
    pub min_freq: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// 3 for Smatch P/R/F1, 33 for the eleven finer families.
    #[arg(long)]
    pub out_dims: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub conv1_filters: Option<usize>,
    #[arg(long)]
    pub conv2_filters: Option<usize>,
    /// `max` or `mean` global pooling of the fused first layer.
    #[arg(long)]
    pub pooling: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared data directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output checkpoint; `<data>/model.ckpt` by default.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Training report (JSON lines); `<checkpoint>.train.jsonl` by default.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Feed the bare sentence to the second branch instead of its parse.
    #[arg(long)]
    pub no_dep: bool,
    #[arg(long)]
    pub amr_vocab: Option<PathBuf>,
    #[arg(long)]
    pub dep_vocab: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per parallel work unit; fixes the summation order.
    #[arg(long)]
    pub chunk_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Prepared data directory holding vocabularies and splits.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Records to rate; `<data>/<split>.jsonl` by default.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    #[arg(long)]
    pub amr_vocab: Option<PathBuf>,
    #[arg(long)]
    pub dep_vocab: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Prediction table written by `predict` or `baseline`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Records with targets; `<data>/<split>.jsonl` by default.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    /// A second prediction table, compared by Fisher's z on every column.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Directory for eval.txt, eval.jsonl and plots.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write scatter.svg and pearson.svg.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Split to predict.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out_dims: Option<usize>,
    /// Fixed penalty; without it the best of `--lambdas` on dev is used.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated penalties to sweep.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Edits per graph.
    #[arg(long)]
    pub ops: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// An error with its exit status: 1 for invalid content, 2 for I/O and
/// arguments.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_IO: u8 = 2;

fn invalid(msg: impl Display) -> Failure {
    Failure { code: EXIT_INVALID, error: anyhow::anyhow!("{msg}") }
}

fn io_failure(msg: impl Display) -> Failure {
    Failure { code: EXIT_IO, error: anyhow::anyhow!("{msg}") }
}

trait OrFail<T> {
    fn or_invalid(self) -> Result<T, Failure>;
    fn or_io(self) -> Result<T, Failure>;
}

impl<T, E: Display> OrFail<T> for Result<T, E> {
    fn or_invalid(self) -> Result<T, Failure> {
        self.map_err(invalid)
    }
    fn or_io(self) -> Result<T, Failure> {
        self.map_err(io_failure)
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::IdCollision { .. } => invalid(e),
            _ => io_failure(e),
        }
    }
}

impl From<ConfigFileError> for Failure {
    fn from(e: ConfigFileError) -> Self {
        io_failure(e)
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::VersionMismatch(_) | CheckpointError::Model(_) => invalid(e),
            _ => io_failure(e),
        }
    }
}

struct Env {
    file: ConfigFile,
    exec: PoolExecutor,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let threads = file.pick(cli.threads, "threads", default_threads())?;
    let exec = PoolExecutor::new(threads).or_io()?;
    let env = Env { file, exec };
    match cli.command {
        Command::Score(a) => cmd_score(&env, a),
        Command::Prepare(a) => cmd_prepare(&env, a),
        Command::Train(a) => cmd_train(&env, a),
        Command::Predict(a) => cmd_predict(&env, a),
        Command::Evaluate(a) => cmd_evaluate(&env, a),
        Command::Baseline(a) => cmd_baseline(&env, a),
        Command::Corrupt(a) => cmd_corrupt(&env, a),
    }
}

fn required(v: Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
    v.ok_or_else(|| io_failure(format!("--{flag} is required")))
}

fn path_opt(env: &Env, cli: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, Failure> {
    Ok(env.file.pick_opt(cli, key)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_skipped(skipped: &[Skipped]) {
    for s in skipped {
        eprintln!("skipped {} in {}: {}", s.id, s.source, s.reason);
    }
}

fn pair_seed(seed: u64, id: &str) -> u64 {
    mix_seed(seed, fnv1a64(id.as_bytes()))
}

fn cmd_score(env: &Env, a: ScoreArgs) -> Result<(), Failure> {
    let gold_path = required(path_opt(env, a.gold, "gold")?, "gold")?;
    let restarts = env.file.pick(a.restarts, "restarts", amrq_core::metrics::DEFAULT_RESTARTS)?;
    let seed = env.file.pick(a.seed, "seed", 0)?;
    let cand = split_sembank(&read_text(&a.candidate)?);
    let gold = split_sembank(&read_text(&gold_path)?);
    if gold.is_empty() {
        return Err(io_failure(format!("{} contains no graphs", gold_path.display())));
    }
    let by_id = cand.iter().chain(&gold).all(|e| e.id().is_some());
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    if by_id {
        let index: std::collections::BTreeMap<&str, _> = gold.iter().map(|e| (e.id().expect("checked"), e)).collect();
        for c in &cand {
            let id = c.id().expect("checked").to_owned();
            match index.get(id.as_str()) {
                Some(g) => pairs.push((id, c, *g)),
                None => failures.push(format!("{id}: no gold graph with this id")),
            }
        }
    } else {
        if cand.len() != gold.len() {
            return Err(invalid(format!("{} candidate graphs but {} gold graphs", cand.len(), gold.len())));
        }
        for (i, (c, g)) in cand.iter().zip(&gold).enumerate() {
            let id = c.id().map_or_else(|| (i + 1).to_string(), str::to_owned);
            pairs.push((id, c, g));
        }
    }
    let scored = env.exec.map(&pairs, |_, (id, c, g)| {
        let c = c.parse().map_err(|e| format!("{id}: candidate: {e}"))?;
        let g = g.parse().map_err(|e| format!("{id}: gold: {e}"))?;
        Ok::<_, String>((id.clone(), quality_targets(&c, &g, restarts, pair_seed(seed, id)).to_array().to_vec()))
    });
    let mut table = ScoreTable { columns: dimension_names(), rows: Vec::new() };
    for r in scored {
        match r {
            Ok(row) => table.rows.push(row),
            Err(e) => failures.push(e),
        }
    }
    emit(a.output.as_deref(), &table.render(Some(4)))?;
    for f in &failures {
        eprintln!("failed pair {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!("{} of {} pairs could not be scored", failures.len(), failures.len() + table.rows.len())))
    }
}

fn gold_items(bank: &crate::formats::GoldBank, trees: &std::collections::BTreeMap<String, DepTree>) -> Result<Vec<GoldItem>, Failure> {
    bank.graphs
        .iter()
        .map(|(id, (snt, g))| {
            let dep = trees.get(id).ok_or_else(|| invalid(format!("gold graph {id} has no dependency parse")))?;
            let sentence = snt.clone().unwrap_or_else(|| {
                dep.tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
            });
            Ok(GoldItem { id: id.clone(), sentence, graph: g.clone(), dep: dep.clone() })
        })
        .collect()
}

fn cmd_prepare(env: &Env, a: PrepareArgs) -> Result<(), Failure> {
    let f = &env.file;
    let out_dir = required(path_opt(env, a.out_dir, "out_dir")?, "out-dir")?;
    let seed = f.pick(a.seed, "seed", 0)?;
    let restarts = f.pick(a.restarts, "restarts", amrq_core::metrics::DEFAULT_RESTARTS)?;
    let min_freq = f.pick(a.min_freq, "min_freq", 1)?;
    let defaults = SplitSpec::default();
    let spec = SplitSpec {
        train: f.pick(a.train_frac, "train_frac", defaults.train)?,
        dev: f.pick(a.dev_frac, "dev_frac", defaults.dev)?,
        test: f.pick(a.test_frac, "test_frac", defaults.test)?,
        seed,
    };
    spec.validate().or_invalid()?;
    let synth = SynthOptions {
        parses_per_sentence: f.pick(a.parses, "parses", SynthOptions::default().parses_per_sentence)?,
        max_ops: f.pick(a.max_ops, "max_ops", SynthOptions::default().max_ops)?,
        seed,
    };
    let synthetic = f.pick_opt(a.synthetic, "synthetic")?;
    let records_path = path_opt(env, a.records, "records")?;
    let conllu = path_opt(env, a.conllu, "conllu")?;
    let mut sembanks = a.gold_sembank;
    if sembanks.is_empty() {
        sembanks.extend(f.get::<PathBuf>("gold_sembank")?);
    }

    let mut ingested = Ingested::default();
    if let Some(n) = synthetic {
        ingested.records = synthetic_corpus(&synthetic_gold(n, seed), &synth);
    } else if a.corrupt {
        if sembanks.is_empty() {
            return Err(io_failure("--corrupt needs --gold-sembank"));
        }
        let trees = read_dep_trees(&required(conllu, "conllu")?)?;
        let bank = read_gold_sembanks(&sembanks)?;
        ingested.skipped = bank.skipped.clone();
        ingested.records = synthetic_corpus(&gold_items(&bank, &trees)?, &synth);
    } else {
        let path = records_path.ok_or_else(|| io_failure("one of --records, --corrupt or --synthetic is required"))?;
        ingested = read_records(&path)?;
        if !sembanks.is_empty() {
            let bank = read_gold_sembanks(&sembanks)?;
            ingested.skipped.extend(bank.skipped.iter().cloned());
            attach_gold(&mut ingested.records, &bank)?;
        }
        if let Some(p) = &conllu {
            attach_deps(&mut ingested.records, &read_dep_trees(p)?);
        }
    }
    report_skipped(&ingested.skipped);
    let mut records = ingested.records;
    let before = records.len();
    records.retain(|r| !r.is_predict_only());
    if records.len() < before {
        eprintln!("dropped {} records with neither gold graph nor targets", before - records.len());
    }
    if records.is_empty() {
        return Err(io_failure("no usable records"));
    }

    let (mut scored, mut pending): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.targets.is_some());
    generate_targets(&mut pending, restarts, seed, &env.exec).or_invalid()?;
    scored.append(&mut pending);
    debias_surface(&mut scored, seed);
    let split = resplit_by_sentence(scored, &spec).or_invalid()?;
    if split.train.is_empty() || split.dev.is_empty() {
        return Err(invalid("the split leaves the train or dev partition empty"));
    }

    write_records(&out_dir.join(layout::TRAIN), &split.train)?;
    write_records(&out_dir.join(layout::DEV), &split.dev)?;
    write_records(&out_dir.join(layout::TEST), &split.test)?;
    let all: Vec<&DatasetRecord> = split.train.iter().chain(&split.dev).chain(&split.test).collect();
    if all.iter().any(|r| r.dep.is_some()) {
        let owned: Vec<DatasetRecord> = all.iter().map(|r| (*r).clone()).collect();
        write_text(&out_dir.join(layout::DEPS), &render_dep_sidecar(&owned))?;
    }
    let (amr, sentence) = build_vocabs(&split.train, false, min_freq).or_invalid()?;
    write_vocab(&out_dir.join(layout::AMR_VOCAB), &amr)?;
    write_vocab(&out_dir.join(layout::SENTENCE_VOCAB), &sentence)?;
    if split.train.iter().all(|r| r.dep.is_some()) {
        let (_, dep) = build_vocabs(&split.train, true, min_freq).or_invalid()?;
        write_vocab(&out_dir.join(layout::DEP_VOCAB), &dep)?;
    } else {
        eprintln!("some training records lack a dependency parse; only the sentence-only vocabulary was written");
    }
    eprintln!(
        "prepared {} train, {} dev, {} test records in {}",
        split.train.len(),
        split.dev.len(),
        split.test.len(),
        out_dir.display()
    );
    Ok(())
}

/// Records of one split with their dependency parses attached.
fn load_split(data: &Path, file: &Path, conllu: Option<&Path>) -> Result<Vec<DatasetRecord>, Failure> {
    let ingested = read_records(file)?;
    report_skipped(&ingested.skipped);
    let mut records = ingested.records;
    let side = data.join(layout::DEPS);
    let sidecar = conllu.map(Path::to_path_buf).or_else(|| side.exists().then_some(side));
    if let Some(p) = sidecar {
        attach_deps(&mut records, &read_dep_trees(&p)?);
    }
    Ok(records)
}

fn split_file(data: &Path, split: &str) -> Result<PathBuf, Failure> {
    match split {
        "train" => Ok(data.join(layout::TRAIN)),
        "dev" => Ok(data.join(layout::DEV)),
        "test" => Ok(data.join(layout::TEST)),
        other => Err(io_failure(format!("unknown split {other:?}; use train, dev or test"))),
    }
}

fn vocab_paths(data: &Path, use_dependency: bool, amr: Option<PathBuf>, dep: Option<PathBuf>) -> (PathBuf, PathBuf) {
    let dep_default = if use_dependency { layout::DEP_VOCAB } else { layout::SENTENCE_VOCAB };
    (amr.unwrap_or_else(|| data.join(layout::AMR_VOCAB)), dep.unwrap_or_else(|| data.join(dep_default)))
}

fn encode_examples(enc: &Encoder, records: &[DatasetRecord], out_dims: usize) -> Result<Vec<Example>, Failure> {
    let mut truncated = 0;
    let examples = records
        .iter()
        .map(|r| {
            let ex = enc.example(r, out_dims).or_invalid()?;
            truncated += usize::from(enc.encode(r).map(|(_, t)| t.any()).unwrap_or(false));
            Ok(ex)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    if truncated > 0 {
        eprintln!("{truncated} of {} records exceed the grid and were truncated", records.len());
    }
    Ok(examples)
}

fn model_config(f: &ConfigFile, m: &ModelArgs, amr: usize, dep: usize) -> Result<ModelConfig, Failure> {
    let out_dims = f.pick(m.out_dims, "out_dims", 3)?;
    let mut cfg = ModelConfig::paper(amr, dep, out_dims);
    cfg.hidden = f.pick(m.hidden, "hidden", cfg.hidden)?;
    cfg.embed_dim = f.pick(m.embed_dim, "embed_dim", cfg.embed_dim)?;
    cfg.conv1_filters = f.pick(m.conv1_filters, "conv1_filters", cfg.conv1_filters)?;
    cfg.conv2_filters = f.pick(m.conv2_filters, "conv2_filters", cfg.conv2_filters)?;
    cfg.pooling = match f.pick(m.pooling.clone(), "pooling", "max".to_owned())?.as_str() {
        "max" => Pooling::Max,
        "mean" => Pooling::Mean,
        other => return Err(invalid(format!("unknown pooling {other:?}"))),
    };
    Ok(cfg)
}

fn cmd_train(env: &Env, a: TrainArgs) -> Result<(), Failure> {
    let f = &env.file;
    let data = required(path_opt(env, a.data, "data")?, "data")?;
    let use_dependency = !f.flag(a.no_dep, "no_dep")?;
    let checkpoint = path_opt(env, a.checkpoint, "checkpoint")?.unwrap_or_else(|| data.join(layout::CHECKPOINT));
    let report = a.report.unwrap_or_else(|| PathBuf::from(format!("{}.train.jsonl", checkpoint.display())));
    let (amr_path, dep_path) =
        vocab_paths(&data, use_dependency, path_opt(env, a.amr_vocab, "amr_vocab")?, path_opt(env, a.dep_vocab, "dep_vocab")?);
    let amr = read_vocab(&amr_path)?;
    let dep = read_vocab(&dep_path)?;
    let seed = f.pick(a.seed, "seed", 0)?;
    let mut cfg = model_config(f, &a.model, amr.len(), dep.len())?;
    cfg.use_dependency = use_dependency;
    cfg.seed = seed;
    cfg.validate().or_invalid()?;
    let opts = TrainOptions {
        epochs: f.pick(a.epochs, "epochs", 5)?,
        batch_size: f.pick(a.batch_size, "batch_size", 64)?,
        adam: AdamConfig { lr: f.pick(a.lr, "lr", AdamConfig::default().lr)?, ..AdamConfig::default() },
        seed,
        chunk_size: f.pick(a.chunk_size, "chunk_size", TrainOptions::default().chunk_size)?,
    };
    if opts.batch_size == 0 || opts.chunk_size == 0 {
        return Err(invalid("batch and chunk sizes must be positive"));
    }
    let enc = Encoder { amr_vocab: &amr, dep_vocab: &dep, use_dependency, rows: cfg.rows, cols: cfg.cols };
    let train_set = encode_examples(&enc, &load_split(&data, &data.join(layout::TRAIN), None)?, cfg.out_dims)?;
    let dev_set = encode_examples(&enc, &load_split(&data, &data.join(layout::DEV), None)?, cfg.out_dims)?;
    eprintln!(
        "training on {} records, {} dev, {} epochs, {} threads",
        train_set.len(),
        dev_set.len(),
        opts.epochs,
        env.exec.threads()
    );
    let mut model = RaterModel::<f32>::new(cfg).or_invalid()?;
    let result = train(&mut model, &train_set, &dev_set, &opts, &env.exec, &WallClock::start()).or_invalid()?;
    save_checkpoint(&checkpoint, &model, &amr, &dep)?;
    write_text(&report, &train_jsonl(&result, &target_names(model.config().out_dims)))?;
    eprint!("{}", train_table(&result));
    eprintln!("checkpoint written to {}", checkpoint.display());
    Ok(())
}

fn cmd_predict(env: &Env, a: PredictArgs) -> Result<(), Failure> {
    let data = path_opt(env, a.data, "data")?;
    let checkpoint = match (path_opt(env, a.checkpoint, "checkpoint")?, &data) {
        (Some(p), _) => p,
        (None, Some(d)) => d.join(layout::CHECKPOINT),
        (None, None) => return Err(io_failure("--checkpoint or --data is required")),
    };
    let ckpt = load_checkpoint(&checkpoint)?;
    let cfg = ckpt.model.config().clone();
    let base = data.clone().unwrap_or_else(|| checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    let (amr_path, dep_path) =
        vocab_paths(&base, cfg.use_dependency, path_opt(env, a.amr_vocab, "amr_vocab")?, path_opt(env, a.dep_vocab, "dep_vocab")?);
    let amr = read_vocab(&amr_path)?;
    let dep = read_vocab(&dep_path)?;
    ckpt.check_vocabs(&amr, &dep)?;
    let input = match a.input {
        Some(p) => p,
        None => split_file(&base, &env.file.pick(a.split, "split", "test".to_owned())?)?,
    };
    let conllu = path_opt(env, a.conllu, "conllu")?;
    let records = load_split(&base, &input, conllu.as_deref())?;
    let enc = Encoder { amr_vocab: &amr, dep_vocab: &dep, use_dependency: cfg.use_dependency, rows: cfg.rows, cols: cfg.cols };
    let pairs: Vec<GridPair> = records.iter().map(|r| enc.encode(r).map(|(p, _)| p)).collect::<Result<_, _>>().or_invalid()?;
    let rows = ckpt.model.predict(&pairs, &env.exec).or_invalid()?;
    let table = ScoreTable {
        columns: target_names(cfg.out_dims),
        rows: records.iter().zip(rows).map(|(r, p)| (r.id.clone(), p.into_iter().map(f64::from).collect())).collect(),
    };
    emit(a.output.as_deref(), &table.render(None))
}

/// Gold values for each prediction row, by id and column name.
fn gold_rows(pred: &ScoreTable, gold: &[DatasetRecord]) -> Result<Vec<Vec<f64>>, Failure> {
    let names = dimension_names();
    let cols = pred
        .columns
        .iter()
        .map(|c| names.iter().position(|n| n == c).ok_or_else(|| invalid(format!("unknown column {c:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let by_id: std::collections::BTreeMap<&str, &DatasetRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    pred.rows
        .iter()
        .map(|(id, _)| {
            let r = by_id.get(id.as_str()).ok_or_else(|| invalid(format!("no gold record {id:?}")))?;
            let q = r.targets.as_ref().ok_or_else(|| invalid(format!("gold record {id:?} has no targets")))?;
            let all = q.to_array();
            Ok(cols.iter().map(|&j| all[j]).collect())
        })
        .collect()
}

fn cmd_evaluate(env: &Env, a: EvaluateArgs) -> Result<(), Failure> {
    let gold_path = match (path_opt(env, a.gold, "gold")?, path_opt(env, a.data, "data")?) {
        (Some(p), _) => p,
        (None, Some(d)) => split_file(&d, &env.file.pick(a.split, "split", "test".to_owned())?)?,
        (None, None) => return Err(io_failure("--gold or --data is required")),
    };
    let pred = ScoreTable::read(&a.predictions)?;
    let gold = read_records(&gold_path)?;
    report_skipped(&gold.skipped);
    let gold_values = gold_rows(&pred, &gold.records)?;
    let values: Vec<Vec<f64>> = pred.rows.iter().map(|(_, v)| v.clone()).collect();
    let classify_on = pred.columns.iter().position(|c| c == "smatch_f1");
    let mut report = evaluate(&values, &gold_values, &pred.columns, classify_on).or_invalid()?;
    if let Some(other) = &a.compare {
        let other = ScoreTable::read(other)?;
        if other.columns != pred.columns || other.rows.iter().map(|r| &r.0).ne(pred.rows.iter().map(|r| &r.0)) {
            return Err(invalid("compared tables must share ids and columns in the same order"));
        }
        let ov: Vec<Vec<f64>> = other.rows.iter().map(|(_, v)| v.clone()).collect();
        let theirs = evaluate(&ov, &gold_values, &other.columns, None).or_invalid()?;
        let n = values.len();
        for (mine, them) in report.dimensions.iter().zip(&theirs.dimensions) {
            if let (Some(r1), Some(r2)) = (mine.pearson, them.pearson) {
                if let Ok((z, p)) = fisher_z_test(r1, n, r2, n) {
                    report.significance.push(Significance { name: format!("{} fisher z", mine.name), statistic: z, p_value: p });
                }
            }
        }
    }
    let table = eval_table(&report);
    print!("{table}");
    if let Some(dir) = &a.out_dir {
        write_text(&dir.join("eval.txt"), &table)?;
        write_text(&dir.join("eval.jsonl"), &eval_jsonl(&report))?;
        if a.plots {
            let j = classify_on.unwrap_or(0);
            let col = |rows: &[Vec<f64>]| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
            let title = format!("{} predicted vs gold", pred.columns.get(j).map_or("", String::as_str));
            write_text(&dir.join("scatter.svg"), &scatter_svg(&title, &col(&gold_values), &col(&values)))?;
            let rho: Vec<Option<f64>> = report.dimensions.iter().map(|d| d.pearson).collect();
            write_text(&dir.join("pearson.svg"), &bar_svg("Pearson per dimension", &pred.columns, &rho))?;
        }
    }
    Ok(())
}

fn features(records: &[DatasetRecord], sets: &DeprelSets) -> Result<Vec<Vec<f64>>, Failure> {
    records
        .iter()
        .map(|r| {
            let dep = r.dep.as_ref().ok_or_else(|| invalid(format!("record {} has no dependency parse", r.id)))?;
            Ok(featurize(&r.candidate, dep, sets).values.to_vec())
        })
        .collect()
}

fn targets(records: &[DatasetRecord], out_dims: usize) -> Result<Vec<Vec<f64>>, Failure> {
    records
        .iter()
        .map(|r| {
            let q = r.targets.as_ref().ok_or_else(|| invalid(format!("record {} has no targets", r.id)))?;
            Ok(target_row(q, out_dims))
        })
        .collect()
}

fn cmd_baseline(env: &Env, a: BaselineArgs) -> Result<(), Failure> {
    let f = &env.file;
    let data = required(path_opt(env, a.data, "data")?, "data")?;
    let out_dims = f.pick(a.out_dims, "out_dims", 3)?;
    if target_names(out_dims).is_empty() {
        return Err(invalid(format!("out-dims must be 3 or 33, not {out_dims}")));
    }
    let split = f.pick(a.split, "split", "test".to_owned())?;
    let sets = DeprelSets::default();
    let train_recs = load_split(&data, &data.join(layout::TRAIN), None)?;
    let dev_recs = load_split(&data, &data.join(layout::DEV), None)?;
    let target_recs = load_split(&data, &split_file(&data, &split)?, None)?;
    let (x, y) = (features(&train_recs, &sets)?, targets(&train_recs, out_dims)?);
    let model = match f.pick_opt(a.lambda, "lambda")? {
        Some(lambda) => RidgeBaseline::fit(&x, &y, lambda).or_invalid()?,
        None => {
            let grid = match f.pick_opt(a.lambdas, "lambdas")? {
                Some(list) => list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| io_failure(format!("bad lambda {v:?}"))))
                    .collect::<Result<Vec<_>, _>>()?,
                None => DEFAULT_LAMBDAS.to_vec(),
            };
            let (dx, dy) = (features(&dev_recs, &sets)?, targets(&dev_recs, out_dims)?);
            let (model, sweep) = RidgeBaseline::fit_with_sweep(&x, &y, &dx, &dy, &grid).or_invalid()?;
            for (lambda, score) in sweep {
                eprintln!("lambda {lambda}: dev mean pearson {score:.4}");
            }
            model
        }
    };
    eprintln!("ridge lambda {}", model.lambda);
    let rows = features(&target_recs, &sets)?;
    let table = ScoreTable {
        columns: target_names(out_dims),
        rows: target_recs.iter().zip(&rows).map(|(r, x)| (r.id.clone(), model.predict(x))).collect(),
    };
    emit(a.output.as_deref(), &table.render(None))
}

fn cmd_corrupt(env: &Env, a: CorruptArgs) -> Result<(), Failure> {
    let gold = required(path_opt(env, a.gold, "gold")?, "gold")?;
    let seed = env.file.pick(a.seed, "seed", 0)?;
    let entries = split_sembank(&read_text(&gold)?);
    if entries.is_empty() {
        return Err(io_failure(format!("{} contains no graphs", gold.display())));
    }
    let mut graphs = Vec::new();
    let mut failures = 0;
    for (i, e) in entries.iter().enumerate() {
        let id = e.id().map_or_else(|| (i + 1).to_string(), str::to_owned);
        match e.parse() {
            Ok(g) => graphs.push((id, e.sentence().map(str::to_owned), g)),
            Err(err) => {
                eprintln!("skipped {id}: {err}");
                failures += 1;
            }
        }
    }
    let pool = CorruptionPool::from_graphs(graphs.iter().map(|(_, _, g)| g));
    let blocks = env.exec.map(&graphs, |_, (id, snt, g)| {
        let c = amrq_core::dataset::corrupt(g, a.ops, &pool, pair_seed(seed, id));
        format_entry(id, snt.as_deref(), &serialize_penman(&c, PENMAN_INDENT))
    });
    emit(a.output.as_deref(), &blocks.join("\n"))?;
    if failures > 0 {
        return Err(invalid(format!("{failures} graphs could not be parsed")));
    }
    Ok(())
}
