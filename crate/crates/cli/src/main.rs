mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{ConfigFile, Resolver};
use termweight::corpus::{load_collection, load_qrels, load_queries, CollectionFormat};
use termweight::eval::{self, Metric, SweepGrid};
use termweight::index::{weight_rank_profile, IndexMode, MissingWeightPolicy};
use termweight::retrieval::{
    export_candidates, make_sdm_query, make_weighted_query, read_run, run_tag, search_batch,
    write_run, Bm25Params, Model, SdmMix, SearchQuery, WeightedQuery, DEFAULT_K, DEFAULT_LAMBDA,
    DEFAULT_SDM_WINDOW,
};
use termweight::targets::{compute_qtr, compute_tr, read_weights, write_weights};
use termweight::weigher::{
    build_examples, predict_records, train, FeatureExtractor, LinearModel, TrainConfig, WeighedText,
};
use termweight::{
    AnalyzerConfig, Document, InvertedIndex, Query, Stemming, TermTargets, WeightTable,
};

/// Learned term weighting: build weighted indexes, train term weighers,
/// search and evaluate.
#[derive(Debug, Parser)]
#[command(name = "termweight", version)]
struct Cli {
    /// Plain-text key=value file supplying defaults for command flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for indexing, search and evaluation (0 = all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an inverted index from a collection, with tf or predicted weights
    Index(IndexArgs),
    /// Compute ground-truth term weights from relevance judgments
    Targets(TargetsArgs),
    /// Train the linear term weigher on a target file
    Train(TrainArgs),
    /// Weigh every term of a collection or query set with a trained model
    Predict(PredictArgs),
    /// Run queries against an index and write a run file
    Search(SearchArgs),
    /// Score a run against relevance judgments
    Evaluate(EvaluateArgs),
    /// Count per-query wins, ties and losses of one run against another
    Compare(CompareArgs),
    /// Grid-search retrieval parameters
    Sweep(SweepArgs),
    /// Report index statistics and the term weight rank profile
    Stats(StatsArgs),
    /// Cut a run to a fixed depth for re-ranking
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct AnalyzerArgs {
    /// Stopword list, one word per line
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Disable Porter stemming
    #[arg(long)]
    no_stem: bool,
    /// Keep letter case
    #[arg(long)]
    no_lowercase: bool,
}

impl AnalyzerArgs {
    fn resolve(&self, r: &mut Resolver, with_stopwords: bool) -> Result<AnalyzerConfig> {
        let lowercase = r.get("lowercase", self.no_lowercase.then_some(false), true)?;
        let stem = r.get(
            "stem",
            self.no_stem.then_some(Stemming::None),
            Stemming::Porter,
        )?;
        let mut analyzer = AnalyzerConfig {
            lowercase,
            stem,
            ..AnalyzerConfig::default()
        };
        if with_stopwords {
            let path = r.optional("stopwords", self.stopwords.clone().map(Shown))?;
            if let Some(Shown(path)) = path {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read stopwords {}", path.display()))?;
                analyzer = analyzer.with_stopwords(termweight::analyzer::parse_stopwords(&text));
            }
        }
        Ok(analyzer)
    }
}

/// A path that can pass through the config resolver.
#[derive(Debug, Clone)]
struct Shown(PathBuf);

impl std::str::FromStr for Shown {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(Shown(PathBuf::from(s)))
    }
}

impl std::fmt::Display for Shown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

#[derive(Debug, Args)]
struct CollectionArgs {
    /// Document collection (TSV `id<TAB>text` or JSON Lines)
    #[arg(long, value_name = "FILE")]
    collection: PathBuf,
    /// Collection format; guessed from the extension when absent
    #[arg(long, value_name = "FORMAT")]
    format: Option<CollectionFormat>,
}

impl CollectionArgs {
    fn load(&self, r: &mut Resolver) -> Result<Vec<Document>> {
        let guessed = CollectionFormat::from_path(&self.collection);
        let format = r.get("format", self.format, guessed)?;
        Ok(load_collection(&self.collection, format)?)
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    collection: CollectionArgs,
    /// Output index directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Predicted document term weights (JSON Lines); builds a weighted index
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Integer scale applied to predicted weights [default: 100]
    #[arg(long, value_name = "N")]
    scale: Option<u32>,
    /// Documents without weights: strict, drop-doc or use-tf [default: strict]
    #[arg(long, value_name = "POLICY")]
    missing: Option<MissingWeightPolicy>,
    /// Store term positions (needed for sequential dependence queries)
    #[arg(long)]
    positional: bool,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetKind {
    /// Query term recall, per document
    Qtr,
    /// Term recall, per query
    Tr,
}

#[derive(Debug, Args)]
struct TargetsArgs {
    #[arg(value_enum)]
    kind: TargetKind,
    /// Relevance judgments (`qid 0 docid grade`)
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// Queries (`qid<TAB>text`)
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    #[command(flatten)]
    collection: CollectionArgs,
    /// Output weight file (JSON Lines)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Target weight file from `targets`
    #[arg(long, value_name = "FILE")]
    targets: PathBuf,
    #[command(flatten)]
    collection: CollectionArgs,
    /// Train on queries instead of documents (targets from `targets tr`)
    #[arg(long, value_name = "FILE")]
    queries: Option<PathBuf>,
    /// Output model file (JSON)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Seed for subsampling [default: 13]
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of training examples kept [default: 1]
    #[arg(long, value_name = "FRACTION")]
    subsample: Option<f64>,
    /// Gradient descent step size [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    /// Full-batch epochs [default: 200]
    #[arg(long)]
    epochs: Option<usize>,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[command(flatten)]
    collection: CollectionArgs,
    /// Weigh these queries instead of the documents
    #[arg(long, value_name = "FILE")]
    queries: Option<PathBuf>,
    /// Output weight file (JSON Lines)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Bm25,
    Ql,
}

#[derive(Debug, Args)]
struct RetrievalParams {
    /// BM25 term frequency saturation [default: 0.9]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 length normalization [default: 0.4]
    #[arg(long)]
    b: Option<f64>,
    /// Query likelihood smoothing weight [default: 0.4]
    #[arg(long)]
    lambda: Option<f64>,
}

impl RetrievalParams {
    fn model(&self, kind: ModelKind, r: &mut Resolver) -> Result<Model> {
        let model = match kind {
            ModelKind::Bm25 => {
                let defaults = Bm25Params::default();
                let params = Bm25Params {
                    k1: r.get("k1", self.k1, defaults.k1)?,
                    b: r.get("b", self.b, defaults.b)?,
                };
                params.validate()?;
                Model::Bm25(params)
            }
            ModelKind::Ql => {
                let lambda = r.get("lambda", self.lambda, DEFAULT_LAMBDA)?;
                if !(lambda > 0.0 && lambda < 1.0) {
                    bail!("lambda must be in (0, 1), got {lambda}");
                }
                Model::Ql { lambda }
            }
        };
        Ok(model)
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(value_enum)]
    model: ModelKind,
    /// Index directory
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Queries (`qid<TAB>text`)
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    /// Output run file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Predicted query term weights (JSON Lines)
    #[arg(long, value_name = "FILE")]
    weighted_query: Option<PathBuf>,
    /// Sequential dependence queries (query likelihood, positional index)
    #[arg(long)]
    sdm: bool,
    /// Unordered window for sequential dependence queries [default: 8]
    #[arg(long)]
    window: Option<u32>,
    #[command(flatten)]
    params: RetrievalParams,
    /// Results per query [default: 1000]
    #[arg(long)]
    k: Option<u32>,
    /// Run tag; derived from the model and parameters when absent
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricKind {
    Mrr,
    Map,
    Ndcg,
    Recall,
}

impl MetricKind {
    fn name(self) -> &'static str {
        match self {
            MetricKind::Mrr => "mrr",
            MetricKind::Map => "map",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Recall => "recall",
        }
    }

    fn resolve(self, cli_k: Option<u32>, r: &mut Resolver) -> Result<Metric> {
        let default = Metric::parse(self.name(), None)?.cutoff();
        let k = r.get("metric_k", cli_k, default)?;
        Ok(Metric::parse(self.name(), Some(k))?)
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(value_enum)]
    metric: MetricKind,
    /// Run file
    #[arg(long, value_name = "FILE")]
    run: PathBuf,
    /// Relevance judgments
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// Metric cutoff (recall depth for recall) [default: 10, 1000, 20, 1000]
    #[arg(long)]
    k: Option<u32>,
    /// Also write per-query values here (`qid<TAB>value`)
    #[arg(long, value_name = "FILE")]
    per_query: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Run being judged
    #[arg(long, value_name = "FILE")]
    run_a: PathBuf,
    /// Baseline run
    #[arg(long, value_name = "FILE")]
    run_b: PathBuf,
    /// Relevance judgments
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    #[arg(long, value_enum, default_value = "mrr")]
    metric: MetricKind,
    /// Metric cutoff
    #[arg(long)]
    k: Option<u32>,
    /// Per-query differences up to this size count as ties [default: 0]
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(value_enum)]
    model: ModelKind,
    /// Index directory
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Queries (`qid<TAB>text`)
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    /// Relevance judgments
    #[arg(long, value_name = "FILE")]
    qrels: PathBuf,
    /// Comma-separated k1 values
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.9,1.2")]
    k1: Vec<f64>,
    /// Comma-separated b values
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.75")]
    b: Vec<f64>,
    /// Comma-separated lambda values
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.4,0.7")]
    lambda: Vec<f64>,
    #[arg(long, value_enum, default_value = "mrr")]
    metric: MetricKind,
    /// Metric cutoff
    #[arg(long)]
    metric_k: Option<u32>,
    /// Results per query [default: 1000]
    #[arg(long)]
    k: Option<u32>,
    /// Write the full grid here (`model<TAB>params...<TAB>value`)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Index directory
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    /// Ranks reported in the weight profile [default: 10]
    #[arg(long)]
    top_k: Option<u32>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Run file
    #[arg(long, value_name = "FILE")]
    run: PathBuf,
    /// Candidates kept per query [default: 1000]
    #[arg(long)]
    depth: Option<u32>,
    /// Output candidate file (run format)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Run tag for the exported file
    #[arg(long, default_value = "candidates")]
    tag: String,
}

fn index(args: &IndexArgs, r: &mut Resolver) -> Result<()> {
    let docs = args.collection.load(r)?;
    let analyzer = args.analyzer.resolve(r, true)?;
    let positional = r.flag("positional", args.positional, false)?;
    let index = match &args.weights {
        None => InvertedIndex::build(&docs, &analyzer, IndexMode::Tf, positional)?,
        Some(path) => {
            let scale = r.get("scale", args.scale, 100)?;
            let missing = r.get("missing", args.missing, MissingWeightPolicy::Strict)?;
            let table = WeightTable::from_records(read_weights(path)?)?;
            let mode = IndexMode::Weighted {
                weights: &table,
                scale,
                missing,
            };
            InvertedIndex::build(&docs, &analyzer, mode, positional)?
        }
    };
    index.persist(&args.out)?;
    r.write(&args.out.join("config.txt"))
}

fn targets(args: &TargetsArgs, r: &mut Resolver) -> Result<()> {
    let docs = args.collection.load(r)?;
    let queries = load_queries(&args.queries)?;
    let qrels = load_qrels(&args.qrels)?;
    let analyzer = args.analyzer.resolve(r, false)?;
    let targets = match args.kind {
        TargetKind::Qtr => compute_qtr(&qrels, &queries, &docs, &analyzer)?,
        TargetKind::Tr => compute_tr(&qrels, &queries, &docs, &analyzer)?,
    };
    let records: Vec<_> = targets.into_iter().map(TermTargets::into_record).collect();
    write_weights(&args.out, &records)?;
    r.write_beside(&args.out)
}

fn texts<'a>(docs: &'a [Document], queries: Option<&'a [Query]>) -> Vec<WeighedText<'a>> {
    match queries {
        Some(queries) => queries
            .iter()
            .map(|q| WeighedText {
                owner_id: &q.query_id,
                title: None,
                body: &q.text,
            })
            .collect(),
        None => docs.iter().map(WeighedText::from).collect(),
    }
}

fn train_cmd(args: &TrainArgs, r: &mut Resolver) -> Result<()> {
    let docs = args.collection.load(r)?;
    let analyzer = args.analyzer.resolve(r, false)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        seed: r.get("seed", args.seed, defaults.seed)?,
        subsample_fraction: r.get("subsample", args.subsample, defaults.subsample_fraction)?,
        learning_rate: r.get("lr", args.lr, defaults.learning_rate)?,
        epochs: r.get("epochs", args.epochs, defaults.epochs)?,
    };
    let queries = args.queries.as_deref().map(load_queries).transpose()?;
    let targets: Vec<TermTargets> = read_weights(&args.targets)?
        .into_iter()
        .map(|rec| TermTargets {
            owner_id: rec.owner_id,
            weights: rec.weights,
            support: 0,
        })
        .collect();
    let extractor = FeatureExtractor::from_documents(&docs, &analyzer);
    let examples = build_examples(&extractor, &texts(&docs, queries.as_deref()), &targets);
    if examples.is_empty() {
        bail!("no target term occurs in the training texts");
    }
    let model = train(&examples, &config)?;
    model.save(&args.out)?;
    r.write_beside(&args.out)
}

fn predict(args: &PredictArgs, r: &mut Resolver) -> Result<()> {
    let docs = args.collection.load(r)?;
    let analyzer = args.analyzer.resolve(r, false)?;
    let model = LinearModel::load(&args.model)?;
    let queries = args.queries.as_deref().map(load_queries).transpose()?;
    let extractor = FeatureExtractor::from_documents(&docs, &analyzer);
    let records = predict_records(&model, &extractor, &texts(&docs, queries.as_deref()))?;
    write_weights(&args.out, &records)?;
    r.write_beside(&args.out)
}

/// Builds one search query per input query, skipping (with a warning) those
/// left without usable terms.
fn build_queries(
    queries: &[Query],
    analyzer: &AnalyzerConfig,
    weights: Option<&WeightTable>,
    sdm: Option<(SdmMix, u32)>,
) -> Result<Vec<(String, SearchQuery)>> {
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        let record = match weights {
            Some(table) => Some(
                table
                    .get(&q.query_id)
                    .with_context(|| format!("no weights for query `{}`", q.query_id))?,
            ),
            None => None,
        };
        let built = match (sdm, record) {
            (Some((mix, window)), record) => {
                make_sdm_query(q, record, analyzer, mix, window).map(SearchQuery::Sdm)
            }
            (None, Some(record)) => {
                make_weighted_query(q, record, analyzer).map(|b| SearchQuery::Bow(b.query))
            }
            (None, None) => {
                WeightedQuery::uniform(&analyzer.analyze(&q.text)).map(SearchQuery::Bow)
            }
        };
        match built {
            Ok(query) => out.push((q.query_id.clone(), query)),
            Err(termweight::Error::EmptyQuery) => {
                eprintln!(
                    "warning: query `{}` has no usable terms; skipped",
                    q.query_id
                )
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn search(args: &SearchArgs, r: &mut Resolver) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let model = args.params.model(args.model, r)?;
    let k = r.get("k", args.k, DEFAULT_K)?;
    let sdm = r.flag("sdm", args.sdm, false)?;
    let sdm = if sdm {
        if args.model != ModelKind::Ql {
            bail!("--sdm requires the ql model");
        }
        Some((
            SdmMix::default(),
            r.get("window", args.window, DEFAULT_SDM_WINDOW)?,
        ))
    } else {
        None
    };
    let weights = match &args.weighted_query {
        Some(path) => Some(WeightTable::from_records(read_weights(path)?)?),
        None => None,
    };
    let queries = load_queries(&args.queries)?;
    let queries = build_queries(&queries, &index.meta().analyzer, weights.as_ref(), sdm)?;
    let run = search_batch(&index, &queries, k, model)?;
    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| run_tag(model, sdm.is_some()));
    write_run(&args.out, &run, &tag)?;
    r.write_beside(&args.out)
}

fn evaluate(args: &EvaluateArgs, r: &mut Resolver) -> Result<()> {
    let metric = args.metric.resolve(args.k, r)?;
    let run = read_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let report = eval::evaluate(&run, &qrels, metric)?;
    if let Some(path) = &args.per_query {
        report.write_tsv(path)?;
        r.write_beside(path)?;
    }
    println!("{}", report.summary_json());
    Ok(())
}

fn compare(args: &CompareArgs, r: &mut Resolver) -> Result<()> {
    let metric = args.metric.resolve(args.k, r)?;
    let epsilon = r.get("epsilon", args.epsilon, 0.0)?;
    let a = read_run(&args.run_a)?;
    let b = read_run(&args.run_b)?;
    let qrels = load_qrels(&args.qrels)?;
    let wtl = eval::win_tie_loss(&a, &b, &qrels, metric, epsilon)?;
    let out = json!({
        "metric": metric.name(),
        "k": metric.cutoff(),
        "epsilon": epsilon,
        "wins": wtl.wins,
        "ties": wtl.ties,
        "losses": wtl.losses,
    });
    println!("{out}");
    Ok(())
}

fn sweep(args: &SweepArgs, r: &mut Resolver) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let metric = args.metric.resolve(args.metric_k, r)?;
    let k = r.get("k", args.k, DEFAULT_K)?;
    let grid = match args.model {
        ModelKind::Bm25 => SweepGrid::Bm25 {
            k1: args.k1.clone(),
            b: args.b.clone(),
        },
        ModelKind::Ql => SweepGrid::Ql {
            lambda: args.lambda.clone(),
        },
    };
    let queries = load_queries(&args.queries)?;
    let queries = build_queries(&queries, &index.meta().analyzer, None, None)?;
    let qrels = load_qrels(&args.qrels)?;
    let result = eval::sweep(&index, &queries, &qrels, &grid, metric, k)?;
    if let Some(path) = &args.out {
        result.write_tsv(path)?;
        r.write_beside(path)?;
    }
    let best = match result.best {
        Model::Bm25(p) => json!({ "k1": p.k1, "b": p.b }),
        Model::Ql { lambda } => json!({ "lambda": lambda }),
    };
    let out = json!({
        "model": result.best.name(),
        "metric": metric.name(),
        "k": metric.cutoff(),
        "best": best,
        "value": result.best_value,
    });
    println!("{out}");
    Ok(())
}

fn stats(args: &StatsArgs, r: &mut Resolver) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let top_k = r.get("top_k", args.top_k, 10)?;
    let profile = weight_rank_profile(&index, top_k)?;
    let meta = index.meta();
    let out = json!({
        "doc_count": meta.doc_count,
        "terms": index.term_count(),
        "postings": index.posting_count(),
        "total_weight": meta.total_weight,
        "avgdl": meta.avgdl,
        "weighted": meta.weighted,
        "scale": meta.scale,
        "positional": meta.positional,
        "rank_profile": profile,
    });
    println!("{out}");
    Ok(())
}

fn export(args: &ExportArgs, r: &mut Resolver) -> Result<()> {
    let depth = r.get("depth", args.depth, DEFAULT_K)?;
    let run = read_run(&args.run)?;
    export_candidates(&run, depth, &args.tag, &args.out)?;
    r.write_beside(&args.out)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    // Thread count does not affect results, so it is not echoed.
    let threads = Resolver::new(&file).get("threads", cli.threads, 0)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot start worker pool")?;

    let mut r = Resolver::new(&file);
    match &cli.command {
        Command::Index(a) => index(a, &mut r),
        Command::Targets(a) => targets(a, &mut r),
        Command::Train(a) => train_cmd(a, &mut r),
        Command::Predict(a) => predict(a, &mut r),
        Command::Search(a) => search(a, &mut r),
        Command::Evaluate(a) => evaluate(a, &mut r),
        Command::Compare(a) => compare(a, &mut r),
        Command::Sweep(a) => sweep(a, &mut r),
        Command::Stats(a) => stats(a, &mut r),
        Command::Export(a) => export(a, &mut r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(1)
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    format!("{e:#}").replace('\n', " ")
}
