//! `langprop`: language identification of tweets from character n-gram
//! content scores combined with label propagation over the social graph.

mod config;

use std::collections::{BTreeSet, HashSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use langprop_core::content_model::TrainConfig;
use langprop_core::corpus::{parse_follows, parse_tweets};
use langprop_core::hybrid::{read_predictions, write_predictions};
use langprop_core::pipeline::{self, ContentConfig};
use langprop_core::propagation::propagate;
use langprop_core::{
    ContentModel, EvaluationReport, FeatureSpace, FollowPair, GraphConfig, HybridConfig, KnnConfig, Lang, MadConfig,
    NgramRange, PipelineConfig, PredictionRecord, PropagationResult, SocialGraph, SynthConfig, Tweet,
};
use log::{info, warn};

#[derive(Parser, Debug)]
#[command(name = "langprop", version, about, args_override_self = true)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// File of `key = value` lines supplying any flag of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the one-vs-rest content model.
    TrainContent(TrainContentArgs),
    /// Build the tweet/user/world graph and seed it with training labels.
    BuildGraph(BuildGraphArgs),
    /// Run Modified Adsorption over a graph file.
    Propagate(PropagateArgs),
    /// Combine content and social scores into per-tweet decisions.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic two-language corpus with a follower graph.
    Synth(SynthArgs),
    /// Train, build the graph, propagate, predict and evaluate in one go.
    RunAll(RunAllArgs),
}

#[derive(Args, Debug, Clone)]
struct ContentOpts {
    #[arg(long, default_value_t = NgramRange::default().min)]
    ngram_min: usize,
    #[arg(long, default_value_t = NgramRange::default().max)]
    ngram_max: usize,
    /// Drop n-grams seen in fewer training tweets than this.
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    /// Inverse regularization strength C.
    #[arg(long, default_value_t = TrainConfig::default().reg_c)]
    reg_c: f64,
    #[arg(long, default_value_t = TrainConfig::default().tol)]
    train_tol: f64,
    #[arg(long, default_value_t = TrainConfig::default().max_iters)]
    train_max_iters: usize,
    /// Comma-separated language codes (default: those seen in training).
    #[arg(long, value_delimiter = ',')]
    languages: Option<Vec<Lang>>,
    /// Treat ambiguous gold labels as negatives for their member languages.
    #[arg(long)]
    ambiguous_as_negative: bool,
}

impl ContentOpts {
    fn config(&self) -> ContentConfig {
        ContentConfig {
            ngrams: NgramRange {
                min: self.ngram_min,
                max: self.ngram_max,
            },
            min_df: self.min_df,
            languages: self.languages.clone(),
            train: TrainConfig {
                reg_c: self.reg_c,
                tol: self.train_tol,
                max_iters: self.train_max_iters,
                ambiguous_as_positive: !self.ambiguous_as_negative,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
struct KnnOpts {
    /// Neighbors per tweet as a fraction of all tweets.
    #[arg(long, default_value_t = KnnConfig::default().k_fraction)]
    k_fraction: f64,
    /// Upper bound on neighbors per tweet.
    #[arg(long)]
    k_max: Option<usize>,
}

impl KnnOpts {
    fn config(&self) -> KnnConfig {
        KnnConfig {
            k_fraction: self.k_fraction,
            k_max: self.k_max,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct GraphOpts {
    #[arg(long, default_value_t = GraphConfig::default().tweet_user_weight)]
    tweet_user_weight: f64,
    #[arg(long, default_value_t = GraphConfig::default().user_user_weight)]
    user_user_weight: f64,
    #[arg(long, default_value_t = GraphConfig::default().user_world_weight)]
    user_world_weight: f64,
}

impl GraphOpts {
    fn config(&self) -> GraphConfig {
        GraphConfig {
            tweet_user_weight: self.tweet_user_weight,
            user_user_weight: self.user_user_weight,
            user_world_weight: self.user_world_weight,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct MadOpts {
    /// Weight of the seed-fidelity term.
    #[arg(long, default_value_t = MadConfig::default().mu1)]
    mu1: f64,
    /// Weight of the neighbor-smoothness term.
    #[arg(long, default_value_t = MadConfig::default().mu2)]
    mu2: f64,
    /// Weight of the dummy-label term.
    #[arg(long, default_value_t = MadConfig::default().mu3)]
    mu3: f64,
    #[arg(long, default_value_t = MadConfig::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = MadConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = MadConfig::default().tol)]
    tol: f64,
}

impl MadOpts {
    fn config(&self) -> MadConfig {
        MadConfig {
            mu1: self.mu1,
            mu2: self.mu2,
            mu3: self.mu3,
            beta: self.beta,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct HybridOpts {
    /// Weight of the content scores.
    #[arg(long, default_value_t = HybridConfig::default().lambda1)]
    lambda1: f64,
    /// Weight of the social scores.
    #[arg(long, default_value_t = HybridConfig::default().lambda2)]
    lambda2: f64,
    /// Answer `und` when the best normalized score falls below this.
    #[arg(long, default_value_t = HybridConfig::default().und_threshold)]
    und_threshold: f64,
}

impl HybridOpts {
    fn config(&self) -> HybridConfig {
        HybridConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            und_threshold: self.und_threshold,
        }
    }
}

#[derive(Args, Debug)]
struct TrainContentArgs {
    /// Labeled tweets (id, user, lang, text).
    #[arg(long)]
    tweets: PathBuf,
    /// Output weights file.
    #[arg(long)]
    model: PathBuf,
    /// Output feature-space file.
    #[arg(long)]
    space: PathBuf,
    /// Labeled tweets to report held-out accuracy on.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[command(flatten)]
    content: ContentOpts,
}

#[derive(Args, Debug)]
struct BuildGraphArgs {
    /// Training tweets; labeled ones become seeds.
    #[arg(long)]
    train: PathBuf,
    /// Test tweets, added unseeded.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Follow pairs (user, user).
    #[arg(long)]
    follows: Option<PathBuf>,
    /// Output graph file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knn: KnnOpts,
    #[command(flatten)]
    graph: GraphOpts,
}

#[derive(Args, Debug)]
struct PropagateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Output per-node score dump.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mad: MadOpts,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Tweets to label.
    #[arg(long)]
    tweets: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    space: PathBuf,
    /// Propagation dump; may be omitted when --lambda2 is 0.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Output predictions file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hybrid: HybridOpts,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Tweets file carrying the gold labels.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Also write the report as TSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Directory receiving train.tsv, test.tsv and follows.tsv.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().n_users)]
    n_users: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_communities)]
    n_communities: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_train)]
    n_train: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_test)]
    n_test: usize,
    /// Words per language.
    #[arg(long, default_value_t = SynthConfig::default().vocab_size)]
    vocab_size: usize,
    /// Fraction of vocabulary shared by the two languages.
    #[arg(long, default_value_t = SynthConfig::default().overlap)]
    overlap: f64,
    /// Probability a user tweets in their community's language.
    #[arg(long, default_value_t = SynthConfig::default().monolinguality)]
    monolinguality: f64,
    /// Follow probability within a community.
    #[arg(long, default_value_t = SynthConfig::default().follow_in)]
    follow_in: f64,
    /// Follow probability across communities.
    #[arg(long, default_value_t = SynthConfig::default().follow_out)]
    follow_out: f64,
    #[arg(long, default_value_t = SynthConfig::default().words_min)]
    words_min: usize,
    #[arg(long, default_value_t = SynthConfig::default().words_max)]
    words_max: usize,
}

#[derive(Args, Debug)]
struct RunAllArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    follows: Option<PathBuf>,
    /// Directory receiving every intermediate and final artifact.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    content: ContentOpts,
    #[command(flatten)]
    knn: KnnOpts,
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    mad: MadOpts,
    #[command(flatten)]
    hybrid: HybridOpts,
}

/// Bad input or flags, as opposed to a failure of the tool itself.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use langprop_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io(_) => 1,
                _ => 2,
            };
        }
    }
    1
}

fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(usage(format!("{}: file not found", path.display()))),
        Err(e) => Err(e).with_context(|| format!("opening {}", path.display())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> langprop_core::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn read_tweets(path: &Path) -> Result<Vec<Tweet>> {
    parse_tweets(open(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_follows(path: Option<&Path>) -> Result<BTreeSet<FollowPair>> {
    match path {
        Some(p) => parse_follows(open(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(BTreeSet::new()),
    }
}

fn read_model(model: &Path, space: &Path) -> Result<ContentModel> {
    let space = FeatureSpace::read_tsv(open(space)?).with_context(|| format!("in {}", space.display()))?;
    ContentModel::read(open(model)?, space).with_context(|| format!("in {}", model.display()))
}

fn accuracy(tweets: &[Tweet], records: &[PredictionRecord]) -> Option<(usize, usize)> {
    let mut n = 0;
    let mut right = 0;
    for (t, r) in tweets.iter().zip(records) {
        if let Some(g) = &t.gold {
            n += 1;
            right += usize::from(g.accepts(r.label));
        }
    }
    (n > 0).then_some((right, n))
}

fn train_content(args: &TrainContentArgs) -> Result<()> {
    let cfg = args.content.config();
    let tweets = read_tweets(&args.tweets)?;
    let (model, reports) = pipeline::train_content(&tweets, &cfg)?;
    for r in &reports {
        if !r.converged {
            warn!("{}: training stopped after {} iterations without converging", r.lang, r.iterations);
        }
        info!("{}: {} iterations, gradient {:.2e}", r.lang, r.iterations, r.grad_max_norm);
    }
    write_with(&args.space, |w| model.featurizer.space.write_tsv(w))?;
    write_with(&args.model, |w| model.write(w))?;
    let langs: Vec<&str> = model.languages().iter().map(|l| l.code()).collect();
    println!(
        "trained {} languages ({}) over {} features",
        langs.len(),
        langs.join(","),
        model.featurizer.dim()
    );
    if let Some(dev) = &args.dev {
        let dev_tweets = read_tweets(dev)?;
        let records = pipeline::predict_content_only(&model, &dev_tweets, 0.0);
        match accuracy(&dev_tweets, &records) {
            Some((right, n)) => println!("held-out accuracy {:.2}% ({right}/{n})", 100.0 * right as f64 / n as f64),
            None => println!("held-out accuracy n/a (no labeled dev tweets)"),
        }
    }
    Ok(())
}

fn build_graph(args: &BuildGraphArgs) -> Result<()> {
    let (knn, graph_cfg) = (args.knn.config(), args.graph.config());
    graph_cfg.validate()?;
    knn.validate()?;
    let train = read_tweets(&args.train)?;
    let test = match &args.test {
        Some(p) => read_tweets(p)?,
        None => Vec::new(),
    };
    let follows = read_follows(args.follows.as_deref())?;
    let graph = pipeline::build_seeded_graph(&train, &test, &follows, &knn, &graph_cfg)?;
    write_with(&args.out, |w| graph.write(w))?;
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());
    Ok(())
}

fn report_propagation(result: &PropagationResult) {
    println!("converged={} iters={}", result.converged(), result.iterations());
}

fn propagate_cmd(args: &PropagateArgs) -> Result<()> {
    let cfg = args.mad.config();
    cfg.validate()?;
    let graph = SocialGraph::read(open(&args.graph)?).with_context(|| format!("in {}", args.graph.display()))?;
    let result = propagate(&graph, &cfg)?;
    write_with(&args.out, |w| result.write_tsv(w))?;
    report_propagation(&result);
    Ok(())
}

fn predict_cmd(args: &PredictArgs) -> Result<()> {
    let cfg = args.hybrid.config();
    cfg.validate()?;
    let model = read_model(&args.model, &args.space)?;
    let tweets = read_tweets(&args.tweets)?;
    let social = match &args.scores {
        Some(p) => Some(PropagationResult::read_tsv(open(p)?).with_context(|| format!("in {}", p.display()))?),
        None if cfg.lambda2 == 0.0 => None,
        None => return Err(usage("--scores is required unless --lambda2 is 0")),
    };
    let records = pipeline::predict(&model, social.as_ref(), &tweets, &cfg)?;
    write_with(&args.out, |w| write_predictions(w, &records))?;
    println!("{} predictions written to {}", records.len(), args.out.display());
    Ok(())
}

fn evaluate_records(gold: &[Tweet], records: &[PredictionRecord]) -> Result<EvaluationReport> {
    let known: HashSet<&str> = gold.iter().map(|t| t.id.as_str()).collect();
    let unknown: Vec<&str> = records
        .iter()
        .map(|r| r.id.as_str())
        .filter(|id| !known.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(langprop_core::Error::IdMismatch(format!("predicted ids not in gold: {}", unknown.join(", "))).into());
    }
    Ok(pipeline::evaluate(gold, records)?)
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let gold = read_tweets(&args.gold)?;
    let records = read_predictions(open(&args.predictions)?).with_context(|| format!("in {}", args.predictions.display()))?;
    let report = evaluate_records(&gold, &records)?;
    print!("{}", report.to_table());
    if let Some(out) = &args.out {
        write_with(out, |w| report.write_tsv(w))?;
    }
    Ok(())
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        n_users: args.n_users,
        n_communities: args.n_communities,
        n_train: args.n_train,
        n_test: args.n_test,
        vocab_size: args.vocab_size,
        overlap: args.overlap,
        monolinguality: args.monolinguality,
        follow_in: args.follow_in,
        follow_out: args.follow_out,
        words_min: args.words_min,
        words_max: args.words_max,
    };
    let data = langprop_core::synth::generate(&cfg)?;
    data.write_dir(&args.out_dir)
        .with_context(|| format!("writing into {}", args.out_dir.display()))?;
    println!(
        "{} train, {} test tweets and {} follow pairs written to {}",
        data.train.len(),
        data.test.len(),
        data.follows.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run_all(args: &RunAllArgs) -> Result<()> {
    let cfg = PipelineConfig {
        content: args.content.config(),
        knn: args.knn.config(),
        graph: args.graph.config(),
        mad: args.mad.config(),
        hybrid: args.hybrid.config(),
    };
    cfg.validate()?;
    let train = read_tweets(&args.train)?;
    let test = read_tweets(&args.test)?;
    let follows = read_follows(args.follows.as_deref())?;
    let out = pipeline::run(&train, &test, &follows, &cfg)?;

    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_with(&dir.join("space.tsv"), |w| out.model.featurizer.space.write_tsv(w))?;
    write_with(&dir.join("model.txt"), |w| out.model.write(w))?;
    write_with(&dir.join("scores.tsv"), |w| out.propagation.write_tsv(w))?;
    write_with(&dir.join("predictions.tsv"), |w| write_predictions(w, &out.hybrid))?;
    write_with(&dir.join("predictions.content.tsv"), |w| write_predictions(w, &out.content_only))?;

    println!("{} nodes, {} edges", out.graph_nodes, out.graph_edges);
    report_propagation(&out.propagation);
    let content = evaluate_records(&test, &out.content_only)?;
    let hybrid = evaluate_records(&test, &out.hybrid)?;
    write_with(&dir.join("report.content.tsv"), |w| content.write_tsv(w))?;
    write_with(&dir.join("report.tsv"), |w| hybrid.write_tsv(w))?;
    println!("content only");
    print!("{}", content.to_table());
    println!("content + social");
    print!("{}", hybrid.to_table());
    Ok(())
}

fn real_main(args: Vec<OsString>) -> Result<()> {
    let args = match config::config_path(&args) {
        Some(p) => config::splice(&Cli::command(), args, Path::new(&p)).map_err(|e| usage(format!("{e:#}")))?,
        None => args,
    };
    let cli = Cli::parse_from(args);
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::TrainContent(a) => train_content(a),
        Command::BuildGraph(a) => build_graph(a),
        Command::Propagate(a) => propagate_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::RunAll(a) => run_all(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
