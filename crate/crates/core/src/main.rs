//! Command-line front end: dataset generation and ingestion, homophily
//! estimation, inference, multi-seed evaluation, and link prediction.
//!
//! All heavy lifting lives in the library; this binary parses arguments,
//! resolves the flag/config-file/default precedence, wires up a chat
//! provider, and formats results.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tagbp::config::{resolve, PipelineConfig};
use tagbp::dataset::{
    load_dataset, read_texts_jsonl, save_dataset, Dataset, EDGES_FILE, META_FILE,
};
use tagbp::defaults;
use tagbp::embedding::{AnchorProvenance, ClassEmbeddings, EmbeddingMatrix};
use tagbp::eval::{
    generate_synthetic, infer_single, link_prediction_auc, report_to_csv, run_experiment,
    ExperimentConfig, ExperimentContext, Method, RatioSource, Supervision, SyntheticSpec,
};
use tagbp::graph::{load_graph, parse_labels, GraphMeta};
use tagbp::homophily::{estimate_r, sensitivity_sweep, EstimateConfig};
use tagbp::llm::{CachingProvider, ChatProvider, DecodingParams, MockProvider, OracleProvider};

#[derive(Parser)]
#[command(
    name = "tagbp",
    version,
    about = "Node classification on text-attributed graphs via belief propagation"
)]
struct Cli {
    /// Optional TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-partition benchmark dataset directory.
    Synth(SynthArgs),
    /// Normalize raw edge/label/text files into a dataset directory.
    Ingest(IngestArgs),
    /// Estimate the graph's homophily ratio from sampled node pairs.
    EstimateR(EstimateArgs),
    /// Run one inference pass and write per-node predictions.
    Infer(InferArgs),
    /// Score methods over multiple seeds against ground-truth labels.
    Eval(EvalArgs),
    /// Hold out edges and score link prediction by smoothed cosine.
    Linkpred(LinkpredArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Target fraction of same-class edges, strictly inside (0, 1).
    #[arg(long, default_value_t = 0.8)]
    homophily: f64,
    #[arg(long, default_value_t = 8.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Gaussian noise scale around the class centroid.
    #[arg(long, default_value_t = 0.8)]
    noise: f64,
    #[arg(long, default_value_t = defaults::SEED_FIRST)]
    seed: u64,
}

#[derive(Args)]
struct IngestArgs {
    /// Edge list file: one "i j" pair per line, # comments allowed.
    #[arg(long, value_name = "FILE")]
    edges: PathBuf,
    /// Metadata TOML (node/class counts, class names, task description).
    #[arg(long, value_name = "FILE")]
    meta: PathBuf,
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Per-node class ids, one per line.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Per-node texts, one JSON string per line.
    #[arg(long, value_name = "FILE")]
    texts: Option<PathBuf>,
    /// Node embedding matrix in the binary matrix format.
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Class anchor matrix in the binary matrix format.
    #[arg(long, value_name = "FILE")]
    anchors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProvenanceArg::External)]
    anchor_provenance: ProvenanceArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProvenanceArg {
    External,
    ZeroShotClustered,
    FewShotAveraged,
}

impl From<ProvenanceArg> for AnchorProvenance {
    fn from(value: ProvenanceArg) -> Self {
        match value {
            ProvenanceArg::External => AnchorProvenance::External,
            ProvenanceArg::ZeroShotClustered => AnchorProvenance::ZeroShotClustered,
            ProvenanceArg::FewShotAveraged => AnchorProvenance::FewShotAveraged,
        }
    }
}

#[derive(Args)]
struct ProviderArgs {
    /// Chat provider: "http", "oracle" (ground-truth labels), or
    /// "mock=FIXTURE.json" (scripted responses).
    #[arg(long, default_value = "http")]
    provider: String,
    /// Directory for the on-disk response cache (disabled when unset).
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Model name sent to the provider.
    #[arg(long)]
    model: Option<String>,
    /// Sampling temperature sent to the provider.
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Edges to sample. Default: 100, or 50 when the graph has fewer
    /// than 500 edges.
    #[arg(long)]
    sample: Option<usize>,
    /// Queries per pair (odd, so votes cannot tie).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = defaults::SEED_FIRST)]
    seed: u64,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Per-node character budget for prompts; 0 means unlimited.
    #[arg(long)]
    text_budget: Option<usize>,
    /// Write the full estimate (every pair and vote) as JSON.
    #[arg(long, value_name = "FILE")]
    audit: Option<PathBuf>,
    /// Comma-separated sample sizes for a sensitivity sweep.
    #[arg(long, value_name = "SIZES")]
    sweep: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Node potentials alone.
    Raw,
    /// Potentials on neighborhood-averaged embeddings.
    #[value(name = "na", alias = "aggregate")]
    Aggregate,
    /// Full loopy belief propagation.
    Bp,
    /// Linearized one-shot approximation.
    BpApprox,
}

impl From<MethodArg> for Method {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Raw => Method::Raw,
            MethodArg::Aggregate => Method::Aggregate,
            MethodArg::Bp => Method::Bp,
            MethodArg::BpApprox => Method::BpApprox,
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Bp)]
    method: MethodArg,
    /// Anchor source: "provided", "zero-shot", or "few-shot=K".
    #[arg(long, default_value = "provided")]
    supervision: String,
    /// Homophily ratio source: "exact", "estimate", or a number in [0, 1].
    #[arg(long, default_value = "exact")]
    ratio: String,
    /// Softmax temperature (default depends on the method).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Aggregation layers for the "aggregate" method.
    #[arg(long)]
    na_layers: Option<usize>,
    /// Zero-shot: nodes sampled per class for LLM labeling.
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// Zero-shot: cluster members kept per class.
    #[arg(long)]
    k_top: Option<usize>,
    /// Ratio estimation: edges to sample.
    #[arg(long)]
    sample: Option<usize>,
    /// Ratio estimation: queries per pair.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Args)]
struct InferArgs {
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = defaults::SEED_FIRST)]
    seed: u64,
    /// Write predictions (one class id per line) here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write per-node class probabilities as a binary matrix.
    #[arg(long, value_name = "FILE")]
    beliefs: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Seeds: "A:B" (half-open range) or a comma-separated list.
    #[arg(long, default_value = "42:52")]
    seeds: String,
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Write per-seed rows as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LinkpredArgs {
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// Edges to hold out (matched by an equal number of non-edges).
    #[arg(long, default_value_t = 500)]
    holdout: usize,
    /// Aggregation layers before scoring.
    #[arg(long, default_value_t = defaults::LINK_PREDICTION_LAYERS)]
    layers: usize,
    /// Seeds: "A:B" (half-open range) or a comma-separated list.
    #[arg(long, default_value = "42:47")]
    seeds: String,
    /// Write per-seed results as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let file_config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::EstimateR(args) => cmd_estimate(args, &file_config),
        Command::Infer(args) => cmd_infer(args, &file_config),
        Command::Eval(args) => cmd_eval(args, &file_config),
        Command::Linkpred(args) => cmd_linkpred(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        nodes: args.nodes,
        classes: args.classes,
        target_r: args.homophily,
        mean_degree: args.mean_degree,
        dim: args.dim,
        noise: args.noise,
        seed: args.seed,
    };
    let instance = generate_synthetic(&spec)?;
    let exact = instance.graph.homophily_ratio_exact()?;
    let edges = instance.graph.undirected_edge_count();
    let dataset: Dataset = instance.into();
    save_dataset(&args.out, &dataset)
        .with_context(|| format!("writing dataset to {}", args.out.display()))?;
    println!(
        "wrote {}: {} nodes, {} classes, {} edges, exact homophily {:.4}",
        args.out.display(),
        args.nodes,
        args.classes,
        edges,
        exact
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let meta = GraphMeta::read_toml(&args.meta)
        .with_context(|| format!("reading {}", args.meta.display()))?;
    let (mut graph, stats) = load_graph(&args.edges, &meta)
        .with_context(|| format!("reading {}", args.edges.display()))?;
    if let Some(path) = &args.labels {
        let raw =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        graph = graph.with_labels(parse_labels(&raw, &path.display().to_string())?)?;
    }
    if let Some(path) = &args.texts {
        graph = graph.with_texts(read_texts_jsonl(path)?)?;
    }
    let embeddings = args
        .embeddings
        .as_deref()
        .map(EmbeddingMatrix::read_from)
        .transpose()?;
    let anchors = args
        .anchors
        .as_deref()
        .map(|p| ClassEmbeddings::read_from(p, args.anchor_provenance.into()))
        .transpose()?;
    let dataset = Dataset {
        meta,
        graph,
        embeddings,
        anchors,
    };
    save_dataset(&args.out, &dataset)
        .with_context(|| format!("writing dataset to {}", args.out.display()))?;
    println!(
        "wrote {}: {} edges kept, {} self-loops dropped, {} duplicates dropped",
        args.out.display(),
        stats.undirected_edges,
        stats.self_loops_dropped,
        stats.duplicates_dropped
    );
    println!(
        "canonical files: {META_FILE}, {EDGES_FILE}{}{}{}{}",
        if dataset.graph.labels().is_some() {
            ", labels"
        } else {
            ""
        },
        if dataset.graph.texts().is_some() {
            ", texts"
        } else {
            ""
        },
        if dataset.embeddings.is_some() {
            ", embeddings"
        } else {
            ""
        },
        if dataset.anchors.is_some() {
            ", anchors"
        } else {
            ""
        },
    );
    Ok(())
}

/// Builds the chat provider named by `--provider`, wrapping it in the
/// disk cache when a cache directory is configured.
fn build_provider(
    provider_args: &ProviderArgs,
    dataset: &Dataset,
    file_config: &PipelineConfig,
) -> Result<Box<dyn ChatProvider>> {
    let inner: Box<dyn ChatProvider> = match provider_args.provider.as_str() {
        "oracle" => {
            let labels = dataset
                .graph
                .labels()
                .context("the oracle provider needs ground-truth labels in the dataset")?;
            Box::new(OracleProvider::new(
                labels.to_vec(),
                dataset.meta.class_names.clone(),
            ))
        }
        "http" => build_http_provider(file_config)?,
        other => {
            let path = other
                .strip_prefix("mock=")
                .or_else(|| other.strip_prefix("mock:"))
                .with_context(|| {
                    format!("unknown provider {other:?}; expected http, oracle, or mock=FILE")
                })?;
            Box::new(
                MockProvider::from_json_file(Path::new(path))
                    .with_context(|| format!("loading mock fixture {path}"))?,
            )
        }
    };
    let cache_dir = provider_args
        .cache_dir
        .clone()
        .or_else(|| file_config.chat.cache_dir.clone());
    Ok(match cache_dir {
        Some(dir) => Box::new(CachingProvider::new(inner, dir)?),
        None => inner,
    })
}

#[cfg(feature = "http")]
fn build_http_provider(file_config: &PipelineConfig) -> Result<Box<dyn ChatProvider>> {
    use tagbp::llm::{HttpProvider, HttpProviderConfig};
    let defaults_config = HttpProviderConfig::default();
    let api_key = std::env::var("OPENAI_API_KEY").ok();
    if api_key.is_none() {
        log::warn!("OPENAI_API_KEY is not set; sending unauthenticated requests");
    }
    Ok(Box::new(HttpProvider::new(HttpProviderConfig {
        endpoint: file_config
            .chat
            .endpoint
            .clone()
            .unwrap_or(defaults_config.endpoint),
        api_key,
        timeout_secs: file_config
            .chat
            .timeout_secs
            .unwrap_or(defaults_config.timeout_secs),
        ..defaults_config
    })))
}

#[cfg(not(feature = "http"))]
fn build_http_provider(_file_config: &PipelineConfig) -> Result<Box<dyn ChatProvider>> {
    bail!("this build has no HTTP support; use --provider oracle or mock=FILE")
}

fn decoding_params(provider_args: &ProviderArgs, file_config: &PipelineConfig) -> DecodingParams {
    let base = DecodingParams::default();
    DecodingParams {
        model: resolve(
            provider_args.model.clone(),
            file_config.chat.model.clone(),
            base.model,
        ),
        temperature: resolve(
            provider_args.temperature,
            file_config.chat.temperature,
            base.temperature,
        ),
        max_tokens: file_config.chat.max_tokens.or(base.max_tokens),
    }
}

/// Default pair-sample size: smaller graphs get the smaller budget.
fn auto_sample_size(dataset: &Dataset) -> usize {
    if dataset.graph.undirected_edge_count() < defaults::SMALL_GRAPH_EDGE_THRESHOLD {
        defaults::SAMPLE_EDGES_SMALL
    } else {
        defaults::SAMPLE_EDGES
    }
}

fn text_budget(cli: Option<usize>, file_config: &PipelineConfig) -> Option<usize> {
    match cli.or(file_config.ratio.text_budget) {
        Some(0) => None,
        Some(n) => Some(n),
        None => EstimateConfig::default().text_budget,
    }
}

fn cmd_estimate(args: EstimateArgs, file_config: &PipelineConfig) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let task_description =
        dataset.meta.task_description.clone().context(
            "the dataset metadata has no task_description; pair prompts cannot be built",
        )?;
    let provider = build_provider(&args.provider, &dataset, file_config)?;
    let estimate_config = EstimateConfig {
        sample_size: resolve(
            args.sample,
            file_config.ratio.sample_size,
            auto_sample_size(&dataset),
        ),
        trials: resolve(args.trials, file_config.ratio.trials, defaults::PAIR_TRIALS),
        seed: args.seed,
        params: decoding_params(&args.provider, file_config),
        concurrency: resolve(
            args.concurrency,
            file_config.ratio.concurrency,
            defaults::CHAT_CONCURRENCY,
        ),
        text_budget: text_budget(args.text_budget, file_config),
    };

    if let Some(sweep) = &args.sweep {
        let sizes: Vec<usize> = sweep
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("bad sweep size {s:?}"))
            })
            .collect::<Result<_>>()?;
        let rows = sensitivity_sweep(
            &dataset.graph,
            &provider,
            &task_description,
            &sizes,
            &estimate_config,
        )?;
        println!("sample_size  r       decided  abstained  gap");
        for row in &rows {
            let gap = row
                .gap
                .map(|g| format!("{g:+.4}"))
                .unwrap_or_else(|| "n/a".into());
            println!(
                "{:<11}  {:.4}  {:<7}  {:<9}  {}",
                row.sample_size, row.r, row.decided_pairs, row.abstained_pairs, gap
            );
        }
        return Ok(());
    }

    let estimate = estimate_r(
        &dataset.graph,
        &provider,
        &task_description,
        &estimate_config,
    )?;
    println!(
        "estimated homophily ratio: {:.4} ({} pairs sampled, {} decided, {} abstained)",
        estimate.r, estimate.sample_size, estimate.decided_pairs, estimate.abstained_pairs
    );
    if let Ok(exact) = dataset.graph.homophily_ratio_exact() {
        println!(
            "exact ratio from labels:   {:.4} (gap {:+.4})",
            exact,
            estimate.r - exact
        );
    }
    if let Some(path) = &args.audit {
        fs::write(path, serde_json::to_string_pretty(&estimate)?)
            .with_context(|| format!("writing audit to {}", path.display()))?;
        println!("audit written to {}", path.display());
    }
    Ok(())
}

fn parse_supervision(text: &str) -> Result<Supervision> {
    match text {
        "provided" => Ok(Supervision::ProvidedAnchors),
        "zero-shot" => Ok(Supervision::ZeroShot),
        other => {
            let shots = other
                .strip_prefix("few-shot=")
                .and_then(|k| k.parse::<usize>().ok())
                .with_context(|| {
                    format!(
                        "bad supervision {other:?}; expected provided, zero-shot, or few-shot=K"
                    )
                })?;
            if shots == 0 {
                bail!("few-shot needs at least one shot per class");
            }
            Ok(Supervision::FewShot {
                shots_per_class: shots,
            })
        }
    }
}

fn parse_ratio(text: &str) -> Result<RatioSource> {
    match text {
        "exact" => Ok(RatioSource::Exact),
        "estimate" => Ok(RatioSource::Estimate),
        other => {
            let value: f64 = other.parse().with_context(|| {
                format!("bad ratio {other:?}; expected exact, estimate, or a number in [0, 1]")
            })?;
            if !(0.0..=1.0).contains(&value) {
                bail!("fixed ratio {value} is outside [0, 1]");
            }
            Ok(RatioSource::Fixed(value))
        }
    }
}

/// Parses "A:B" as the half-open range A..B, otherwise a comma list.
fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once(':') {
        let start: u64 = a.trim().parse().context("bad range start")?;
        let end: u64 = b.trim().parse().context("bad range end")?;
        if start >= end {
            bail!("empty seed range {text:?}");
        }
        return Ok((start..end).collect());
    }
    let seeds: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad seed {s:?}")))
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(seeds)
}

/// Resolves pipeline flags against the config file and compiled defaults.
fn experiment_config(
    args: &PipelineArgs,
    seeds: Vec<u64>,
    dataset: &Dataset,
    file_config: &PipelineConfig,
) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        method: args.method.into(),
        supervision: parse_supervision(&args.supervision)?,
        ratio_source: parse_ratio(&args.ratio)?,
        seeds,
        tau: args.tau.or(file_config.inference.tau),
        iterations: resolve(
            args.iterations,
            file_config.inference.iterations,
            defaults::BP_ITERATIONS,
        ),
        damping: resolve(args.damping, file_config.inference.damping, 1.0),
        epsilon: resolve(
            args.epsilon,
            file_config.inference.epsilon,
            defaults::EPSILON_CLAMP,
        ),
        na_layers: resolve(
            args.na_layers,
            file_config.inference.na_layers,
            defaults::NA_LAYERS,
        ),
        samples_per_class: resolve(
            args.samples_per_class,
            file_config.zero_shot.samples_per_class,
            defaults::ZERO_SHOT_SAMPLES_PER_CLASS,
        ),
        k_top: resolve(
            args.k_top,
            file_config.zero_shot.k_top,
            defaults::ZERO_SHOT_TOP_K,
        ),
        estimate: EstimateConfig {
            sample_size: resolve(
                args.sample,
                file_config.ratio.sample_size,
                auto_sample_size(dataset),
            ),
            trials: resolve(args.trials, file_config.ratio.trials, defaults::PAIR_TRIALS),
            seed: 0, // replaced per experiment seed
            params: decoding_params(&args.provider, file_config),
            concurrency: resolve(
                args.concurrency,
                file_config.ratio.concurrency,
                defaults::CHAT_CONCURRENCY,
            ),
            text_budget: text_budget(None, file_config),
        },
    })
}

/// A provider is only needed when the configuration talks to a chat model.
fn needs_provider(config: &ExperimentConfig) -> bool {
    config.supervision == Supervision::ZeroShot
        || (matches!(config.method, Method::Bp | Method::BpApprox)
            && config.ratio_source == RatioSource::Estimate)
}

fn cmd_infer(args: InferArgs, file_config: &PipelineConfig) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let embeddings = dataset
        .embeddings
        .as_ref()
        .context("the dataset has no embeddings.bin; inference needs node embeddings")?;
    let config = experiment_config(&args.pipeline, vec![args.seed], &dataset, file_config)?;
    let provider = if needs_provider(&config) {
        Some(build_provider(
            &args.pipeline.provider,
            &dataset,
            file_config,
        )?)
    } else {
        None
    };
    let ctx = ExperimentContext {
        graph: &dataset.graph,
        embeddings,
        meta: &dataset.meta,
        provider: provider.as_deref(),
        anchors: dataset.anchors.as_ref(),
    };
    let outcome = infer_single(&ctx, &config, args.seed)?;

    let mut body = String::with_capacity(outcome.predictions.len() * 2);
    for &p in &outcome.predictions {
        body.push_str(&p.to_string());
        body.push('\n');
    }
    match &args.out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            println!("predictions written to {}", path.display());
        }
        None => print!("{body}"),
    }
    if let Some(path) = &args.beliefs {
        let n = dataset.graph.node_count();
        let c = dataset.graph.class_count();
        let mut probs = Vec::with_capacity(n * c);
        for node in 0..n {
            probs.extend(outcome.beliefs.probabilities(node));
        }
        EmbeddingMatrix::from_values(n, c, probs)?.write_to(path)?;
        println!("beliefs written to {}", path.display());
    }
    if let Some(r) = outcome.ratio_used {
        println!("homophily ratio used: {r:.4}");
    }
    if let Some(labels) = dataset.graph.labels() {
        let (mut pred, mut truth) = (Vec::new(), Vec::new());
        for (node, &keep) in outcome.eval_mask.iter().enumerate() {
            if keep {
                pred.push(outcome.predictions[node]);
                truth.push(labels[node]);
            }
        }
        println!(
            "accuracy {:.4}, macro F1 {:.4} over {} nodes",
            tagbp::eval::accuracy(&pred, &truth),
            tagbp::eval::macro_f1(&pred, &truth, dataset.graph.class_count()),
            pred.len()
        );
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, file_config: &PipelineConfig) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let embeddings = dataset
        .embeddings
        .as_ref()
        .context("the dataset has no embeddings.bin; evaluation needs node embeddings")?;
    let seeds = parse_seeds(&args.seeds)?;
    let config = experiment_config(&args.pipeline, seeds, &dataset, file_config)?;
    let provider = if needs_provider(&config) {
        Some(build_provider(
            &args.pipeline.provider,
            &dataset,
            file_config,
        )?)
    } else {
        None
    };
    let ctx = ExperimentContext {
        graph: &dataset.graph,
        embeddings,
        meta: &dataset.meta,
        provider: provider.as_deref(),
        anchors: dataset.anchors.as_ref(),
    };
    let report = run_experiment(&ctx, &config)?;

    println!(
        "method={} supervision={} ratio={} seeds={}",
        args.pipeline.method.to_possible_value().unwrap().get_name(),
        args.pipeline.supervision,
        args.pipeline.ratio,
        args.seeds
    );
    for row in &report.per_seed {
        let ratio = row
            .ratio_used
            .map(|r| format!(" r={r:.4}"))
            .unwrap_or_default();
        println!(
            "seed {:>3}: accuracy {:.4} macro_f1 {:.4}{} ({} nodes)",
            row.seed, row.accuracy, row.macro_f1, ratio, row.evaluated_nodes
        );
    }
    println!(
        "accuracy: mean {:.4} std {:.4}",
        report.accuracy_mean, report.accuracy_std
    );
    println!(
        "macro_f1: mean {:.4} std {:.4}",
        report.macro_f1_mean, report.macro_f1_std
    );
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = &args.csv {
        fs::write(path, report_to_csv(&report))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("csv written to {}", path.display());
    }
    Ok(())
}

fn cmd_linkpred(args: LinkpredArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let embeddings = dataset
        .embeddings
        .as_ref()
        .context("the dataset has no embeddings.bin; link prediction needs node embeddings")?;
    let seeds = parse_seeds(&args.seeds)?;
    let mut results = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let result =
            link_prediction_auc(&dataset.graph, embeddings, args.holdout, args.layers, seed)?;
        println!("seed {:>3}: AUC {:.4}", result.seed, result.auc);
        results.push(result);
    }
    let aucs: Vec<f64> = results.iter().map(|r| r.auc).collect();
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let std = if aucs.len() > 1 {
        (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (aucs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    println!(
        "AUC over {} held-out edges, {} layers: mean {:.4} std {:.4}",
        args.holdout, args.layers, mean, std
    );
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&results)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("results written to {}", path.display());
    }
    Ok(())
}
