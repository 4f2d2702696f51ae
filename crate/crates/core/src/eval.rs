//! Evaluation: classification metrics, ranking AUC, split sampling, a
//! stochastic block model benchmark generator, and the multi-seed
//! experiment driver tying potentials, homophily, and inference together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bp::{self, BpError};
use crate::defaults;
use crate::embedding::{
    few_shot_class_embeddings, link_score, neighborhood_aggregate, zero_shot_class_embeddings,
    AnchorProvenance, ClassEmbeddings, EmbeddingError, EmbeddingMatrix,
};
use crate::graph::{GraphError, GraphMeta, TagGraph};
use crate::homophily::{derive_seed, estimate_r, EdgePotential, EstimateConfig, HomophilyError};
use crate::llm::{build_node_label_prompt, parse_class_label, ChatProvider, ChatRequest, LlmError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground-truth labels are required for this operation")]
    MissingLabels,
    #[error("node texts are required for zero-shot labeling")]
    MissingTexts,
    #[error("a task description is required to build prompts")]
    MissingTaskDescription,
    #[error("a chat provider is required for this configuration")]
    MissingProvider,
    #[error("provided class anchors are required for this configuration")]
    MissingAnchors,
    #[error("class {class} has {have} labeled nodes, fewer than the {need} requested shots")]
    NotEnoughLabeled {
        class: usize,
        have: usize,
        need: usize,
    },
    #[error("could not build an anchor for class {class}: no sampled node was assigned to it after {rounds} sampling rounds")]
    AnchorConstruction { class: usize, rounds: usize },
    #[error("invalid benchmark spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Homophily(#[from] HomophilyError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Fraction of positions where prediction equals truth.
///
/// Panics on length mismatch or empty input; metric calls on mismatched
/// slices are caller bugs, not runtime conditions.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction/truth length mismatch");
    assert!(!pred.is_empty(), "cannot score an empty prediction set");
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / pred.len() as f64
}

/// Unweighted mean of per-class F1 scores over all `class_count` classes.
///
/// A class with no true members and no predictions contributes an F1 of 0,
/// so unused classes pull the mean down instead of silently vanishing.
pub fn macro_f1(pred: &[usize], truth: &[usize], class_count: usize) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction/truth length mismatch");
    assert!(!pred.is_empty(), "cannot score an empty prediction set");
    assert!(class_count > 0, "class_count must be positive");
    let mut tp = vec![0usize; class_count];
    let mut fp = vec![0usize; class_count];
    let mut fnn = vec![0usize; class_count];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fnn[t] += 1;
        }
    }
    let mut sum = 0.0;
    for k in 0..class_count {
        let denom = 2 * tp[k] + fp[k] + fnn[k];
        if denom > 0 {
            sum += 2.0 * tp[k] as f64 / denom as f64;
        }
    }
    sum / class_count as f64
}

/// Area under the ROC curve for positive vs negative scores, by pairwise
/// comparison; tied scores count half.
pub fn auc(positive: &[f64], negative: &[f64]) -> f64 {
    assert!(
        !positive.is_empty() && !negative.is_empty(),
        "AUC needs at least one score on each side"
    );
    let mut favorable = 0.0;
    for &p in positive {
        for &n in negative {
            if p > n {
                favorable += 1.0;
            } else if p == n {
                favorable += 0.5;
            }
        }
    }
    favorable / (positive.len() as f64 * negative.len() as f64)
}

/// A few-shot split: labeled shots plus the evaluation mask over the rest.
#[derive(Debug, Clone)]
pub struct FewShotSplit {
    /// `(node, label)` pairs, `shots_per_class` for every class, sorted by
    /// node id.
    pub shots: Vec<(usize, usize)>,
    /// True for every labeled node that is not a shot.
    pub test_mask: Vec<bool>,
}

/// Samples `shots_per_class` labeled nodes per class without replacement.
pub fn sample_few_shot(
    graph: &TagGraph,
    shots_per_class: usize,
    seed: u64,
) -> Result<FewShotSplit, EvalError> {
    let labels = graph.labels().ok_or(EvalError::MissingLabels)?;
    let c = graph.class_count();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (node, &label) in labels.iter().enumerate() {
        per_class[label].push(node);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shots = Vec::with_capacity(c * shots_per_class);
    for (class, nodes) in per_class.iter().enumerate() {
        if nodes.len() < shots_per_class {
            return Err(EvalError::NotEnoughLabeled {
                class,
                have: nodes.len(),
                need: shots_per_class,
            });
        }
        for idx in rand::seq::index::sample(&mut rng, nodes.len(), shots_per_class) {
            shots.push((nodes[idx], class));
        }
    }
    shots.sort_unstable();
    let mut test_mask = vec![true; graph.node_count()];
    for &(node, _) in &shots {
        test_mask[node] = false;
    }
    Ok(FewShotSplit { shots, test_mask })
}

/// Parameters of the planted-partition benchmark generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub classes: usize,
    /// Expected fraction of edges connecting same-class nodes.
    pub target_r: f64,
    pub mean_degree: f64,
    /// Embedding dimension; must be at least `classes` so class centroids
    /// can be orthonormal.
    pub dim: usize,
    /// Gaussian noise scale added to the class centroid per node.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(f64, f64), EvalError> {
        if self.nodes < 2 {
            return Err(EvalError::Spec("need at least 2 nodes".into()));
        }
        if self.classes < 2 {
            return Err(EvalError::Spec("need at least 2 classes".into()));
        }
        if self.dim < self.classes {
            return Err(EvalError::Spec(format!(
                "dim {} < classes {}; centroids cannot be orthonormal",
                self.dim, self.classes
            )));
        }
        if !(self.target_r > 0.0 && self.target_r < 1.0) {
            return Err(EvalError::Spec(format!(
                "target_r must lie strictly in (0, 1), got {}",
                self.target_r
            )));
        }
        // NaN must fail too, so the comparison is written to reject it.
        if self.mean_degree.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(EvalError::Spec("mean_degree must be positive".into()));
        }
        if self.noise < 0.0 {
            return Err(EvalError::Spec("noise must be non-negative".into()));
        }
        let c = self.classes as f64;
        let q = self.mean_degree / self.nodes as f64;
        let p_in = c * self.target_r * q;
        let p_out = c * (1.0 - self.target_r) * q / (c - 1.0);
        if p_in > 1.0 || p_out > 1.0 {
            return Err(EvalError::Spec(format!(
                "infeasible edge probabilities: p_in = {p_in:.4}, p_out = {p_out:.4}"
            )));
        }
        Ok((p_in, p_out))
    }
}

/// A generated benchmark instance.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    /// Graph with ground-truth labels and placeholder texts attached.
    pub graph: TagGraph,
    /// Unit-normalized node embeddings.
    pub embeddings: EmbeddingMatrix,
    /// The true class centroids, usable directly as anchors.
    pub centroids: ClassEmbeddings,
    pub meta: GraphMeta,
}

/// Generates a planted-partition graph with embedding features.
///
/// Labels are uniform over classes; an edge between same-class nodes
/// appears with probability `p_in = c * r * q` and between different
/// classes with `p_out = c * (1 - r) * q / (c - 1)` where `q = d / n`, so
/// the expected same-label edge fraction is `target_r` and the expected
/// degree is `mean_degree`. Node embeddings are the node's class centroid
/// (orthonormal, so classes are geometrically symmetric) plus isotropic
/// Gaussian noise, normalized to unit length. Texts are placeholders that
/// carry no label signal; pair prompts remain buildable but only an
/// oracle provider can answer them meaningfully.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticInstance, EvalError> {
    let (p_in, p_out) = spec.validate()?;
    let (n, c, dim) = (spec.nodes, spec.classes, spec.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    // Orthonormal centroids by Gram-Schmidt over Gaussian draws.
    let mut centroids = vec![0.0; c * dim];
    for k in 0..c {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > 100 {
                return Err(EvalError::Spec(
                    "failed to orthonormalize centroids (degenerate draws)".into(),
                ));
            }
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            for prev in 0..k {
                let basis = &centroids[prev * dim..(prev + 1) * dim];
                let proj: f64 = v.iter().zip(basis).map(|(a, b)| a * b).sum();
                for (x, b) in v.iter_mut().zip(basis) {
                    *x -= proj * b;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (slot, x) in centroids[k * dim..(k + 1) * dim].iter_mut().zip(&v) {
                    *slot = x / norm;
                }
                break;
            }
        }
    }

    let mut values = Vec::with_capacity(n * dim);
    for &label in &labels {
        let base = &centroids[label * dim..(label + 1) * dim];
        for &b in base {
            let g: f64 = StandardNormal.sample(&mut rng);
            values.push(b + spec.noise * g);
        }
    }
    let embeddings = EmbeddingMatrix::from_values(n, dim, values)?.normalize_rows()?;

    let (graph, _) = TagGraph::from_edges(n, c, &edges)?;
    let graph = graph
        .with_labels(labels)?
        .with_texts((0..n).map(|i| format!("synthetic node {i}")).collect())?;

    let meta = GraphMeta {
        node_count: n,
        class_count: c,
        class_names: (0..c).map(|k| format!("class-{k}")).collect(),
        task_description: Some("short text snippets attached to graph nodes".into()),
    };
    let centroids = ClassEmbeddings::from_values(c, dim, centroids, AnchorProvenance::External)?;
    Ok(SyntheticInstance {
        graph,
        embeddings,
        centroids,
        meta,
    })
}

/// Which inference routine an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Node potentials alone.
    Raw,
    /// Node potentials on neighborhood-aggregated embeddings.
    #[serde(rename = "na", alias = "aggregate")]
    Aggregate,
    /// Full loopy belief propagation.
    Bp,
    /// Linearized one-shot approximation.
    BpApprox,
}

/// Where class anchors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Supervision {
    /// Use anchors supplied in the context (e.g. encoded class names or
    /// synthetic centroids); evaluate on all labeled nodes.
    ProvidedAnchors,
    /// Build anchors from LLM-labeled sample nodes; evaluate on all
    /// labeled nodes.
    ZeroShot,
    /// Build anchors from ground-truth shots; evaluate on the rest.
    FewShot { shots_per_class: usize },
}

/// Where the homophily ratio comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSource {
    /// Exact ratio from ground-truth labels.
    Exact,
    /// Chat-model estimation over sampled edges.
    Estimate,
    /// A fixed value.
    Fixed(f64),
}

/// Full experiment description. Everything that affects the outcome is
/// here or in the context, so a config plus a dataset is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub supervision: Supervision,
    pub ratio_source: RatioSource,
    pub seeds: Vec<u64>,
    /// Softmax temperature; `None` picks the method default
    /// ([`defaults::TAU_FULL_BP`] or [`defaults::TAU_LINEAR_APPROX`]).
    pub tau: Option<f64>,
    pub iterations: usize,
    pub damping: f64,
    pub epsilon: f64,
    pub na_layers: usize,
    pub samples_per_class: usize,
    pub k_top: usize,
    pub estimate: EstimateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Bp,
            supervision: Supervision::ZeroShot,
            ratio_source: RatioSource::Estimate,
            seeds: vec![defaults::SEED_FIRST],
            tau: None,
            iterations: defaults::BP_ITERATIONS,
            damping: 1.0,
            epsilon: defaults::EPSILON_CLAMP,
            na_layers: defaults::NA_LAYERS,
            samples_per_class: defaults::ZERO_SHOT_SAMPLES_PER_CLASS,
            k_top: defaults::ZERO_SHOT_TOP_K,
            estimate: EstimateConfig::default(),
        }
    }
}

/// Dataset-side inputs for [`run_experiment`].
pub struct ExperimentContext<'a> {
    pub graph: &'a TagGraph,
    pub embeddings: &'a EmbeddingMatrix,
    pub meta: &'a GraphMeta,
    pub provider: Option<&'a dyn ChatProvider>,
    pub anchors: Option<&'a ClassEmbeddings>,
}

/// Metrics for one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Homophily ratio used by BP methods (`None` for raw/aggregate).
    pub ratio_used: Option<f64>,
    pub evaluated_nodes: usize,
}

/// Aggregated experiment outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub per_seed: Vec<SeedResult>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Labels sample nodes through the chat provider and builds zero-shot
/// anchors, resampling more nodes (up to three rounds total) when some
/// class ends up with no members.
fn zero_shot_anchors(
    ctx: &ExperimentContext<'_>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ClassEmbeddings, EvalError> {
    let provider = ctx.provider.ok_or(EvalError::MissingProvider)?;
    let texts = ctx.graph.texts().ok_or(EvalError::MissingTexts)?;
    let task_description = ctx
        .meta
        .task_description
        .as_deref()
        .ok_or(EvalError::MissingTaskDescription)?;
    let n = ctx.graph.node_count();
    let c = ctx.graph.class_count();
    let per_round = (config.samples_per_class * c).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5a5));
    let mut available: Vec<usize> = (0..n).collect();
    let mut sampled_nodes = Vec::new();
    let mut llm_labels = Vec::new();
    const MAX_ROUNDS: usize = 3;

    for round in 0..MAX_ROUNDS {
        let take = per_round.min(available.len());
        if take == 0 {
            break;
        }
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, available.len(), take)
            .into_iter()
            .map(|k| available[k])
            .collect();
        picked.sort_unstable();
        available.retain(|v| picked.binary_search(v).is_err());

        for &node in &picked {
            let prompt =
                build_node_label_prompt(task_description, &ctx.meta.class_names, &texts[node])
                    .map_err(LlmError::from)?;
            let request = ChatRequest {
                prompt,
                params: config.estimate.params.clone(),
                tag: Some(format!("node:{node}:trial:0")),
            };
            let response = provider.chat(&request)?;
            match parse_class_label(&response.raw_text, &ctx.meta.class_names) {
                Some(label) => {
                    sampled_nodes.push(node);
                    llm_labels.push(label);
                }
                None => log::debug!(
                    "unparseable class answer for node {node}: {:?}",
                    response.raw_text
                ),
            }
        }

        match zero_shot_class_embeddings(
            ctx.embeddings,
            &sampled_nodes,
            &llm_labels,
            c,
            config.k_top,
        ) {
            Ok(anchors) => return Ok(anchors),
            Err(EmbeddingError::EmptyClass { class }) if round + 1 < MAX_ROUNDS => {
                log::info!("class {class} empty after round {round}; resampling");
            }
            Err(EmbeddingError::EmptyClass { class }) => {
                return Err(EvalError::AnchorConstruction {
                    class,
                    rounds: MAX_ROUNDS,
                })
            }
            Err(other) => return Err(other.into()),
        }
    }
    // Only reachable when the node pool ran dry before MAX_ROUNDS.
    match zero_shot_class_embeddings(ctx.embeddings, &sampled_nodes, &llm_labels, c, config.k_top) {
        Ok(anchors) => Ok(anchors),
        Err(EmbeddingError::EmptyClass { class }) => Err(EvalError::AnchorConstruction {
            class,
            rounds: MAX_ROUNDS,
        }),
        Err(other) => Err(other.into()),
    }
}

/// The full product of one configured inference run on one seed.
#[derive(Debug, Clone)]
pub struct InferenceOutcome {
    pub beliefs: bp::BeliefState,
    /// Argmax class per node.
    pub predictions: Vec<usize>,
    /// Homophily ratio used by BP methods (`None` for raw/aggregate).
    pub ratio_used: Option<f64>,
    /// Nodes that count for scoring (excludes few-shot anchors).
    pub eval_mask: Vec<bool>,
}

/// Runs one seed of a configuration end to end: anchors per the
/// supervision mode, ratio per the ratio source (BP methods only), then
/// the method itself. Ground-truth labels are only touched when the
/// configuration explicitly asks for them (few-shot anchors, exact ratio).
pub fn infer_single(
    ctx: &ExperimentContext<'_>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<InferenceOutcome, EvalError> {
    let (anchors_owned, eval_mask): (ClassEmbeddings, Vec<bool>) = match config.supervision {
        Supervision::ProvidedAnchors => {
            let anchors = ctx.anchors.ok_or(EvalError::MissingAnchors)?;
            (anchors.clone(), vec![true; ctx.graph.node_count()])
        }
        Supervision::ZeroShot => (
            zero_shot_anchors(ctx, config, seed)?,
            vec![true; ctx.graph.node_count()],
        ),
        Supervision::FewShot { shots_per_class } => {
            let split = sample_few_shot(ctx.graph, shots_per_class, seed)?;
            let anchors =
                few_shot_class_embeddings(ctx.embeddings, &split.shots, ctx.graph.class_count())?;
            (anchors, split.test_mask)
        }
    };

    let needs_ratio = matches!(config.method, Method::Bp | Method::BpApprox);
    let ratio_used = if needs_ratio {
        Some(match config.ratio_source {
            RatioSource::Exact => ctx.graph.homophily_ratio_exact()?,
            RatioSource::Fixed(r) => r,
            RatioSource::Estimate => {
                let provider = ctx.provider.ok_or(EvalError::MissingProvider)?;
                let task_description = ctx
                    .meta
                    .task_description
                    .as_deref()
                    .ok_or(EvalError::MissingTaskDescription)?;
                let estimate_config = EstimateConfig {
                    seed,
                    ..config.estimate.clone()
                };
                estimate_r(ctx.graph, provider, task_description, &estimate_config)?.r
            }
        })
    } else {
        None
    };

    let tau = config.tau.unwrap_or(match config.method {
        Method::BpApprox => defaults::TAU_LINEAR_APPROX,
        _ => defaults::TAU_FULL_BP,
    });

    let beliefs = match config.method {
        Method::Raw => bp::node_potentials(ctx.embeddings, &anchors_owned, tau)?,
        Method::Aggregate => {
            let smoothed = neighborhood_aggregate(ctx.graph, ctx.embeddings, config.na_layers)?;
            bp::node_potentials(&smoothed, &anchors_owned, tau)?
        }
        Method::Bp => {
            let psi = EdgePotential::from_r(ratio_used.unwrap(), config.epsilon)?;
            let init = bp::node_potentials(ctx.embeddings, &anchors_owned, tau)?;
            bp::run_lbp(
                ctx.graph,
                &init,
                &psi,
                &bp::BpConfig {
                    iterations: config.iterations,
                    tau,
                    damping: config.damping,
                },
            )?
        }
        Method::BpApprox => {
            let init = bp::node_potentials(ctx.embeddings, &anchors_owned, tau)?;
            bp::run_lbp_approx(ctx.graph, &init, ratio_used.unwrap())?
        }
    };

    let predictions = bp::predict(&beliefs);
    Ok(InferenceOutcome {
        beliefs,
        predictions,
        ratio_used,
        eval_mask,
    })
}

/// Runs one experiment configuration over all its seeds.
///
/// Per seed: [`infer_single`], then score predictions on the evaluation
/// set (all labeled nodes, or the few-shot test mask). Everything is
/// seeded; rerunning a config on the same dataset reproduces the report
/// bit for bit.
pub fn run_experiment(
    ctx: &ExperimentContext<'_>,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, EvalError> {
    let labels = ctx.graph.labels().ok_or(EvalError::MissingLabels)?;
    if config.seeds.is_empty() {
        return Err(EvalError::Spec("seed list must not be empty".into()));
    }
    let mut per_seed = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let outcome = infer_single(ctx, config, seed)?;
        let (mut pred, mut truth) = (Vec::new(), Vec::new());
        for (node, &keep) in outcome.eval_mask.iter().enumerate() {
            if keep {
                pred.push(outcome.predictions[node]);
                truth.push(labels[node]);
            }
        }
        per_seed.push(SeedResult {
            seed,
            accuracy: accuracy(&pred, &truth),
            macro_f1: macro_f1(&pred, &truth, ctx.graph.class_count()),
            ratio_used: outcome.ratio_used,
            evaluated_nodes: pred.len(),
        });
    }

    let (accuracy_mean, accuracy_std) =
        mean_std(&per_seed.iter().map(|s| s.accuracy).collect::<Vec<_>>());
    let (macro_f1_mean, macro_f1_std) =
        mean_std(&per_seed.iter().map(|s| s.macro_f1).collect::<Vec<_>>());
    Ok(ExperimentReport {
        config: config.clone(),
        per_seed,
        accuracy_mean,
        accuracy_std,
        macro_f1_mean,
        macro_f1_std,
    })
}

/// One seed of a link prediction benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkPredictionResult {
    pub seed: u64,
    pub auc: f64,
    pub held_out: usize,
    pub layers: usize,
}

/// Scores link prediction by smoothed-embedding cosine.
///
/// Removes `held_out` random edges, pairs them with as many random
/// non-edges, aggregates embeddings over the *residual* graph for
/// `layers` rounds (so held-out edges never leak into the scores), and
/// reports AUC of positive vs negative pair cosine.
pub fn link_prediction_auc(
    graph: &TagGraph,
    embeddings: &EmbeddingMatrix,
    held_out: usize,
    layers: usize,
    seed: u64,
) -> Result<LinkPredictionResult, EvalError> {
    let (residual, positives, negatives) = graph.hold_out_edges(held_out, seed)?;
    let smoothed = neighborhood_aggregate(&residual, embeddings, layers)?;
    let score_all = |pairs: &[(usize, usize)]| -> Result<Vec<f64>, EvalError> {
        pairs
            .iter()
            .map(|&(i, j)| Ok(link_score(&smoothed, i, j)?))
            .collect()
    };
    let pos = score_all(&positives)?;
    let neg = score_all(&negatives)?;
    Ok(LinkPredictionResult {
        seed,
        auc: auc(&pos, &neg),
        held_out,
        layers,
    })
}

/// Renders a report as CSV: one row per seed plus a summary row.
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("seed,accuracy,macro_f1,ratio_used,evaluated_nodes\n");
    for row in &report.per_seed {
        let ratio = row.ratio_used.map(|r| format!("{r}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.seed, row.accuracy, row.macro_f1, ratio, row.evaluated_nodes
        ));
    }
    out.push_str(&format!(
        "mean,{},{},,\nstd,{},{},,\n",
        report.accuracy_mean, report.macro_f1_mean, report.accuracy_std, report.macro_f1_std
    ));
    out
}
