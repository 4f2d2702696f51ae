//! Homophily estimation and the edge potentials built from it.
//!
//! The edge potential is a single scalar `r`: two neighboring nodes agree
//! (same class) with weight `r` and disagree with weight `1 - r`. `r` can
//! be computed exactly when ground-truth labels exist
//! ([`crate::graph::TagGraph::homophily_ratio_exact`]) or estimated without
//! labels by sampling edges and asking a chat model whether the two
//! endpoint texts belong to the same class, with majority voting across
//! repeated queries per pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::graph::{GraphError, TagGraph};
use crate::llm::prompt::{build_pair_prompt, truncate_text, PAIR_TEMPLATE_VERSION};
use crate::llm::{
    majority_vote, parse_yes_no, ChatProvider, ChatRequest, Decision, DecodingParams, LlmError,
    Vote,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HomophilyError {
    #[error("graph has no node texts; pair queries need text")]
    MissingTexts,
    #[error("trials per pair must be odd and positive, got {0}")]
    InvalidTrials(usize),
    #[error("homophily ratio must be a probability, got {0}")]
    InvalidRatio(f64),
    #[error("epsilon must lie in (0, 0.5), got {0}")]
    InvalidEpsilon(f64),
    #[error("estimation failed: all {pairs} sampled pairs abstained")]
    EstimationFailed { pairs: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Agreement/disagreement weights for one edge, derived from a homophily
/// ratio clamped away from 0 and 1 so both log weights stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePotential {
    raw_r: f64,
    r: f64,
    epsilon: f64,
}

impl EdgePotential {
    /// Builds the potential from a ratio in `[0, 1]`, clamping it to
    /// `[epsilon, 1 - epsilon]`.
    pub fn from_r(r: f64, epsilon: f64) -> Result<Self, HomophilyError> {
        if !r.is_finite() || !(0.0..=1.0).contains(&r) {
            return Err(HomophilyError::InvalidRatio(r));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
            return Err(HomophilyError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            raw_r: r,
            r: r.clamp(epsilon, 1.0 - epsilon),
            epsilon,
        })
    }

    /// The clamped ratio actually used in potentials.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// The ratio as given, before clamping.
    pub fn raw_r(&self) -> f64 {
        self.raw_r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Weight when the two endpoint labels agree.
    pub fn same(&self) -> f64 {
        self.r
    }

    /// Weight when they disagree.
    pub fn diff(&self) -> f64 {
        1.0 - self.r
    }

    pub fn log_same(&self) -> f64 {
        self.r.ln()
    }

    pub fn log_diff(&self) -> f64 {
        (1.0 - self.r).ln()
    }

    /// Log potential for a concrete label pair.
    pub fn log_psi(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.log_same()
        } else {
            self.log_diff()
        }
    }
}

/// Controls for [`estimate_r`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateConfig {
    /// Edges to sample (capped at the edge count).
    pub sample_size: usize,
    /// Chat queries per sampled pair; odd so parsed votes cannot tie.
    pub trials: usize,
    pub seed: u64,
    pub params: DecodingParams,
    /// Worker threads for concurrent chat calls.
    pub concurrency: usize,
    /// Per-node character budget applied to texts before prompting.
    pub text_budget: Option<usize>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            sample_size: defaults::SAMPLE_EDGES,
            trials: defaults::PAIR_TRIALS,
            seed: defaults::SEED_FIRST,
            params: DecodingParams::default(),
            concurrency: defaults::CHAT_CONCURRENCY,
            text_budget: Some(4000),
        }
    }
}

/// Every vote cast for one sampled pair, for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairAudit {
    pub i: usize,
    pub j: usize,
    pub votes: Vec<Vote>,
    pub decision: Decision,
}

/// Result of a sampled homophily estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomophilyEstimate {
    /// Estimated ratio: yes-pairs over decided pairs.
    pub r: f64,
    /// Pairs actually queried (after capping at the edge count).
    pub sample_size: usize,
    pub requested_sample: usize,
    pub trials_per_pair: usize,
    pub seed: u64,
    pub decided_pairs: usize,
    pub abstained_pairs: usize,
    pub pairs: Vec<PairAudit>,
    /// Wording version of the pair prompt the votes were collected under.
    pub template_version: String,
}

/// Estimates the homophily ratio by querying a chat model over sampled
/// edges.
///
/// For each of (up to) `sample_size` sampled edges, the two endpoint texts
/// are wrapped in the versioned pair prompt and sent `trials` times; the
/// per-pair majority becomes a yes/no decision, ties abstain, and
/// `r = yes / (yes + no)` over decided pairs. Requests carry
/// `pair:{i}:{j}:trial:{t}` tags so caches keep trials distinct and
/// scripted providers can answer by pair.
///
/// Failure policy: credential errors abort immediately (no point burning
/// the remaining queries); any other per-call failure records an
/// unparseable vote for that trial and moves on. If every pair abstains
/// the estimate is meaningless and an error is returned.
pub fn estimate_r(
    graph: &TagGraph,
    provider: &dyn ChatProvider,
    task_description: &str,
    config: &EstimateConfig,
) -> Result<HomophilyEstimate, HomophilyError> {
    if config.trials == 0 || config.trials.is_multiple_of(2) {
        return Err(HomophilyError::InvalidTrials(config.trials));
    }
    let texts = graph.texts().ok_or(HomophilyError::MissingTexts)?;
    let sample = graph.sample_edges(config.sample_size, config.seed)?;

    // One job per (pair, trial), indexed so results land in fixed slots
    // regardless of completion order or worker count.
    let trials = config.trials;
    let jobs = sample.pairs.len() * trials;
    let run_job = |k: usize| -> Result<Vote, LlmError> {
        let (i, j) = sample.pairs[k / trials];
        let trial = k % trials;
        let budgeted = |v: usize| match config.text_budget {
            Some(b) => truncate_text(&texts[v], b),
            None => texts[v].clone(),
        };
        let prompt = match build_pair_prompt(task_description, &budgeted(i), &budgeted(j)) {
            Ok(p) => p,
            // Unpromptable pair (e.g. empty text): abstains via vote.
            Err(_) => return Ok(Vote::Unparseable),
        };
        let request = ChatRequest {
            prompt,
            params: config.params.clone(),
            tag: Some(format!("pair:{i}:{j}:trial:{trial}")),
        };
        provider
            .chat(&request)
            .map(|resp| parse_yes_no(&resp.raw_text))
    };

    let results: Vec<Result<Vote, LlmError>> = if config.concurrency > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.concurrency)
            .build()
            .expect("thread pool construction cannot fail with positive size");
        pool.install(|| (0..jobs).into_par_iter().map(run_job).collect())
    } else {
        (0..jobs).map(run_job).collect()
    };

    // Scan in job order so which error surfaces is deterministic.
    let mut votes: Vec<Vote> = Vec::with_capacity(jobs);
    for result in results {
        match result {
            Ok(vote) => votes.push(vote),
            Err(err @ LlmError::Credential(_)) => return Err(err.into()),
            Err(err) => {
                log::warn!("pair query failed, counting as unparseable: {err}");
                votes.push(Vote::Unparseable);
            }
        }
    }

    let mut pairs = Vec::with_capacity(sample.pairs.len());
    let (mut yes, mut no) = (0usize, 0usize);
    for (p, &(i, j)) in sample.pairs.iter().enumerate() {
        let pair_votes = votes[p * trials..(p + 1) * trials].to_vec();
        let decision = majority_vote(&pair_votes);
        match decision {
            Decision::Yes => yes += 1,
            Decision::No => no += 1,
            Decision::Abstain => {}
        }
        pairs.push(PairAudit {
            i,
            j,
            votes: pair_votes,
            decision,
        });
    }
    let decided = yes + no;
    if decided == 0 {
        return Err(HomophilyError::EstimationFailed { pairs: pairs.len() });
    }
    Ok(HomophilyEstimate {
        r: yes as f64 / decided as f64,
        sample_size: sample.pairs.len(),
        requested_sample: config.sample_size,
        trials_per_pair: trials,
        seed: config.seed,
        decided_pairs: decided,
        abstained_pairs: pairs.len() - decided,
        pairs,
        template_version: PAIR_TEMPLATE_VERSION.into(),
    })
}

/// One row of a sample-size sensitivity sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sample_size: usize,
    pub r: f64,
    pub decided_pairs: usize,
    pub abstained_pairs: usize,
    /// `r - exact ratio`, when ground-truth labels exist.
    pub gap: Option<f64>,
}

/// Re-runs [`estimate_r`] at each requested sample size with independent
/// derived seeds, reporting the estimate (and, when labels exist, the gap
/// to the exact ratio) per size.
pub fn sensitivity_sweep(
    graph: &TagGraph,
    provider: &dyn ChatProvider,
    task_description: &str,
    sample_sizes: &[usize],
    base: &EstimateConfig,
) -> Result<Vec<SweepRow>, HomophilyError> {
    let exact = graph.homophily_ratio_exact().ok();
    let mut rows = Vec::with_capacity(sample_sizes.len());
    for &t in sample_sizes {
        let config = EstimateConfig {
            sample_size: t,
            seed: derive_seed(base.seed, t as u64),
            ..base.clone()
        };
        let estimate = estimate_r(graph, provider, task_description, &config)?;
        rows.push(SweepRow {
            sample_size: t,
            r: estimate.r,
            decided_pairs: estimate.decided_pairs,
            abstained_pairs: estimate.abstained_pairs,
            gap: exact.map(|e| estimate.r - e),
        });
    }
    Ok(rows)
}

/// Mixes a stream index into a base seed (splitmix-style odd constant), so
/// per-size estimates are independent but reproducible.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockProvider, OracleProvider};

    /// 6-cycle with labels [0,0,0,1,1,1]: edges (0,1),(1,2),(3,4),(4,5)
    /// same-label, (2,3),(0,5) cross => exact r = 4/6.
    fn cycle_graph() -> TagGraph {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)];
        let (g, _) = TagGraph::from_edges(6, 2, &edges).unwrap();
        g.with_labels(vec![0, 0, 0, 1, 1, 1])
            .unwrap()
            .with_texts((0..6).map(|i| format!("node text {i}")).collect())
            .unwrap()
    }

    fn oracle_for(graph: &TagGraph) -> OracleProvider {
        OracleProvider::new(
            graph.labels().unwrap().to_vec(),
            vec!["alpha".into(), "beta".into()],
        )
    }

    #[test]
    fn potential_clamps_and_splits_mass() {
        let p = EdgePotential::from_r(0.7, 1e-4).unwrap();
        assert_eq!(p.same(), 0.7);
        assert!((p.diff() - 0.3).abs() < 1e-15);
        assert_eq!(p.log_psi(2, 2), p.log_same());
        assert_eq!(p.log_psi(0, 1), p.log_diff());

        let lo = EdgePotential::from_r(0.0, 1e-4).unwrap();
        assert_eq!(lo.r(), 1e-4);
        assert_eq!(lo.raw_r(), 0.0);
        assert!(lo.log_same().is_finite());

        let hi = EdgePotential::from_r(1.0, 1e-4).unwrap();
        assert_eq!(hi.r(), 1.0 - 1e-4);
        assert!(hi.log_diff().is_finite());

        // A ratio below the clamp still comes through distinguishable from
        // the clamp floor's neighborhood above it.
        let tiny = EdgePotential::from_r(0.02, 1e-4).unwrap();
        assert_eq!(tiny.r(), 0.02);
    }

    #[test]
    fn potential_neutral_at_half() {
        let p = EdgePotential::from_r(0.5, 1e-4).unwrap();
        assert_eq!(p.same(), p.diff());
        assert_eq!(p.log_same(), p.log_diff());
    }

    #[test]
    fn potential_rejects_bad_inputs() {
        assert!(matches!(
            EdgePotential::from_r(1.5, 1e-4),
            Err(HomophilyError::InvalidRatio(_))
        ));
        assert!(matches!(
            EdgePotential::from_r(f64::NAN, 1e-4),
            Err(HomophilyError::InvalidRatio(_))
        ));
        assert!(matches!(
            EdgePotential::from_r(0.5, 0.0),
            Err(HomophilyError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            EdgePotential::from_r(0.5, 0.5),
            Err(HomophilyError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn oracle_on_all_edges_reproduces_exact_ratio() {
        let graph = cycle_graph();
        let oracle = oracle_for(&graph);
        let config = EstimateConfig {
            sample_size: 100, // > |E| = 6: exhaustive
            trials: 3,
            concurrency: 1,
            ..EstimateConfig::default()
        };
        let estimate = estimate_r(&graph, &oracle, "test items", &config).unwrap();
        assert_eq!(estimate.sample_size, 6);
        assert_eq!(estimate.decided_pairs, 6);
        assert_eq!(estimate.abstained_pairs, 0);
        // Same integer division as the exact ratio: bit-equal.
        assert_eq!(estimate.r, graph.homophily_ratio_exact().unwrap());
        assert_eq!(estimate.template_version, PAIR_TEMPLATE_VERSION);
    }

    #[test]
    fn estimate_is_deterministic_per_seed() {
        let graph = cycle_graph();
        let oracle = oracle_for(&graph);
        let config = EstimateConfig {
            sample_size: 3,
            trials: 1,
            seed: 9,
            concurrency: 4,
            ..EstimateConfig::default()
        };
        let a = estimate_r(&graph, &oracle, "test items", &config).unwrap();
        let b = estimate_r(&graph, &oracle, "test items", &config).unwrap();
        assert_eq!(a.r, b.r);
        assert_eq!(
            a.pairs.iter().map(|p| (p.i, p.j)).collect::<Vec<_>>(),
            b.pairs.iter().map(|p| (p.i, p.j)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn majority_voting_overrules_minority_answers() {
        let graph = cycle_graph();
        let mut mock = MockProvider::new();
        // Pair (0,1): two No votes, three Yes votes => Yes.
        // All other pairs: default No.
        for trial in 0..5 {
            let answer = if trial < 2 { "No" } else { "Yes" };
            mock.insert_tag(format!("pair:0:1:trial:{trial}"), answer);
        }
        let mock = mock.with_default("No");
        let config = EstimateConfig {
            sample_size: 100,
            trials: 5,
            concurrency: 1,
            ..EstimateConfig::default()
        };
        let estimate = estimate_r(&graph, &mock, "test items", &config).unwrap();
        let pair01 = estimate
            .pairs
            .iter()
            .find(|p| (p.i, p.j) == (0, 1))
            .unwrap();
        assert_eq!(pair01.decision, Decision::Yes);
        assert_eq!(
            pair01.votes,
            vec![Vote::No, Vote::No, Vote::Yes, Vote::Yes, Vote::Yes]
        );
        assert!((estimate.r - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn all_abstaining_pairs_fail_estimation() {
        let graph = cycle_graph();
        let mock = MockProvider::new().with_default("cannot say");
        let config = EstimateConfig {
            sample_size: 4,
            trials: 1,
            concurrency: 1,
            ..EstimateConfig::default()
        };
        let err = estimate_r(&graph, &mock, "test items", &config).unwrap_err();
        assert!(matches!(err, HomophilyError::EstimationFailed { pairs: 4 }));
    }

    #[test]
    fn even_trials_rejected() {
        let graph = cycle_graph();
        let oracle = oracle_for(&graph);
        let config = EstimateConfig {
            trials: 4,
            ..EstimateConfig::default()
        };
        assert!(matches!(
            estimate_r(&graph, &oracle, "d", &config),
            Err(HomophilyError::InvalidTrials(4))
        ));
    }

    #[test]
    fn missing_texts_rejected() {
        let (g, _) = TagGraph::from_edges(3, 2, &[(0, 1), (1, 2)]).unwrap();
        let g = g.with_labels(vec![0, 1, 0]).unwrap();
        let oracle = oracle_for(&g);
        assert!(matches!(
            estimate_r(&g, &oracle, "d", &EstimateConfig::default()),
            Err(HomophilyError::MissingTexts)
        ));
    }

    #[test]
    fn sweep_reports_gap_against_exact() {
        let graph = cycle_graph();
        let oracle = oracle_for(&graph);
        let base = EstimateConfig {
            trials: 1,
            concurrency: 1,
            ..EstimateConfig::default()
        };
        let rows = sensitivity_sweep(&graph, &oracle, "test items", &[6, 3], &base).unwrap();
        assert_eq!(rows.len(), 2);
        // Exhaustive row: gap is exactly zero.
        assert_eq!(rows[0].gap, Some(0.0));
        // Subsampled row: the oracle only errs through sampling.
        assert!(rows[1].gap.unwrap().abs() <= 1.0);
    }
}
