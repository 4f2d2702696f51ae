//! Inference over the pairwise Markov random field: node potentials from
//! embeddings, synchronous loopy belief propagation in log space, a
//! one-shot linear approximation, and a brute-force oracle for small
//! graphs.
//!
//! All distributions live in log space end to end. Messages and beliefs
//! are kept normalized (log-sum-exp of every row is 0) after each round,
//! and every sum over classes goes through a max-shifted `exp`, so nothing
//! overflows and underflow saturates gracefully instead of producing NaN.

use rayon::prelude::*;
use thiserror::Error;

use crate::defaults;
use crate::embedding::{cosine, ClassEmbeddings, EmbeddingError, EmbeddingMatrix};
use crate::graph::TagGraph;
use crate::homophily::EdgePotential;

#[derive(Debug, Error)]
pub enum BpError {
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("damping must lie in (0, 1], got {0}")]
    InvalidDamping(f64),
    #[error("belief state covers {beliefs} nodes, graph has {graph}")]
    NodeCountMismatch { beliefs: usize, graph: usize },
    #[error("class count must be at least 1")]
    NoClasses,
    #[error("ratio must lie in [0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("non-finite value produced at iteration {iteration}")]
    NumericalFailure { iteration: usize },
    #[error("exact inference infeasible: {classes}^{nodes} exceeds {bound:e} joint states")]
    InfeasibleExact {
        classes: usize,
        nodes: usize,
        bound: f64,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Joint-state budget for [`exact_marginals`]: refuse instances whose
/// label-assignment space `c^n` exceeds this.
pub const EXACT_STATE_BOUND: f64 = 1e7;

/// Numeric floor for exponent shifts: `exp(-700)` is the smallest scale
/// that stays a normal `f64` through sums, so shifted exponents are clamped
/// here instead of underflowing to zero mid-computation.
const LOG_FLOOR: f64 = -700.0;

/// Log-sum-exp with max shift. All `-inf` inputs yield `-inf` rather than
/// NaN.
fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = row.iter().map(|&x| ((x - max).max(LOG_FLOOR)).exp()).sum();
    max + sum.ln()
}

/// Per-node log distributions over classes, normalized per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    node_count: usize,
    class_count: usize,
    /// Row-major `node_count x class_count` log probabilities.
    log_beliefs: Vec<f64>,
    /// BP rounds applied (0 for raw potentials).
    iteration: usize,
}

impl BeliefState {
    /// Normalizes arbitrary finite log potentials into a belief state.
    pub fn from_log_potentials(
        node_count: usize,
        class_count: usize,
        mut values: Vec<f64>,
    ) -> Result<Self, BpError> {
        if class_count == 0 {
            return Err(BpError::NoClasses);
        }
        assert_eq!(values.len(), node_count * class_count, "shape mismatch");
        for row in values.chunks_mut(class_count) {
            let z = log_sum_exp(row);
            for v in row.iter_mut() {
                *v -= z;
            }
        }
        let state = Self {
            node_count,
            class_count,
            log_beliefs: values,
            iteration: 0,
        };
        state.check_finite(0)?;
        Ok(state)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Log probabilities for one node.
    pub fn log_row(&self, node: usize) -> &[f64] {
        &self.log_beliefs[node * self.class_count..(node + 1) * self.class_count]
    }

    /// Probabilities for one node (exponentiated copy).
    pub fn probabilities(&self, node: usize) -> Vec<f64> {
        self.log_row(node).iter().map(|&x| x.exp()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.log_beliefs
    }

    fn check_finite(&self, iteration: usize) -> Result<(), BpError> {
        if self.log_beliefs.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(BpError::NumericalFailure { iteration })
        }
    }

    /// Largest deviation of any row's log-sum-exp from 0.
    pub fn max_normalization_error(&self) -> f64 {
        self.log_beliefs
            .chunks(self.class_count)
            .map(|row| log_sum_exp(row).abs())
            .fold(0.0, f64::max)
    }
}

/// Directed messages, one log distribution per adjacency entry.
///
/// Entry `e` in node `u`'s adjacency range holds the message *into* `u`
/// from `neighbors[e]`, so a node's incoming messages are contiguous.
#[derive(Debug, Clone)]
pub struct MessageSet {
    entry_count: usize,
    class_count: usize,
    log_messages: Vec<f64>,
    iteration: usize,
}

impl MessageSet {
    /// Uniform initial messages.
    pub fn uniform(graph: &TagGraph, class_count: usize) -> Result<Self, BpError> {
        if class_count == 0 {
            return Err(BpError::NoClasses);
        }
        let entry_count = graph.directed_entry_count();
        let value = -(class_count as f64).ln();
        Ok(Self {
            entry_count,
            class_count,
            log_messages: vec![value; entry_count * class_count],
            iteration: 0,
        })
    }

    pub fn entry_count(&self) -> usize {
        self.entry_count
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn log_entry(&self, e: usize) -> &[f64] {
        &self.log_messages[e * self.class_count..(e + 1) * self.class_count]
    }

    /// Largest deviation of any entry's log-sum-exp from 0.
    pub fn max_normalization_error(&self) -> f64 {
        self.log_messages
            .chunks(self.class_count)
            .map(|row| log_sum_exp(row).abs())
            .fold(0.0, f64::max)
    }
}

/// Loopy BP controls. `tau` is carried here for pipeline plumbing but is
/// consumed by [`node_potentials`], not by the message passing itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub iterations: usize,
    pub tau: f64,
    /// Fraction of the new message mixed with the old one per round; 1.0
    /// disables damping.
    pub damping: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            iterations: defaults::BP_ITERATIONS,
            tau: defaults::TAU_FULL_BP,
            damping: 1.0,
        }
    }
}

/// Builds initial beliefs from embeddings: per node, a softmax over cosine
/// similarities to each class anchor at temperature `tau`.
pub fn node_potentials(
    emb: &EmbeddingMatrix,
    anchors: &ClassEmbeddings,
    tau: f64,
) -> Result<BeliefState, BpError> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(BpError::InvalidTau(tau));
    }
    if emb.dim() != anchors.dim() {
        return Err(BpError::Embedding(EmbeddingError::DimMismatch {
            left: emb.dim(),
            right: anchors.dim(),
        }));
    }
    let c = anchors.class_count();
    if c == 0 {
        return Err(BpError::NoClasses);
    }
    let rows = emb.rows();
    let mut values = vec![0.0; rows * c];
    let errors: Vec<Option<EmbeddingError>> = values
        .par_chunks_mut(c)
        .enumerate()
        .map(|(i, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                match cosine(emb.row(i), anchors.anchor(k)) {
                    Ok(sim) => *slot = sim / tau,
                    Err(EmbeddingError::ZeroNorm { row: which }) => {
                        return Some(EmbeddingError::ZeroNorm {
                            row: if which == 0 { i } else { k },
                        })
                    }
                    Err(other) => return Some(other),
                }
            }
            let z = log_sum_exp(row);
            for v in row.iter_mut() {
                *v -= z;
            }
            None
        })
        .collect();
    if let Some(err) = errors.into_iter().flatten().next() {
        return Err(err.into());
    }
    let state = BeliefState {
        node_count: rows,
        class_count: c,
        log_beliefs: values,
        iteration: 0,
    };
    state.check_finite(0)?;
    Ok(state)
}

/// Position of each directed entry's reverse: entry `(u -> slot for v)`
/// maps to the entry in `v`'s range that points back at `u`.
fn reverse_index(graph: &TagGraph) -> Vec<usize> {
    let row_ptr = graph.row_ptr();
    let mut rev = vec![0usize; graph.directed_entry_count()];
    for u in 0..graph.node_count() {
        for (offset, &v) in graph.neighbors(u).iter().enumerate() {
            let e = row_ptr[u] + offset;
            let back = graph
                .neighbors(v)
                .binary_search(&u)
                .expect("symmetrized adjacency must contain the reverse entry");
            rev[e] = row_ptr[v] + back;
        }
    }
    rev
}

struct StepContext<'a> {
    graph: &'a TagGraph,
    rev: Vec<usize>,
}

impl<'a> StepContext<'a> {
    fn new(graph: &'a TagGraph) -> Self {
        Self {
            graph,
            rev: reverse_index(graph),
        }
    }

    /// One synchronous round: all messages update from the previous round's
    /// beliefs and messages, then beliefs recompute from the initial
    /// potentials and the new messages.
    fn step(
        &self,
        init: &BeliefState,
        psi: &EdgePotential,
        beliefs: &BeliefState,
        messages: &MessageSet,
        damping: f64,
    ) -> Result<(BeliefState, MessageSet), BpError> {
        let c = init.class_count;
        let iteration = messages.iteration + 1;
        let r = psi.r();

        let mut new_messages = vec![0.0; messages.log_messages.len()];
        new_messages
            .par_chunks_mut(c)
            .enumerate()
            .for_each(|(e, out)| {
                // Entry e carries the message v -> u, where u owns the
                // entry. Its input is v's belief with u's previous reverse
                // message divided out.
                let v = self.graph.entry_neighbor(e);
                let prev_belief = beliefs.log_row(v);
                let prev_reverse = messages.log_entry(self.rev[e]);

                // Scratch for the shifted exponentials; stack for the
                // common small class counts, heap beyond.
                let mut stack_buf = [0.0f64; 16];
                let mut heap_buf: Vec<f64>;
                let shifted: &mut [f64] = if c <= 16 {
                    &mut stack_buf[..c]
                } else {
                    heap_buf = vec![0.0; c];
                    &mut heap_buf
                };
                // shifted starts as s(y_v) = log p_v - log m_{u->v}.
                let mut max = f64::NEG_INFINITY;
                for b in 0..c {
                    let s = prev_belief[b] - prev_reverse[b];
                    shifted[b] = s;
                    max = max.max(s);
                }
                let mut total = 0.0;
                for s in shifted.iter_mut() {
                    *s = ((*s - max).max(LOG_FLOOR)).exp();
                    total += *s;
                }
                // For the agree/disagree potential the class sum collapses:
                // val(a) = r * E_a + (1 - r) * (total - E_a).
                for a in 0..c {
                    let val = r * shifted[a] + (1.0 - r) * (total - shifted[a]);
                    out[a] = max + val.ln();
                }
                let z = log_sum_exp(out);
                for v in out.iter_mut() {
                    *v -= z;
                }
                if damping < 1.0 {
                    let old = messages.log_entry(e);
                    for (v, &o) in out.iter_mut().zip(old) {
                        *v = damping * *v + (1.0 - damping) * o;
                    }
                    let z = log_sum_exp(out);
                    for v in out.iter_mut() {
                        *v -= z;
                    }
                }
            });
        let new_messages = MessageSet {
            entry_count: messages.entry_count,
            class_count: c,
            log_messages: new_messages,
            iteration,
        };

        let mut new_beliefs = vec![0.0; init.log_beliefs.len()];
        new_beliefs
            .par_chunks_mut(c)
            .enumerate()
            .for_each(|(u, out)| {
                out.copy_from_slice(init.log_row(u));
                for e in self.graph.row_ptr()[u]..self.graph.row_ptr()[u + 1] {
                    for (o, m) in out.iter_mut().zip(new_messages.log_entry(e)) {
                        *o += m;
                    }
                }
                let z = log_sum_exp(out);
                for v in out.iter_mut() {
                    *v -= z;
                }
            });
        let new_beliefs = BeliefState {
            node_count: init.node_count,
            class_count: c,
            log_beliefs: new_beliefs,
            iteration,
        };
        new_beliefs.check_finite(iteration)?;
        if !new_messages.log_messages.iter().all(|v| v.is_finite()) {
            return Err(BpError::NumericalFailure { iteration });
        }
        Ok((new_beliefs, new_messages))
    }
}

fn check_inputs(graph: &TagGraph, init: &BeliefState) -> Result<(), BpError> {
    if init.node_count != graph.node_count() {
        return Err(BpError::NodeCountMismatch {
            beliefs: init.node_count,
            graph: graph.node_count(),
        });
    }
    Ok(())
}

/// Runs synchronous loopy BP for `config.iterations` rounds and returns the
/// final beliefs.
pub fn run_lbp(
    graph: &TagGraph,
    init: &BeliefState,
    psi: &EdgePotential,
    config: &BpConfig,
) -> Result<BeliefState, BpError> {
    if config.iterations == 0 {
        return Err(BpError::ZeroIterations);
    }
    if !(config.damping > 0.0 && config.damping <= 1.0) {
        return Err(BpError::InvalidDamping(config.damping));
    }
    check_inputs(graph, init)?;
    let context = StepContext::new(graph);
    let mut beliefs = init.clone();
    let mut messages = MessageSet::uniform(graph, init.class_count)?;
    for _ in 0..config.iterations {
        (beliefs, messages) = context.step(init, psi, &beliefs, &messages, config.damping)?;
    }
    Ok(beliefs)
}

/// One exposed BP round, for tests that check per-round invariants.
/// `state` is the previous round's output (use the initial beliefs and
/// [`MessageSet::uniform`] for round one).
pub fn lbp_step(
    graph: &TagGraph,
    init: &BeliefState,
    psi: &EdgePotential,
    state: (&BeliefState, &MessageSet),
    damping: f64,
) -> Result<(BeliefState, MessageSet), BpError> {
    check_inputs(graph, init)?;
    StepContext::new(graph).step(init, psi, state.0, state.1, damping)
}

/// Linearized one-shot approximation of BP.
///
/// Each node adds its neighbors' initial log beliefs, weighted by the sign
/// of the homophily log odds: `+1` when `r > 0.5` (neighbors attract),
/// `-1` when `r < 0.5` (neighbors repel), `0` at exactly `r = 0.5`, where
/// the output equals the input beliefs.
pub fn run_lbp_approx(
    graph: &TagGraph,
    init: &BeliefState,
    r: f64,
) -> Result<BeliefState, BpError> {
    if !r.is_finite() || !(0.0..=1.0).contains(&r) {
        return Err(BpError::InvalidRatio(r));
    }
    check_inputs(graph, init)?;
    // sign(log(r / (1 - r))) without floating-point signum, whose
    // signum(0.0) == 1.0 would break the neutral case.
    let sign = if r > 0.5 {
        1.0
    } else if r < 0.5 {
        -1.0
    } else {
        // Neutral ratio: neighbor terms vanish, so the output *is* the
        // input. Returning it directly keeps the identity exact instead of
        // round-tripping through a no-op renormalization.
        let mut state = init.clone();
        state.iteration = 1;
        return Ok(state);
    };
    let c = init.class_count;
    let mut values = vec![0.0; init.log_beliefs.len()];
    values.par_chunks_mut(c).enumerate().for_each(|(u, out)| {
        out.copy_from_slice(init.log_row(u));
        for &v in graph.neighbors(u) {
            for (o, x) in out.iter_mut().zip(init.log_row(v)) {
                *o += sign * x;
            }
        }
        let z = log_sum_exp(out);
        for v in out.iter_mut() {
            *v -= z;
        }
    });
    let state = BeliefState {
        node_count: init.node_count,
        class_count: c,
        log_beliefs: values,
        iteration: 1,
    };
    state.check_finite(1)?;
    Ok(state)
}

/// Exact marginals by brute-force enumeration of all `c^n` label
/// assignments. Refuses instances beyond [`EXACT_STATE_BOUND`] states.
///
/// The joint weight of an assignment is the product of all initial node
/// beliefs and all edge potentials; enumeration runs twice, first to find
/// the maximum log weight (the stable shift), then to accumulate shifted
/// per-node marginal mass.
pub fn exact_marginals(
    graph: &TagGraph,
    init: &BeliefState,
    psi: &EdgePotential,
) -> Result<BeliefState, BpError> {
    check_inputs(graph, init)?;
    let n = init.node_count;
    let c = init.class_count;
    if (c as f64).powi(n as i32) > EXACT_STATE_BOUND {
        return Err(BpError::InfeasibleExact {
            classes: c,
            nodes: n,
            bound: EXACT_STATE_BOUND,
        });
    }
    if c == 1 {
        // One class: the marginal is a point mass regardless of structure,
        // and recursing n deep for it would be pointless.
        return Ok(BeliefState {
            node_count: n,
            class_count: 1,
            log_beliefs: vec![0.0; n],
            iteration: 0,
        });
    }
    // Neighbors with smaller id: each edge is scored once, at its larger
    // endpoint, the moment that endpoint's label is chosen.
    let earlier: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| u < v)
                .collect()
        })
        .collect();

    struct Enumerator<'a> {
        init: &'a BeliefState,
        earlier: &'a [Vec<usize>],
        log_same: f64,
        log_diff: f64,
        assignment: Vec<usize>,
        c: usize,
        n: usize,
    }

    impl Enumerator<'_> {
        fn delta(&self, v: usize, y: usize) -> f64 {
            let mut w = self.init.log_row(v)[y];
            for &u in &self.earlier[v] {
                w += if self.assignment[u] == y {
                    self.log_same
                } else {
                    self.log_diff
                };
            }
            w
        }

        fn find_max(&mut self, v: usize, logw: f64, best: &mut f64) {
            if v == self.n {
                *best = best.max(logw);
                return;
            }
            for y in 0..self.c {
                self.assignment[v] = y;
                let w = logw + self.delta(v, y);
                self.find_max(v + 1, w, best);
            }
        }

        fn accumulate(&mut self, v: usize, logw: f64, shift: f64, acc: &mut [f64], z: &mut f64) {
            if v == self.n {
                let w = ((logw - shift).max(LOG_FLOOR)).exp();
                *z += w;
                for (u, &y) in self.assignment.iter().enumerate() {
                    acc[u * self.c + y] += w;
                }
                return;
            }
            for y in 0..self.c {
                self.assignment[v] = y;
                let w = logw + self.delta(v, y);
                self.accumulate(v + 1, w, shift, acc, z);
            }
        }
    }

    let mut enumerator = Enumerator {
        init,
        earlier: &earlier,
        log_same: psi.log_same(),
        log_diff: psi.log_diff(),
        assignment: vec![0; n],
        c,
        n,
    };
    let mut shift = f64::NEG_INFINITY;
    enumerator.find_max(0, 0.0, &mut shift);
    let mut acc = vec![0.0; n * c];
    let mut z = 0.0;
    enumerator.accumulate(0, 0.0, shift, &mut acc, &mut z);

    let log_z = z.ln();
    let values: Vec<f64> = acc
        .iter()
        .map(|&m| {
            // Mass that underflowed entirely maps to the numeric floor
            // rather than -inf, keeping the state finite.
            if m == 0.0 {
                LOG_FLOOR
            } else {
                m.ln() - log_z
            }
        })
        .collect();
    let state = BeliefState {
        node_count: n,
        class_count: c,
        log_beliefs: values,
        iteration: 0,
    };
    state.check_finite(0)?;
    Ok(state)
}

/// Hard predictions: per node, the class with the largest belief. Ties
/// resolve to the lowest class id, so predictions are deterministic.
pub fn predict(beliefs: &BeliefState) -> Vec<usize> {
    (0..beliefs.node_count())
        .map(|u| {
            let row = beliefs.log_row(u);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::AnchorProvenance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn beliefs_from(rows: &[&[f64]]) -> BeliefState {
        let c = rows[0].len();
        let values: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BeliefState::from_log_potentials(rows.len(), c, values).unwrap()
    }

    /// Beliefs whose probability rows are exactly the given ones.
    fn beliefs_from_probs(rows: &[&[f64]]) -> BeliefState {
        let logs: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| p.ln()).collect())
            .collect();
        beliefs_from(&logs.iter().map(|r| r.as_slice()).collect::<Vec<_>>())
    }

    fn psi(r: f64) -> EdgePotential {
        EdgePotential::from_r(r, 1e-4).unwrap()
    }

    #[test]
    fn node_potentials_match_hand_computed_softmax() {
        // Node embedding (1,0); anchors (3,4) and (0,1) give exact cosines
        // 0.6 and 0.0. At tau = 0.1 the logits are (6, 0):
        //   p = (1, e^-6) / (1 + e^-6).
        let emb = EmbeddingMatrix::from_values(1, 2, vec![1.0, 0.0]).unwrap();
        let anchors = ClassEmbeddings::from_values(
            2,
            2,
            vec![3.0, 4.0, 0.0, 1.0],
            AnchorProvenance::External,
        )
        .unwrap();
        let state = node_potentials(&emb, &anchors, 0.1).unwrap();
        let p = state.probabilities(0);
        assert!((p[0] - 0.9975273768433653).abs() < 1e-12);
        assert!((p[1] - 0.0024726231566347743).abs() < 1e-12);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        assert_eq!(state.iteration(), 0);
    }

    #[test]
    fn node_potentials_sharpen_as_tau_shrinks() {
        let emb = EmbeddingMatrix::from_values(1, 2, vec![1.0, 0.0]).unwrap();
        let anchors = ClassEmbeddings::from_values(
            2,
            2,
            vec![3.0, 4.0, 0.0, 1.0],
            AnchorProvenance::External,
        )
        .unwrap();
        let warm = node_potentials(&emb, &anchors, 0.5)
            .unwrap()
            .probabilities(0);
        let cold = node_potentials(&emb, &anchors, 0.025)
            .unwrap()
            .probabilities(0);
        assert!(cold[0] > warm[0]);
        assert!(cold[0] > 0.999999);
    }

    #[test]
    fn node_potentials_reject_bad_tau_and_dims() {
        let emb = EmbeddingMatrix::from_values(1, 2, vec![1.0, 0.0]).unwrap();
        let anchors =
            ClassEmbeddings::from_values(1, 3, vec![1.0, 0.0, 0.0], AnchorProvenance::External)
                .unwrap();
        assert!(matches!(
            node_potentials(&emb, &anchors, 0.1),
            Err(BpError::Embedding(EmbeddingError::DimMismatch { .. }))
        ));
        let ok_anchors =
            ClassEmbeddings::from_values(1, 2, vec![1.0, 0.0], AnchorProvenance::External).unwrap();
        assert!(matches!(
            node_potentials(&emb, &ok_anchors, 0.0),
            Err(BpError::InvalidTau(_))
        ));
        assert!(matches!(
            node_potentials(&emb, &ok_anchors, f64::NAN),
            Err(BpError::InvalidTau(_))
        ));
    }

    #[test]
    fn two_node_chain_matches_hand_computation() {
        // Nodes A, B; p_A = (0.9, 0.1), p_B = (0.5, 0.5), r = 0.8.
        // After one round the belief at B is exactly (0.74, 0.26) and A is
        // unchanged; further rounds are stable (tree => exact marginals).
        let (g, _) = TagGraph::from_edges(2, 2, &[(0, 1)]).unwrap();
        let init = beliefs_from_probs(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let config = BpConfig {
            iterations: 1,
            ..BpConfig::default()
        };
        let one = run_lbp(&g, &init, &psi(0.8), &config).unwrap();
        let pa = one.probabilities(0);
        let pb = one.probabilities(1);
        assert!((pa[0] - 0.9).abs() < 1e-12);
        assert!((pb[0] - 0.74).abs() < 1e-12);
        assert!((pb[1] - 0.26).abs() < 1e-12);

        let five = run_lbp(&g, &init, &psi(0.8), &BpConfig::default()).unwrap();
        assert!((five.probabilities(1)[0] - 0.74).abs() < 1e-12);
        assert_eq!(five.iteration(), 5);

        let exact = exact_marginals(&g, &init, &psi(0.8)).unwrap();
        for u in 0..2 {
            for k in 0..2 {
                assert!((exact.probabilities(u)[k] - five.probabilities(u)[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neutral_ratio_leaves_beliefs_unchanged() {
        // Star: center 0 with 4 leaves, various potentials. At r = 0.5 the
        // messages carry no information, so beliefs equal the inputs
        // exactly (bitwise: the message term is a constant subtracted away
        // by normalization).
        let (g, _) = TagGraph::from_edges(5, 3, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let init = beliefs_from(&[
            &[0.3, -0.7, 1.9],
            &[0.0, 0.0, 0.0],
            &[2.0, -2.0, 0.5],
            &[-1.0, -1.0, 3.0],
            &[0.1, 0.2, 0.3],
        ]);
        let out = run_lbp(&g, &init, &psi(0.5), &BpConfig::default()).unwrap();
        for u in 0..5 {
            for k in 0..3 {
                assert!(
                    (out.log_row(u)[k] - init.log_row(u)[k]).abs() < 1e-12,
                    "node {u} class {k} moved at r = 0.5"
                );
            }
        }
        let approx = run_lbp_approx(&g, &init, 0.5).unwrap();
        for u in 0..5 {
            for k in 0..3 {
                assert_eq!(approx.log_row(u)[k], init.log_row(u)[k]);
            }
        }
    }

    #[test]
    fn messages_and_beliefs_stay_normalized_every_round() {
        // Loopy graph: 4-cycle with a chord.
        let (g, _) = TagGraph::from_edges(4, 3, &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]).unwrap();
        let init = beliefs_from(&[
            &[1.0, 0.0, -1.0],
            &[0.0, 2.0, 0.0],
            &[-0.5, 0.5, 1.5],
            &[0.0, 0.0, 0.0],
        ]);
        let potential = psi(0.8);
        let mut beliefs = init.clone();
        let mut messages = MessageSet::uniform(&g, 3).unwrap();
        for round in 1..=6 {
            (beliefs, messages) =
                lbp_step(&g, &init, &potential, (&beliefs, &messages), 1.0).unwrap();
            assert!(beliefs.max_normalization_error() < 1e-9, "round {round}");
            assert!(messages.max_normalization_error() < 1e-9, "round {round}");
            assert_eq!(beliefs.iteration(), round);
        }
    }

    #[test]
    fn homophilic_potential_pulls_neighbors_together() {
        // Path A - B where A is confident and B uniform: with r > 0.5, B
        // moves toward A; with r < 0.5, away.
        let (g, _) = TagGraph::from_edges(2, 2, &[(0, 1)]).unwrap();
        let init = beliefs_from_probs(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let pull = run_lbp(&g, &init, &psi(0.9), &BpConfig::default()).unwrap();
        assert!(pull.probabilities(1)[0] > 0.5);
        let push = run_lbp(&g, &init, &psi(0.1), &BpConfig::default()).unwrap();
        assert!(push.probabilities(1)[0] < 0.5);
    }

    #[test]
    fn approx_sign_flips_with_ratio() {
        let (g, _) = TagGraph::from_edges(2, 2, &[(0, 1)]).unwrap();
        let init = beliefs_from_probs(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let pull = run_lbp_approx(&g, &init, 0.9).unwrap();
        assert!((pull.probabilities(1)[0] - 0.9).abs() < 1e-12);
        let push = run_lbp_approx(&g, &init, 0.1).unwrap();
        assert!((push.probabilities(1)[0] - 0.1).abs() < 1e-12);
        assert!(matches!(
            run_lbp_approx(&g, &init, 1.5),
            Err(BpError::InvalidRatio(_))
        ));
    }

    #[test]
    fn exact_marginals_brute_force_cross_check() {
        // Triangle with c = 2: small enough to verify against a literal
        // sum over all 8 assignments computed in probability space.
        let (g, _) = TagGraph::from_edges(3, 2, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let init = beliefs_from_probs(&[&[0.7, 0.3], &[0.4, 0.6], &[0.5, 0.5]]);
        let potential = psi(0.8);
        let exact = exact_marginals(&g, &init, &potential).unwrap();

        let p = [[0.7, 0.3], [0.4, 0.6], [0.5, 0.5]];
        let edges = [(0usize, 1usize), (1, 2), (0, 2)];
        let mut marg = [[0.0f64; 2]; 3];
        let mut z = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let y = [a, b, c];
                    let mut w = p[0][a] * p[1][b] * p[2][c];
                    for &(s, t) in &edges {
                        w *= if y[s] == y[t] { 0.8 } else { 0.2 };
                    }
                    z += w;
                    for (v, &label) in y.iter().enumerate() {
                        marg[v][label] += w;
                    }
                }
            }
        }
        for (v, row) in marg.iter().enumerate() {
            for (k, &m) in row.iter().enumerate() {
                assert!((exact.probabilities(v)[k] - m / z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_marginals_refuse_oversized_instances() {
        let edges: Vec<_> = (0..11).map(|i| (i, i + 1)).collect();
        let (g, _) = TagGraph::from_edges(12, 5, &edges).unwrap();
        let values = vec![0.0; 12 * 5];
        let init = BeliefState::from_log_potentials(12, 5, values).unwrap();
        // 5^12 ~ 2.4e8 > 1e7.
        assert!(matches!(
            exact_marginals(&g, &init, &psi(0.7)),
            Err(BpError::InfeasibleExact {
                classes: 5,
                nodes: 12,
                ..
            })
        ));
    }

    #[test]
    fn predict_breaks_ties_toward_lowest_class() {
        let state = beliefs_from(&[&[0.0, 0.0, -1.0], &[-1.0, 0.0, 0.0], &[-1.0, 2.0, -1.0]]);
        assert_eq!(predict(&state), vec![0, 1, 1]);
    }

    #[test]
    fn isolated_nodes_keep_their_potentials() {
        let (g, _) = TagGraph::from_edges(3, 2, &[(0, 1)]).unwrap();
        let init = beliefs_from_probs(&[&[0.9, 0.1], &[0.5, 0.5], &[0.3, 0.7]]);
        let out = run_lbp(&g, &init, &psi(0.9), &BpConfig::default()).unwrap();
        for k in 0..2 {
            assert!((out.log_row(2)[k] - init.log_row(2)[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let (g, _) = TagGraph::from_edges(2, 2, &[(0, 1)]).unwrap();
        let init = beliefs_from_probs(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let config = BpConfig {
            iterations: 0,
            ..BpConfig::default()
        };
        assert!(matches!(
            run_lbp(&g, &init, &psi(0.8), &config),
            Err(BpError::ZeroIterations)
        ));
    }

    /// Random small graph + potentials for property tests.
    fn random_instance(seed: u64, n: usize, c: usize) -> (TagGraph, BeliefState) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.4 {
                    edges.push((i, j));
                }
            }
        }
        let (g, _) = TagGraph::from_edges(n, c, &edges).unwrap();
        let values: Vec<f64> = (0..n * c).map(|_| rng.random_range(-2.0..2.0)).collect();
        let init = BeliefState::from_log_potentials(n, c, values).unwrap();
        (g, init)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Relabeling classes by a permutation commutes with BP: permuting
        /// the initial potentials' columns permutes the output beliefs.
        #[test]
        fn bp_is_class_permutation_equivariant(seed in 0u64..500, swap in 0usize..3) {
            let (g, init) = random_instance(seed, 5, 3);
            let perm: [usize; 3] = match swap {
                0 => [1, 0, 2],
                1 => [2, 1, 0],
                _ => [1, 2, 0],
            };
            let mut permuted = vec![0.0; 5 * 3];
            for u in 0..5 {
                for k in 0..3 {
                    permuted[u * 3 + perm[k]] = init.log_row(u)[k];
                }
            }
            let init_p = BeliefState::from_log_potentials(5, 3, permuted).unwrap();
            let potential = psi(0.8);
            let out = run_lbp(&g, &init, &potential, &BpConfig::default()).unwrap();
            let out_p = run_lbp(&g, &init_p, &potential, &BpConfig::default()).unwrap();
            for u in 0..5 {
                for (k, &pk) in perm.iter().enumerate() {
                    prop_assert!((out.log_row(u)[k] - out_p.log_row(u)[pk]).abs() < 1e-9);
                }
            }
        }

        /// Beliefs stay normalized for arbitrary ratios and inputs.
        #[test]
        fn bp_output_always_normalized(seed in 0u64..500, r in 0.01f64..0.99) {
            let (g, init) = random_instance(seed, 6, 3);
            let out = run_lbp(&g, &init, &psi(r), &BpConfig::default()).unwrap();
            prop_assert!(out.max_normalization_error() < 1e-9);
        }

        /// Damping changes the path, not the fixed point: on a tree both
        /// damped and undamped BP converge to the exact marginals.
        #[test]
        fn damped_bp_converges_on_trees(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
            let (g, _) = TagGraph::from_edges(n, 2, &edges).unwrap();
            let values: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let init = BeliefState::from_log_potentials(n, 2, values).unwrap();
            let potential = psi(0.75);
            let exact = exact_marginals(&g, &init, &potential).unwrap();
            let damped = run_lbp(&g, &init, &potential, &BpConfig {
                iterations: 60,
                tau: defaults::TAU_FULL_BP,
                damping: 0.7,
            }).unwrap();
            for u in 0..n {
                for k in 0..2 {
                    prop_assert!((damped.log_row(u)[k] - exact.log_row(u)[k]).abs() < 1e-6);
                }
            }
        }
    }
}
