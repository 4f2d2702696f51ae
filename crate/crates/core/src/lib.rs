//! Zero- and few-shot node classification on text-attributed graphs.
//!
//! The pipeline combines three ingredients:
//!
//! 1. **Node potentials** from text embeddings: the prior belief for node `i`
//!    is a softmax over cosine similarities between its embedding and one
//!    anchor embedding per class ([`bp::node_potentials`]).
//! 2. **Edge potentials** from a single homophily ratio `r`: neighboring
//!    nodes agree with weight `r` and disagree with weight `1 - r`. The
//!    ratio can be estimated without any labels by asking a chat model
//!    whether sampled endpoint pairs belong to the same class
//!    ([`homophily::estimate_r`]).
//! 3. **Inference** over the resulting pairwise Markov random field: loopy
//!    belief propagation in log space ([`bp::run_lbp`]), a one-shot linear
//!    approximation ([`bp::run_lbp_approx`]), and a brute-force oracle for
//!    small graphs ([`bp::exact_marginals`]).
//!
//! [`eval`] adds metrics, split sampling, a stochastic block model generator
//! for controlled benchmarks, and an experiment driver; [`dataset`] defines
//! the on-disk layout; the `tagbp` binary wires everything into a CLI.
//!
//! Determinism is a design requirement: every random choice flows from an
//! explicit `u64` seed through a counter-based RNG, and all parallel code
//! writes to pre-indexed slots, so results are bit-identical across runs
//! and across worker counts.

pub mod binmat;
pub mod bp;
pub mod config;
pub mod dataset;
pub mod defaults;
pub mod embedding;
pub mod eval;
pub mod graph;
pub mod homophily;
pub mod llm;

pub use bp::{
    exact_marginals, node_potentials, predict, run_lbp, run_lbp_approx, BeliefState, BpConfig,
};
pub use embedding::{cosine, ClassEmbeddings, EmbeddingMatrix};
pub use graph::{GraphMeta, TagGraph};
pub use homophily::{estimate_r, EdgePotential, HomophilyEstimate};
