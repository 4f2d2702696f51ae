//! Graph data model: compressed sparse adjacency, edge-list ingestion,
//! label/text attachment, exact homophily, and seeded edge sampling.
//!
//! Graphs are undirected and simple. Ingestion symmetrizes the input edge
//! list, drops self-loops and duplicate edges, and reports how many of each
//! were removed so that ingest is idempotent: loading a canonical edge list
//! written by [`TagGraph::write_edge_list`] reproduces the same graph.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from graph construction, validation, and sampling.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("node id {id} out of range for {node_count} nodes")]
    NodeOutOfRange { id: usize, node_count: usize },
    #[error("label {label} out of range for {class_count} classes")]
    LabelOutOfRange { label: usize, class_count: usize },
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("graph has no labels attached")]
    MissingLabels,
    #[error("graph has no edges")]
    NoEdges,
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("cannot hold out {requested} edges from a graph with {available}")]
    InsufficientEdges { requested: usize, available: usize },
    #[error(
        "could not sample {requested} non-edge pairs after {attempts} attempts; graph too dense"
    )]
    NegativeSamplingExhausted { requested: usize, attempts: usize },
    #[error("invalid metadata: {0}")]
    Meta(String),
}

/// Dataset-level metadata: node/class counts, class names, and an optional
/// one-line description of what a node's text contains (used verbatim in
/// prompts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub node_count: usize,
    pub class_count: usize,
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_description: Option<String>,
}

impl GraphMeta {
    /// Checks internal consistency: positive counts and one name per class.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.node_count == 0 {
            return Err(GraphError::Meta("node_count must be positive".into()));
        }
        if self.class_count == 0 {
            return Err(GraphError::Meta("class_count must be positive".into()));
        }
        if self.class_names.len() != self.class_count {
            return Err(GraphError::Meta(format!(
                "expected {} class names, got {}",
                self.class_count,
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn read_toml(path: &Path) -> Result<Self, GraphError> {
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let meta: GraphMeta = toml::from_str(&text).map_err(|e| GraphError::Meta(e.to_string()))?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn write_toml(&self, path: &Path) -> Result<(), GraphError> {
        let text = toml::to_string_pretty(self).map_err(|e| GraphError::Meta(e.to_string()))?;
        fs::write(path, text).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// What ingestion removed or kept, for logging and idempotence checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Input rows of the form `i i`.
    pub self_loops_dropped: usize,
    /// Input rows beyond the first mention of an undirected pair (counting
    /// `i j` and `j i` as the same pair).
    pub duplicates_dropped: usize,
    /// Distinct undirected edges kept.
    pub undirected_edges: usize,
}

/// An undirected text-attributed graph in compressed sparse row form.
///
/// Adjacency is stored symmetrically: each undirected edge `{i, j}`
/// contributes a directed entry in both `i`'s and `j`'s neighbor range.
/// Neighbor lists are sorted ascending, which makes iteration order, and
/// everything seeded downstream of it, canonical.
#[derive(Debug, Clone)]
pub struct TagGraph {
    node_count: usize,
    class_count: usize,
    row_ptr: Vec<usize>,
    neighbors: Vec<usize>,
    labels: Option<Vec<usize>>,
    texts: Option<Vec<String>>,
}

/// A seeded sample of undirected edges, endpoints normalized to `i < j`.
#[derive(Debug, Clone)]
pub struct EdgeSample {
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
    pub requested: usize,
}

/// Residual graph plus held-out positive pairs and sampled negative pairs.
pub type HoldOutSplit = (TagGraph, Vec<(usize, usize)>, Vec<(usize, usize)>);

impl TagGraph {
    /// Builds a graph from raw edge rows, symmetrizing and deduplicating.
    ///
    /// Node ids must be `< node_count`; `class_count` is the number of label
    /// classes the graph will carry (labels themselves attach separately).
    pub fn from_edges(
        node_count: usize,
        class_count: usize,
        edges: &[(usize, usize)],
    ) -> Result<(Self, LoadStats), GraphError> {
        let mut stats = LoadStats::default();
        let mut unique: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in edges {
            for id in [a, b] {
                if id >= node_count {
                    return Err(GraphError::NodeOutOfRange { id, node_count });
                }
            }
            if a == b {
                stats.self_loops_dropped += 1;
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if !unique.insert(pair) {
                stats.duplicates_dropped += 1;
            }
        }
        stats.undirected_edges = unique.len();

        let mut degree = vec![0usize; node_count];
        for &(i, j) in &unique {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut row_ptr = vec![0usize; node_count + 1];
        for v in 0..node_count {
            row_ptr[v + 1] = row_ptr[v] + degree[v];
        }
        let mut neighbors = vec![0usize; row_ptr[node_count]];
        let mut cursor = row_ptr.clone();
        // BTreeSet iterates pairs in ascending order, so each neighbor list
        // fills already sorted.
        for &(i, j) in &unique {
            neighbors[cursor[i]] = j;
            cursor[i] += 1;
        }
        for &(i, j) in &unique {
            neighbors[cursor[j]] = i;
            cursor[j] += 1;
        }
        let mut graph = Self {
            node_count,
            class_count,
            row_ptr,
            neighbors,
            labels: None,
            texts: None,
        };
        graph.sort_neighbor_lists();
        Ok((graph, stats))
    }

    fn sort_neighbor_lists(&mut self) {
        for v in 0..self.node_count {
            let (lo, hi) = (self.row_ptr[v], self.row_ptr[v + 1]);
            self.neighbors[lo..hi].sort_unstable();
        }
    }

    /// Attaches one label per node, each `< class_count`.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count {
            return Err(GraphError::LengthMismatch {
                what: "labels",
                expected: self.node_count,
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.class_count) {
            return Err(GraphError::LabelOutOfRange {
                label: bad,
                class_count: self.class_count,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Attaches one text per node.
    pub fn with_texts(mut self, texts: Vec<String>) -> Result<Self, GraphError> {
        if texts.len() != self.node_count {
            return Err(GraphError::LengthMismatch {
                what: "texts",
                expected: self.node_count,
                got: texts.len(),
            });
        }
        self.texts = Some(texts);
        Ok(self)
    }

    /// Drops attached texts, keeping structure and labels.
    pub fn without_texts(mut self) -> Self {
        self.texts = None;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Sorted neighbor ids of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_ptr[v + 1] - self.row_ptr[v]
    }

    /// Number of distinct undirected edges.
    pub fn undirected_edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of directed adjacency entries (twice the undirected count).
    pub fn directed_entry_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Offsets into the directed entry array; entry `e` in
    /// `row_ptr[v]..row_ptr[v+1]` pairs `v` with `neighbors[e]`.
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    /// The far endpoint of directed entry `e`.
    pub fn entry_neighbor(&self, e: usize) -> usize {
        self.neighbors[e]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn texts(&self) -> Option<&[String]> {
        self.texts.as_deref()
    }

    pub fn text(&self, v: usize) -> Option<&str> {
        self.texts.as_ref().map(|t| t[v].as_str())
    }

    /// True if `{i, j}` is an edge. Binary search over the sorted list.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i >= self.node_count || j >= self.node_count {
            return false;
        }
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// All undirected edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.undirected_edge_count());
        for i in 0..self.node_count {
            for &j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Fraction of edges whose endpoints share a label.
    ///
    /// Requires labels on every node and at least one edge.
    pub fn homophily_ratio_exact(&self) -> Result<f64, GraphError> {
        let labels = self.labels.as_ref().ok_or(GraphError::MissingLabels)?;
        let edge_count = self.undirected_edge_count();
        if edge_count == 0 {
            return Err(GraphError::NoEdges);
        }
        let mut same = 0usize;
        for i in 0..self.node_count {
            for &j in self.neighbors(i) {
                if i < j && labels[i] == labels[j] {
                    same += 1;
                }
            }
        }
        Ok(same as f64 / edge_count as f64)
    }

    /// Samples `min(t, |E|)` distinct undirected edges without replacement.
    ///
    /// When `t >= |E|` every edge is returned in canonical ascending order;
    /// otherwise a counter-based RNG seeded with `seed` picks edge indices,
    /// so the sample depends only on `(graph, t, seed)`.
    pub fn sample_edges(&self, t: usize, seed: u64) -> Result<EdgeSample, GraphError> {
        if t == 0 {
            return Err(GraphError::EmptySample);
        }
        let all = self.edges();
        if all.is_empty() {
            return Err(GraphError::NoEdges);
        }
        let pairs = if t >= all.len() {
            all
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, all.len(), t).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|k| all[k]).collect()
        };
        Ok(EdgeSample {
            pairs,
            seed,
            requested: t,
        })
    }

    /// Removes `m` random edges and pairs them with `m` random non-edges.
    ///
    /// Returns the residual graph (labels/texts carried over) plus the
    /// held-out positive pairs and the sampled negative pairs, both with
    /// endpoints normalized to `i < j`. Negatives are distinct, are not
    /// edges of the *original* graph, and avoid self-pairs. Used to build
    /// link prediction benchmarks.
    pub fn hold_out_edges(&self, m: usize, seed: u64) -> Result<HoldOutSplit, GraphError> {
        let all = self.edges();
        if m > all.len() {
            return Err(GraphError::InsufficientEdges {
                requested: m,
                available: all.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut held_idx: Vec<usize> = rand::seq::index::sample(&mut rng, all.len(), m).into_vec();
        held_idx.sort_unstable();
        let held: Vec<(usize, usize)> = held_idx.iter().map(|&k| all[k]).collect();

        let held_set: BTreeSet<(usize, usize)> = held.iter().copied().collect();
        let remaining: Vec<(usize, usize)> = all
            .iter()
            .copied()
            .filter(|e| !held_set.contains(e))
            .collect();

        let mut negatives = Vec::with_capacity(m);
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut attempts = 0usize;
        let attempt_cap = 1000 + 200 * m;
        while negatives.len() < m {
            attempts += 1;
            if attempts > attempt_cap {
                return Err(GraphError::NegativeSamplingExhausted {
                    requested: m,
                    attempts,
                });
            }
            let a = rng.random_range(0..self.node_count);
            let b = rng.random_range(0..self.node_count);
            if a == b {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if self.has_edge(pair.0, pair.1) || !seen.insert(pair) {
                continue;
            }
            negatives.push(pair);
        }

        let (mut residual, _) = Self::from_edges(self.node_count, self.class_count, &remaining)?;
        residual.labels = self.labels.clone();
        residual.texts = self.texts.clone();
        Ok((residual, held, negatives))
    }

    /// Writes the canonical edge list: one `i j` row per undirected edge,
    /// `i < j`, ascending. Re-ingesting this file reproduces the graph.
    pub fn write_edge_list(&self, path: &Path) -> Result<(), GraphError> {
        let file = fs::File::create(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}").map_err(|source| GraphError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        w.flush().map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Parses a whitespace-separated edge list: one `i j` pair per line, `#`
/// comments and blank lines skipped. Errors carry 1-based line numbers.
pub fn parse_edge_list(text: &str, path: &str) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(GraphError::Parse {
                    path: path.into(),
                    line,
                    message: format!("expected exactly two node ids, got {trimmed:?}"),
                })
            }
        };
        let parse = |s: &str| -> Result<usize, GraphError> {
            s.parse().map_err(|_| GraphError::Parse {
                path: path.into(),
                line,
                message: format!("invalid node id {s:?}"),
            })
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

/// Reads an edge-list file and builds the graph described by `meta`.
pub fn load_graph(edge_path: &Path, meta: &GraphMeta) -> Result<(TagGraph, LoadStats), GraphError> {
    meta.validate()?;
    let text = fs::read_to_string(edge_path).map_err(|source| GraphError::Io {
        path: edge_path.display().to_string(),
        source,
    })?;
    let edges = parse_edge_list(&text, &edge_path.display().to_string())?;
    TagGraph::from_edges(meta.node_count, meta.class_count, &edges)
}

/// Parses a labels file: one class id per line, 1-based line numbers in
/// errors. Length and range are validated on attach.
pub fn parse_labels(text: &str, path: &str) -> Result<Vec<usize>, GraphError> {
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        labels.push(trimmed.parse().map_err(|_| GraphError::Parse {
            path: path.into(),
            line: idx + 1,
            message: format!("invalid label {trimmed:?}"),
        })?);
    }
    Ok(labels)
}
