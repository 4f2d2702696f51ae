//! Embedding storage and the vector math behind node potentials: row
//! normalization, cosine similarity, class-anchor construction for the
//! zero- and few-shot settings, neighborhood feature aggregation, and the
//! cosine link score.
//!
//! Class anchors ("class embeddings") are one vector per class that node
//! embeddings are compared against. In the few-shot setting they are means
//! of the labeled shots; in the zero-shot setting they are built from
//! LLM-labeled sample nodes by keeping, per class, the `k_top` members
//! closest to the preliminary class mean and averaging those.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binmat::{self, BinMatError};
use crate::graph::TagGraph;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error(transparent)]
    File(#[from] BinMatError),
    #[error("row {row} out of range for {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("row count {rows} does not match graph with {nodes} nodes")]
    RowCountMismatch { rows: usize, nodes: usize },
    #[error("zero-norm vector at row {row}; cosine is undefined")]
    ZeroNorm { row: usize },
    #[error("class {class} has no member nodes to build an anchor from")]
    EmptyClass { class: usize },
    #[error("class {class} anchor degenerated to the zero vector")]
    DegenerateAnchor { class: usize },
    #[error("label {label} out of range for {class_count} classes")]
    LabelOutOfRange { label: usize, class_count: usize },
    #[error("expected {expected} labels for {expected} sampled nodes, got {got}")]
    LabelCountMismatch { expected: usize, got: usize },
    #[error("k_top must be at least 1")]
    ZeroKTop,
    #[error("aggregation over zero layers requires none; got layers={0} with no edges used")]
    Aggregation(usize),
}

/// Cosine similarity of two equal-length vectors, clamped to `[-1, 1]`.
///
/// Errors on a zero-norm input (`row` in the error is 0 for `u`, 1 for `v`).
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 {
        return Err(EmbeddingError::ZeroNorm { row: 0 });
    }
    if nv == 0.0 {
        return Err(EmbeddingError::ZeroNorm { row: 1 });
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// A dense row-major matrix of node embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Wraps a row-major buffer; `values.len()` must equal `rows * dim`.
    pub fn from_values(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.len() != rows * dim {
            return Err(BinMatError::ShapeMismatch {
                rows,
                cols: dim,
                len: values.len(),
            }
            .into());
        }
        Ok(Self { rows, dim, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Returns a copy with every row scaled to unit L2 norm.
    ///
    /// Zero rows cannot be normalized and yield [`EmbeddingError::ZeroNorm`]
    /// naming the row.
    pub fn normalize_rows(&self) -> Result<Self, EmbeddingError> {
        let mut values = self.values.clone();
        for i in 0..self.rows {
            let row = &mut values[i * self.dim..(i + 1) * self.dim];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(EmbeddingError::ZeroNorm { row: i });
            }
            for v in row {
                *v /= norm;
            }
        }
        Ok(Self {
            rows: self.rows,
            dim: self.dim,
            values,
        })
    }

    /// Cosine similarity between rows `i` and `j`.
    pub fn row_cosine(&self, i: usize, j: usize) -> Result<f64, EmbeddingError> {
        for row in [i, j] {
            if row >= self.rows {
                return Err(EmbeddingError::RowOutOfRange {
                    row,
                    rows: self.rows,
                });
            }
        }
        cosine(self.row(i), self.row(j)).map_err(|e| match e {
            EmbeddingError::ZeroNorm { row } => EmbeddingError::ZeroNorm {
                row: if row == 0 { i } else { j },
            },
            other => other,
        })
    }

    pub fn read_from(path: &Path) -> Result<Self, EmbeddingError> {
        let (rows, dim, values) = binmat::read_matrix(path)?;
        Ok(Self { rows, dim, values })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), EmbeddingError> {
        binmat::write_matrix(path, self.rows, self.dim, &self.values)?;
        Ok(())
    }
}

/// How a set of class anchors was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorProvenance {
    /// Built from LLM-labeled sample nodes (no ground-truth labels used).
    ZeroShotClustered,
    /// Averaged from ground-truth labeled shots.
    FewShotAveraged,
    /// Supplied externally (e.g. encoded class names, or synthetic centroids).
    External,
}

/// One anchor vector per class, plus how the anchors were derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEmbeddings {
    class_count: usize,
    dim: usize,
    values: Vec<f64>,
    provenance: AnchorProvenance,
}

impl ClassEmbeddings {
    pub fn from_values(
        class_count: usize,
        dim: usize,
        values: Vec<f64>,
        provenance: AnchorProvenance,
    ) -> Result<Self, EmbeddingError> {
        if values.len() != class_count * dim {
            return Err(BinMatError::ShapeMismatch {
                rows: class_count,
                cols: dim,
                len: values.len(),
            }
            .into());
        }
        Ok(Self {
            class_count,
            dim,
            values,
            provenance,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self, class: usize) -> &[f64] {
        &self.values[class * self.dim..(class + 1) * self.dim]
    }

    pub fn provenance(&self) -> AnchorProvenance {
        self.provenance
    }

    pub fn read_from(path: &Path, provenance: AnchorProvenance) -> Result<Self, EmbeddingError> {
        let (class_count, dim, values) = binmat::read_matrix(path)?;
        Ok(Self {
            class_count,
            dim,
            values,
            provenance,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), EmbeddingError> {
        binmat::write_matrix(path, self.class_count, self.dim, &self.values)?;
        Ok(())
    }
}

/// Mean of the given rows, averaged in ascending row order so the result is
/// independent of the caller's ordering.
fn mean_of_rows(emb: &EmbeddingMatrix, rows: &mut Vec<usize>) -> Vec<f64> {
    rows.sort_unstable();
    rows.dedup();
    let mut mean = vec![0.0; emb.dim()];
    for &r in rows.iter() {
        for (m, v) in mean.iter_mut().zip(emb.row(r)) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Builds class anchors from LLM-labeled sample nodes.
///
/// For each class: collect the sampled nodes the LLM assigned to it, take
/// their mean embedding as a preliminary center, keep the `k_top` members
/// most similar to that center (ties broken toward the lower node id), and
/// average the kept members. Classes with no members yield
/// [`EmbeddingError::EmptyClass`] so the caller can resample or fall back.
pub fn zero_shot_class_embeddings(
    emb: &EmbeddingMatrix,
    sampled_nodes: &[usize],
    llm_labels: &[usize],
    class_count: usize,
    k_top: usize,
) -> Result<ClassEmbeddings, EmbeddingError> {
    if k_top == 0 {
        return Err(EmbeddingError::ZeroKTop);
    }
    if sampled_nodes.len() != llm_labels.len() {
        return Err(EmbeddingError::LabelCountMismatch {
            expected: sampled_nodes.len(),
            got: llm_labels.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (&node, &label) in sampled_nodes.iter().zip(llm_labels) {
        if node >= emb.rows() {
            return Err(EmbeddingError::RowOutOfRange {
                row: node,
                rows: emb.rows(),
            });
        }
        if label >= class_count {
            return Err(EmbeddingError::LabelOutOfRange { label, class_count });
        }
        members[label].push(node);
    }
    let mut values = Vec::with_capacity(class_count * emb.dim());
    for (class, mut nodes) in members.into_iter().enumerate() {
        if nodes.is_empty() {
            return Err(EmbeddingError::EmptyClass { class });
        }
        let center = mean_of_rows(emb, &mut nodes);
        if center.iter().all(|&v| v == 0.0) {
            return Err(EmbeddingError::DegenerateAnchor { class });
        }
        let mut scored: Vec<(usize, f64)> = nodes
            .iter()
            .map(|&n| Ok((n, cosine(emb.row(n), &center)?)))
            .collect::<Result<_, EmbeddingError>>()
            .map_err(|e| match e {
                // A zero member row; report the class for context.
                EmbeddingError::ZeroNorm { .. } => EmbeddingError::DegenerateAnchor { class },
                other => other,
            })?;
        // Highest similarity first; equal similarities keep ascending id.
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let keep = k_top.min(scored.len());
        let mut kept: Vec<usize> = scored[..keep].iter().map(|&(n, _)| n).collect();
        values.extend(mean_of_rows(emb, &mut kept));
    }
    ClassEmbeddings::from_values(
        class_count,
        emb.dim(),
        values,
        AnchorProvenance::ZeroShotClustered,
    )
}

/// Builds class anchors by averaging ground-truth labeled shots per class.
///
/// `shots` pairs node ids with labels; every class in `0..class_count` must
/// appear at least once.
pub fn few_shot_class_embeddings(
    emb: &EmbeddingMatrix,
    shots: &[(usize, usize)],
    class_count: usize,
) -> Result<ClassEmbeddings, EmbeddingError> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for &(node, label) in shots {
        if node >= emb.rows() {
            return Err(EmbeddingError::RowOutOfRange {
                row: node,
                rows: emb.rows(),
            });
        }
        if label >= class_count {
            return Err(EmbeddingError::LabelOutOfRange { label, class_count });
        }
        members[label].push(node);
    }
    let mut values = Vec::with_capacity(class_count * emb.dim());
    for (class, mut nodes) in members.into_iter().enumerate() {
        if nodes.is_empty() {
            return Err(EmbeddingError::EmptyClass { class });
        }
        values.extend(mean_of_rows(emb, &mut nodes));
    }
    ClassEmbeddings::from_values(
        class_count,
        emb.dim(),
        values,
        AnchorProvenance::FewShotAveraged,
    )
}

/// Smooths embeddings over the graph: each layer replaces every row with the
/// mean of itself and its neighbors. `layers = 0` returns the input copy.
///
/// Isolated nodes keep their own embedding. The output is *not*
/// re-normalized; callers relying on cosine similarity are unaffected by
/// the resulting scale, and callers that need unit rows can call
/// [`EmbeddingMatrix::normalize_rows`].
pub fn neighborhood_aggregate(
    graph: &TagGraph,
    emb: &EmbeddingMatrix,
    layers: usize,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    if emb.rows() != graph.node_count() {
        return Err(EmbeddingError::RowCountMismatch {
            rows: emb.rows(),
            nodes: graph.node_count(),
        });
    }
    let dim = emb.dim();
    let mut current = emb.values().to_vec();
    for _ in 0..layers {
        let prev = &current;
        let mut next = vec![0.0; prev.len()];
        // Per-node output slots: deterministic under any worker count.
        next.par_chunks_mut(dim).enumerate().for_each(|(v, out)| {
            out.copy_from_slice(&prev[v * dim..(v + 1) * dim]);
            for &u in graph.neighbors(v) {
                for (o, x) in out.iter_mut().zip(&prev[u * dim..(u + 1) * dim]) {
                    *o += x;
                }
            }
            let scale = 1.0 / (1 + graph.degree(v)) as f64;
            for o in out.iter_mut() {
                *o *= scale;
            }
        });
        current = next;
    }
    EmbeddingMatrix::from_values(emb.rows(), dim, current)
}

/// Link score for a node pair: cosine similarity of their embeddings.
pub fn link_score(emb: &EmbeddingMatrix, i: usize, j: usize) -> Result<f64, EmbeddingError> {
    emb.row_cosine(i, j)
}
