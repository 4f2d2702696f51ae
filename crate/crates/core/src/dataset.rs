//! Dataset directory layout: a graph plus its optional attachments
//! (labels, texts, embeddings, class anchors) as plain files that diff
//! tools and other languages can read.
//!
//! ```text
//! dataset/
//!   meta.toml        node/class counts, class names, task description
//!   graph.edges      canonical undirected edge list, "i j" per line
//!   labels.txt       one class id per node (optional)
//!   texts.jsonl      one JSON-encoded string per node (optional)
//!   embeddings.bin   node embedding matrix (optional)
//!   anchors.bin      class anchor matrix (optional)
//!   anchors.json     anchor provenance sidecar (with anchors.bin)
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binmat::BinMatError;
use crate::embedding::{AnchorProvenance, ClassEmbeddings, EmbeddingError, EmbeddingMatrix};
use crate::eval::SyntheticInstance;
use crate::graph::{load_graph, parse_labels, GraphError, GraphMeta, TagGraph};

pub const META_FILE: &str = "meta.toml";
pub const EDGES_FILE: &str = "graph.edges";
pub const LABELS_FILE: &str = "labels.txt";
pub const TEXTS_FILE: &str = "texts.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";
pub const ANCHORS_FILE: &str = "anchors.bin";
pub const ANCHORS_SIDECAR_FILE: &str = "anchors.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Texts {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("dataset is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matrix(#[from] BinMatError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Everything a dataset directory can hold, with optional parts as `None`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: GraphMeta,
    /// Graph with labels/texts attached when their files are present.
    pub graph: TagGraph,
    pub embeddings: Option<EmbeddingMatrix>,
    pub anchors: Option<ClassEmbeddings>,
}

#[derive(Serialize, Deserialize)]
struct AnchorSidecar {
    provenance: AnchorProvenance,
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a JSONL text file: one JSON-encoded string per line.
pub fn read_texts_jsonl(path: &Path) -> Result<Vec<String>, DatasetError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut texts = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let text: String = serde_json::from_str(&line).map_err(|e| DatasetError::Texts {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        texts.push(text);
    }
    Ok(texts)
}

/// Writes a JSONL text file: one JSON-encoded string per line.
pub fn write_texts_jsonl(path: &Path, texts: &[String]) -> Result<(), DatasetError> {
    let mut out = fs::File::create(path).map_err(|e| io_err(path, e))?;
    for text in texts {
        // to_string on a &str cannot fail.
        let encoded = serde_json::to_string(text).expect("string serialization");
        writeln!(out, "{encoded}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Loads a dataset directory, attaching whichever optional files exist.
pub fn load_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let meta = GraphMeta::read_toml(&dir.join(META_FILE))?;
    let (mut graph, _) = load_graph(&dir.join(EDGES_FILE), &meta)?;

    let labels_path = dir.join(LABELS_FILE);
    if labels_path.exists() {
        let raw = fs::read_to_string(&labels_path).map_err(|e| io_err(&labels_path, e))?;
        let labels = parse_labels(&raw, &labels_path.display().to_string())?;
        graph = graph.with_labels(labels)?;
    }
    let texts_path = dir.join(TEXTS_FILE);
    if texts_path.exists() {
        graph = graph.with_texts(read_texts_jsonl(&texts_path)?)?;
    }

    let embeddings_path = dir.join(EMBEDDINGS_FILE);
    let embeddings = if embeddings_path.exists() {
        let emb = EmbeddingMatrix::read_from(&embeddings_path)?;
        if emb.rows() != meta.node_count {
            return Err(DatasetError::Inconsistent(format!(
                "embeddings have {} rows but the graph has {} nodes",
                emb.rows(),
                meta.node_count
            )));
        }
        Some(emb)
    } else {
        None
    };

    let anchors_path = dir.join(ANCHORS_FILE);
    let anchors = if anchors_path.exists() {
        let sidecar_path = dir.join(ANCHORS_SIDECAR_FILE);
        let provenance = if sidecar_path.exists() {
            let raw = fs::read_to_string(&sidecar_path).map_err(|e| io_err(&sidecar_path, e))?;
            serde_json::from_str::<AnchorSidecar>(&raw)
                .map_err(|e| DatasetError::Texts {
                    path: sidecar_path.clone(),
                    line: 1,
                    message: e.to_string(),
                })?
                .provenance
        } else {
            AnchorProvenance::External
        };
        let anchors = ClassEmbeddings::read_from(&anchors_path, provenance)?;
        if anchors.class_count() != meta.class_count {
            return Err(DatasetError::Inconsistent(format!(
                "anchors cover {} classes but the graph has {}",
                anchors.class_count(),
                meta.class_count
            )));
        }
        if let Some(emb) = &embeddings {
            if anchors.dim() != emb.dim() {
                return Err(DatasetError::Inconsistent(format!(
                    "anchor dim {} does not match embedding dim {}",
                    anchors.dim(),
                    emb.dim()
                )));
            }
        }
        Some(anchors)
    } else {
        None
    };

    Ok(Dataset {
        meta,
        graph,
        embeddings,
        anchors,
    })
}

/// Writes a dataset directory, creating it if needed. Optional parts that
/// are `None` are not written (existing files are left untouched).
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    dataset.meta.write_toml(&dir.join(META_FILE))?;
    dataset.graph.write_edge_list(&dir.join(EDGES_FILE))?;

    if let Some(labels) = dataset.graph.labels() {
        let path = dir.join(LABELS_FILE);
        let mut body = String::with_capacity(labels.len() * 3);
        for &label in labels {
            body.push_str(&label.to_string());
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }
    if let Some(texts) = dataset.graph.texts() {
        write_texts_jsonl(&dir.join(TEXTS_FILE), texts)?;
    }
    if let Some(emb) = &dataset.embeddings {
        emb.write_to(&dir.join(EMBEDDINGS_FILE))?;
    }
    if let Some(anchors) = &dataset.anchors {
        anchors.write_to(&dir.join(ANCHORS_FILE))?;
        let sidecar = AnchorSidecar {
            provenance: anchors.provenance(),
        };
        let path = dir.join(ANCHORS_SIDECAR_FILE);
        let body = serde_json::to_string_pretty(&sidecar).expect("sidecar serialization");
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

impl From<SyntheticInstance> for Dataset {
    fn from(instance: SyntheticInstance) -> Self {
        Dataset {
            meta: instance.meta,
            graph: instance.graph,
            embeddings: Some(instance.embeddings),
            anchors: Some(instance.centroids),
        }
    }
}
