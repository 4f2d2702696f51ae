//! C ABI over the tagbp inference engine.
//!
//! Callers build an opaque [`TagbpTask`] from an edge list, attach node
//! embeddings and class anchors, and run one of the inference methods to
//! get per-node log-beliefs and argmax predictions. Every function
//! returns a [`TagbpStatus`]; on any non-`Ok` status a thread-local
//! message describing the failure is available from
//! [`tagbp_last_error_message`] until the next failing call on the same
//! thread. All entry points catch panics, so no Rust unwind ever crosses
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tagbp::bp::{self, BpConfig};
use tagbp::defaults;
use tagbp::embedding::{
    neighborhood_aggregate, AnchorProvenance, ClassEmbeddings, EmbeddingMatrix,
};
use tagbp::graph::TagGraph;
use tagbp::homophily::EdgePotential;

/// Result code of every C entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagbpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were readable but inconsistent (bad counts, bad ranges).
    InvalidArgument = 2,
    /// The edge list or labels violate graph constraints.
    Graph = 3,
    /// Inference failed (missing embeddings/anchors, numeric failure).
    Inference = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Inference method selector for [`tagbp_task_infer`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagbpMethod {
    /// Softmax over anchor cosines, no structure.
    Raw = 0,
    /// Same potentials on neighborhood-averaged embeddings.
    Na = 1,
    /// Full loopy belief propagation.
    Bp = 2,
    /// One-shot linearized propagation.
    BpApprox = 3,
}

/// Opaque inference task: a graph plus optional embeddings, anchors and
/// labels. Create with [`tagbp_task_new`], destroy with
/// [`tagbp_task_free`].
pub struct TagbpTask {
    graph: TagGraph,
    embeddings: Option<EmbeddingMatrix>,
    anchors: Option<ClassEmbeddings>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: TagbpStatus, message: impl Into<String>) -> TagbpStatus {
    let message = CString::new(message.into().replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
    status
}

/// Runs a body with panics converted to [`TagbpStatus::Panic`].
fn guarded(body: impl FnOnce() -> TagbpStatus) -> TagbpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic without message".to_string());
            fail(TagbpStatus::Panic, format!("internal panic: {text}"))
        }
    }
}

/// Version of the underlying engine as a static NUL-terminated string.
/// The pointer is valid for the lifetime of the process; do not free it.
#[no_mangle]
pub extern "C" fn tagbp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on the calling thread, or null if
/// no failure has been recorded. The pointer stays valid until the next
/// failing tagbp call on this thread; do not free it.
#[no_mangle]
pub extern "C" fn tagbp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Builds a task over an undirected graph.
///
/// `edge_endpoints` holds `2 * edge_count` node ids as (a, b) pairs;
/// self-loops and duplicate pairs are dropped. On success writes the new
/// handle to `out_task` and returns `Ok`.
///
/// # Safety
/// `edge_endpoints` must point to `2 * edge_count` readable `uint64_t`
/// values (it may be null only when `edge_count` is 0), and `out_task`
/// must be a valid location to write one pointer.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_new(
    node_count: u64,
    class_count: u64,
    edge_endpoints: *const u64,
    edge_count: u64,
    out_task: *mut *mut TagbpTask,
) -> TagbpStatus {
    guarded(|| {
        if out_task.is_null() || (edge_endpoints.is_null() && edge_count > 0) {
            return fail(TagbpStatus::NullArgument, "null pointer argument");
        }
        let raw = if edge_count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(edge_endpoints, 2 * edge_count as usize)
        };
        let edges: Vec<(usize, usize)> = raw
            .chunks_exact(2)
            .map(|pair| (pair[0] as usize, pair[1] as usize))
            .collect();
        match TagGraph::from_edges(node_count as usize, class_count as usize, &edges) {
            Ok((graph, _stats)) => {
                let task = Box::new(TagbpTask {
                    graph,
                    embeddings: None,
                    anchors: None,
                });
                *out_task = Box::into_raw(task);
                TagbpStatus::Ok
            }
            Err(err) => fail(TagbpStatus::Graph, err.to_string()),
        }
    })
}

/// Attaches row-major node embeddings (`rows` × `dim`, one row per node).
///
/// # Safety
/// `task` must be a live handle from [`tagbp_task_new`] and `values`
/// must point to `rows * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_set_embeddings(
    task: *mut TagbpTask,
    rows: u64,
    dim: u64,
    values: *const f64,
) -> TagbpStatus {
    guarded(|| {
        if task.is_null() || values.is_null() {
            return fail(TagbpStatus::NullArgument, "null pointer argument");
        }
        let task = &mut *task;
        if rows as usize != task.graph.node_count() {
            return fail(
                TagbpStatus::InvalidArgument,
                format!(
                    "embedding rows {rows} != node count {}",
                    task.graph.node_count()
                ),
            );
        }
        let data = std::slice::from_raw_parts(values, (rows * dim) as usize).to_vec();
        match EmbeddingMatrix::from_values(rows as usize, dim as usize, data) {
            Ok(matrix) => {
                task.embeddings = Some(matrix);
                TagbpStatus::Ok
            }
            Err(err) => fail(TagbpStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Attaches row-major class anchors (`classes` × `dim`); `classes` must
/// equal the task's class count and `dim` the embedding dimension.
///
/// # Safety
/// `task` must be a live handle and `values` must point to
/// `classes * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_set_anchors(
    task: *mut TagbpTask,
    classes: u64,
    dim: u64,
    values: *const f64,
) -> TagbpStatus {
    guarded(|| {
        if task.is_null() || values.is_null() {
            return fail(TagbpStatus::NullArgument, "null pointer argument");
        }
        let task = &mut *task;
        if classes as usize != task.graph.class_count() {
            return fail(
                TagbpStatus::InvalidArgument,
                format!(
                    "anchor rows {classes} != class count {}",
                    task.graph.class_count()
                ),
            );
        }
        let data = std::slice::from_raw_parts(values, (classes * dim) as usize).to_vec();
        match ClassEmbeddings::from_values(
            classes as usize,
            dim as usize,
            data,
            AnchorProvenance::External,
        ) {
            Ok(anchors) => {
                task.anchors = Some(anchors);
                TagbpStatus::Ok
            }
            Err(err) => fail(TagbpStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Attaches one ground-truth label per node (each `< class_count`),
/// enabling [`tagbp_task_exact_homophily`].
///
/// # Safety
/// `task` must be a live handle and `labels` must point to `len`
/// readable `uint64_t` values.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_set_labels(
    task: *mut TagbpTask,
    labels: *const u64,
    len: u64,
) -> TagbpStatus {
    guarded(|| {
        if task.is_null() || labels.is_null() {
            return fail(TagbpStatus::NullArgument, "null pointer argument");
        }
        let task = &mut *task;
        let n = task.graph.node_count();
        let c = task.graph.class_count();
        if len as usize != n {
            return fail(
                TagbpStatus::InvalidArgument,
                format!("label count {len} != node count {n}"),
            );
        }
        let values: Vec<usize> = std::slice::from_raw_parts(labels, len as usize)
            .iter()
            .map(|&l| l as usize)
            .collect();
        if let Some(&bad) = values.iter().find(|&&l| l >= c) {
            return fail(
                TagbpStatus::InvalidArgument,
                format!("label {bad} out of range for {c} classes"),
            );
        }
        // Validated above, so reattaching cannot fail and the graph is
        // never lost to a consumed `self`.
        let graph = std::mem::replace(&mut task.graph, empty_graph());
        task.graph = graph.with_labels(values).expect("labels pre-validated");
        TagbpStatus::Ok
    })
}

fn empty_graph() -> TagGraph {
    TagGraph::from_edges(1, 1, &[]).expect("one-node graph").0
}

/// Fraction of edges whose endpoints share a label. Requires labels.
///
/// # Safety
/// `task` must be a live handle and `out_ratio` a valid location for one
/// double.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_exact_homophily(
    task: *const TagbpTask,
    out_ratio: *mut f64,
) -> TagbpStatus {
    guarded(|| {
        if task.is_null() || out_ratio.is_null() {
            return fail(TagbpStatus::NullArgument, "null pointer argument");
        }
        match (*task).graph.homophily_ratio_exact() {
            Ok(ratio) => {
                *out_ratio = ratio;
                TagbpStatus::Ok
            }
            Err(err) => fail(TagbpStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Runs inference and writes the results.
///
/// `homophily_ratio` parameterizes the edge potential for `BP` and
/// `BP_APPROX` (ignored by `RAW` and `NA`). Zero `tau`, `iterations`,
/// `damping` or `aggregation_layers` select the method defaults (τ 0.025
/// for full propagation and 0.01 for the approximation, 5 rounds,
/// no damping, 1 aggregation layer). `out_log_beliefs` (length
/// `node_count * class_count`, row-major) and `out_predictions` (length
/// `node_count`) may each be null when not wanted.
///
/// # Safety
/// `task` must be a live handle with embeddings and anchors attached;
/// each non-null output pointer must reference writable memory of the
/// length documented above.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_infer(
    task: *const TagbpTask,
    method: TagbpMethod,
    homophily_ratio: f64,
    tau: f64,
    iterations: u64,
    damping: f64,
    aggregation_layers: u64,
    out_log_beliefs: *mut f64,
    out_predictions: *mut u64,
) -> TagbpStatus {
    guarded(|| {
        if task.is_null() {
            return fail(TagbpStatus::NullArgument, "null task");
        }
        let task = &*task;
        let (Some(embeddings), Some(anchors)) = (&task.embeddings, &task.anchors) else {
            return fail(
                TagbpStatus::Inference,
                "embeddings and anchors must be attached before inference",
            );
        };
        let tau = if tau > 0.0 {
            tau
        } else if matches!(method, TagbpMethod::BpApprox) {
            defaults::TAU_LINEAR_APPROX
        } else {
            defaults::TAU_FULL_BP
        };
        let beliefs = match method {
            TagbpMethod::Raw => bp::node_potentials(embeddings, anchors, tau),
            TagbpMethod::Na => {
                let layers = if aggregation_layers == 0 {
                    defaults::NA_LAYERS
                } else {
                    aggregation_layers as usize
                };
                match neighborhood_aggregate(&task.graph, embeddings, layers) {
                    Ok(smoothed) => bp::node_potentials(&smoothed, anchors, tau),
                    Err(err) => return fail(TagbpStatus::Inference, err.to_string()),
                }
            }
            TagbpMethod::Bp => {
                let psi = match EdgePotential::from_r(homophily_ratio, defaults::EPSILON_CLAMP) {
                    Ok(psi) => psi,
                    Err(err) => return fail(TagbpStatus::InvalidArgument, err.to_string()),
                };
                let config = BpConfig {
                    iterations: if iterations == 0 {
                        defaults::BP_ITERATIONS
                    } else {
                        iterations as usize
                    },
                    tau,
                    damping: if damping == 0.0 { 1.0 } else { damping },
                };
                bp::node_potentials(embeddings, anchors, tau)
                    .and_then(|init| bp::run_lbp(&task.graph, &init, &psi, &config))
            }
            TagbpMethod::BpApprox => bp::node_potentials(embeddings, anchors, tau)
                .and_then(|init| bp::run_lbp_approx(&task.graph, &init, homophily_ratio)),
        };
        let beliefs = match beliefs {
            Ok(beliefs) => beliefs,
            Err(err) => return fail(TagbpStatus::Inference, err.to_string()),
        };
        if !out_log_beliefs.is_null() {
            let values = beliefs.values();
            std::ptr::copy_nonoverlapping(values.as_ptr(), out_log_beliefs, values.len());
        }
        if !out_predictions.is_null() {
            for (node, label) in bp::predict(&beliefs).into_iter().enumerate() {
                *out_predictions.add(node) = label as u64;
            }
        }
        TagbpStatus::Ok
    })
}

/// Destroys a task handle. Null is ignored; a handle must not be used
/// after this call.
///
/// # Safety
/// `task` must be null or a handle from [`tagbp_task_new`] that has not
/// already been freed.
#[no_mangle]
pub unsafe extern "C" fn tagbp_task_free(task: *mut TagbpTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}
