//! C ABI for the `gnb` toolkit.
//!
//! Graphs and datasets cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Every fallible call returns a
//! [`GnbStatus`]; after a failure [`gnb_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use libc::c_char;

use gnb::features::{make_ws1000, make_ws1000_gamma};
use gnb::graph::{bfs, watts_strogatz};
use gnb::io::{load_dataset, save_dataset};
use gnb::train::roc_auc;
use gnb::{Error, Graph, GraphDataset, WsParams};

/// Result codes. Values 2 to 5 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GnbStatus {
    Ok = 0,
    Other = 1,
    Param = 2,
    Format = 3,
    Divergence = 4,
    Io = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque graph handle.
pub struct GnbGraph(Graph);

/// Opaque dataset handle.
pub struct GnbDataset(GraphDataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> GnbStatus {
    match e.exit_code() {
        2 => GnbStatus::Param,
        3 => GnbStatus::Format,
        4 => GnbStatus::Divergence,
        5 => GnbStatus::Io,
        _ => GnbStatus::Other,
    }
}

struct Fail(GnbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), format!("{} error: {e}", e.category()))
    }
}

fn null(what: &str) -> Fail {
    Fail(GnbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GnbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            GnbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GnbStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(GnbStatus::Param, "path is not valid UTF-8".into()))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn gnb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gnb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples a Watts-Strogatz graph.
///
/// # Safety
/// `out` must be a valid pointer to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn gnb_ws_generate(
    n: usize,
    k: usize,
    beta: f64,
    seed: u64,
    out: *mut *mut GnbGraph,
) -> GnbStatus {
    guard(|| {
        let g = watts_strogatz(WsParams { n, k, beta, seed })?;
        store(out, GnbGraph(g))
    })
}

/// Builds a graph from `m` undirected edges `(src[i], dst[i])`.
///
/// # Safety
/// `src` and `dst` must point to `m` readable values each (or be NULL when
/// `m` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_graph_from_edges(
    n: usize,
    src: *const usize,
    dst: *const usize,
    m: usize,
    out: *mut *mut GnbGraph,
) -> GnbStatus {
    guard(|| {
        let edges: Vec<(usize, usize)> = if m == 0 {
            Vec::new()
        } else {
            if src.is_null() || dst.is_null() {
                return Err(null("edge array"));
            }
            let (s, d) = (std::slice::from_raw_parts(src, m), std::slice::from_raw_parts(dst, m));
            s.iter().copied().zip(d.iter().copied()).collect()
        };
        store(out, GnbGraph(Graph::from_edges(n, &edges)?))
    })
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gnb_graph_num_nodes(g: *const GnbGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gnb_graph_num_edges(g: *const GnbGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Copies the sorted edge list (`src < dst`) into caller buffers of
/// capacity `cap`.
///
/// # Safety
/// `g` must be a live handle; `src` and `dst` must hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn gnb_graph_edges(
    g: *const GnbGraph,
    src: *mut usize,
    dst: *mut usize,
    cap: usize,
) -> GnbStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let edges = g.0.edges();
        if cap < edges.len() {
            return Err(Fail(
                GnbStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", edges.len()),
            ));
        }
        if edges.is_empty() {
            return Ok(());
        }
        if src.is_null() || dst.is_null() {
            return Err(null("edge buffer"));
        }
        for (i, &(u, v)) in edges.iter().enumerate() {
            *src.add(i) = u;
            *dst.add(i) = v;
        }
        Ok(())
    })
}

/// BFS hop distances from `root` into `dist` (length `num_nodes`); -1 marks
/// unreachable nodes.
///
/// # Safety
/// `g` must be a live handle; `dist` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn gnb_bfs_distances(
    g: *const GnbGraph,
    root: usize,
    dist: *mut i64,
    len: usize,
) -> GnbStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if len < g.0.num_nodes() {
            return Err(Fail(GnbStatus::BufferTooSmall, format!("need {} slots", g.0.num_nodes())));
        }
        let tree = bfs(&g.0, root)?;
        if dist.is_null() {
            return Err(null("dist"));
        }
        for (i, d) in tree.dist.iter().enumerate() {
            *dist.add(i) = d.map_or(-1, |d| d as i64);
        }
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnb_graph_free(g: *mut GnbGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// The WS1000 dataset with i.i.d. Gaussian features.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_ws1000(
    graph_seed: u64,
    feature_seed: u64,
    out: *mut *mut GnbDataset,
) -> GnbStatus {
    guard(|| store(out, GnbDataset(make_ws1000(graph_seed, feature_seed)?)))
}

/// WS1000 with parental-dependence features of strength `gamma`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_ws1000_gamma(
    graph_seed: u64,
    feature_seed: u64,
    root_seed: u64,
    gamma: f64,
    out: *mut *mut GnbDataset,
) -> GnbStatus {
    guard(|| {
        let ds = make_ws1000_gamma(graph_seed, feature_seed, root_seed, gamma)?;
        store(out, GnbDataset(ds))
    })
}

/// # Safety
/// `dir` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_load(dir: *const c_char, out: *mut *mut GnbDataset) -> GnbStatus {
    guard(|| {
        let dir = path_arg(dir)?;
        store(out, GnbDataset(load_dataset(&dir)?))
    })
}

/// # Safety
/// `ds` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_save(ds: *const GnbDataset, dir: *const c_char) -> GnbStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        save_dataset(&ds.0, &path_arg(dir)?)?;
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_num_nodes(ds: *const GnbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_nodes())
}

/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_feature_dim(ds: *const GnbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.features.cols())
}

/// Copies the row-major feature matrix into `buf` of capacity `cap`.
///
/// # Safety
/// `ds` must be a live handle; `buf` must hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_features(ds: *const GnbDataset, buf: *mut f64, cap: usize) -> GnbStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let data = ds.0.features.data();
        if cap < data.len() {
            return Err(Fail(GnbStatus::BufferTooSmall, format!("need {} slots", data.len())));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// A new graph handle holding a copy of the dataset's graph.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_graph(ds: *const GnbDataset, out: *mut *mut GnbGraph) -> GnbStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        store(out, GnbGraph(ds.0.graph.clone()))
    })
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnb_dataset_free(ds: *mut GnbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// ROC AUC of `scores` against 0/1 `labels` (any nonzero byte is positive).
///
/// # Safety
/// `scores` and `labels` must point to `n` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gnb_roc_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> GnbStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l: Vec<bool> = std::slice::from_raw_parts(labels, n).iter().map(|&b| b != 0).collect();
        *out = roc_auc(s, &l)?;
        Ok(())
    })
}
