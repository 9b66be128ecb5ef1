//! C ABI for the cavtree pipeline.
//!
//! Every object crosses the boundary as an opaque handle; constructors return
//! null on failure and store a message retrievable with
//! [`cavtree_last_error`]. Strings returned by `*_to_json` / `*_to_dot` are
//! owned by the caller and must be released with [`cavtree_string_free`].
//!
//! The generated header lands in `include/cavtree.h` at build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::path::PathBuf;

use cavtree::cav::{self, ConceptVector};
use cavtree::corpus::{split_catalog, ConceptCatalog, EmbeddingStore};
use cavtree::hierarchy::{extract_hierarchy, tree_to_dot, Hierarchy, TreeFile};
use cavtree::pipeline::{self, PipelineConfig};
use cavtree::simgraph::{similarity_matrix, undirected_adjacency, SimilarityMatrix};

/// Status codes for fallible calls that do not return a handle.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CavtreeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    MissingInput = 3,
    ValidationFailed = 4,
    RuntimeError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let cstring = CString::new(message).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message of the most recent failure on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cavtree_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, CavtreeStatus> {
    if path.is_null() {
        set_error("null path");
        return Err(CavtreeStatus::NullArgument);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(CavtreeStatus::InvalidUtf8)
        }
    }
}

fn to_owned_c_string(text: String) -> *mut c_char {
    match CString::new(text) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_error("output contains an interior NUL byte");
            std::ptr::null_mut()
        }
    }
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cavtree_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

pub struct CavtreeStore {
    inner: EmbeddingStore,
}

pub struct CavtreeCatalog {
    inner: ConceptCatalog,
}

pub struct CavtreeCavs {
    all: Vec<ConceptVector>,
    kept: Vec<ConceptVector>,
    dim: usize,
    accuracy_threshold: f64,
}

pub struct CavtreeSimilarity {
    inner: SimilarityMatrix,
}

pub struct CavtreeTree {
    inner: Hierarchy,
}

/// Load an embeddings CSV (header `id,v0,...`); null on failure.
#[no_mangle]
pub unsafe extern "C" fn cavtree_store_load(path: *const c_char) -> *mut CavtreeStore {
    let Ok(path) = path_arg(path) else {
        return std::ptr::null_mut();
    };
    match EmbeddingStore::load_csv(&path) {
        Ok(inner) => {
            clear_error();
            Box::into_raw(Box::new(CavtreeStore { inner }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_store_free(store: *mut CavtreeStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Embedding dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cavtree_store_dim(store: *const CavtreeStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.dim())
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_store_len(store: *const CavtreeStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

/// Load a concepts JSONL file against a store; example ids that do not
/// resolve are dropped, concepts left with fewer than `min_examples` ids are
/// rejected.
#[no_mangle]
pub unsafe extern "C" fn cavtree_catalog_load(
    path: *const c_char,
    store: *const CavtreeStore,
    min_examples: usize,
) -> *mut CavtreeCatalog {
    let Ok(path) = path_arg(path) else {
        return std::ptr::null_mut();
    };
    let Some(store) = store.as_ref() else {
        set_error("null store");
        return std::ptr::null_mut();
    };
    match ConceptCatalog::load_jsonl(&path, &store.inner, min_examples) {
        Ok((inner, _report)) => {
            clear_error();
            Box::into_raw(Box::new(CavtreeCatalog { inner }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_catalog_free(catalog: *mut CavtreeCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_catalog_len(catalog: *const CavtreeCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.inner.len())
}

fn parse_config(config_json: *const c_char) -> Result<PipelineConfig, ()> {
    if config_json.is_null() {
        return Ok(PipelineConfig::default());
    }
    let text = match unsafe { CStr::from_ptr(config_json) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config is not valid UTF-8");
            return Err(());
        }
    };
    if text.trim().is_empty() {
        return Ok(PipelineConfig::default());
    }
    match serde_json::from_str(text) {
        Ok(config) => Ok(config),
        Err(e) => {
            set_error(format!("bad config json: {e}"));
            Err(())
        }
    }
}

/// Split and train every concept. `config_json` takes the same JSON document
/// as the CLI config file (null or empty for defaults).
#[no_mangle]
pub unsafe extern "C" fn cavtree_learn(
    store: *const CavtreeStore,
    catalog: *const CavtreeCatalog,
    config_json: *const c_char,
) -> *mut CavtreeCavs {
    let (Some(store), Some(catalog)) = (store.as_ref(), catalog.as_ref()) else {
        set_error("null store or catalog");
        return std::ptr::null_mut();
    };
    let Ok(config) = parse_config(config_json) else {
        return std::ptr::null_mut();
    };
    let train_config = config.train_config();
    let result = split_catalog(&catalog.inner, config.seed, config.min_examples)
        .map_err(|e| e.to_string())
        .and_then(|split| {
            cav::train_all(&catalog.inner, &store.inner, &split, &train_config)
                .map_err(|e| e.to_string())
        })
        .and_then(|all| {
            let kept = cav::filter_cavs(&all, config.accuracy_threshold)
                .map_err(|e| e.to_string())?;
            Ok((all, kept))
        });
    match result {
        Ok((all, kept)) => {
            clear_error();
            Box::into_raw(Box::new(CavtreeCavs {
                all,
                kept,
                dim: store.inner.dim(),
                accuracy_threshold: config.accuracy_threshold,
            }))
        }
        Err(message) => {
            set_error(message);
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_cavs_free(cavs: *mut CavtreeCavs) {
    if !cavs.is_null() {
        drop(Box::from_raw(cavs));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_cavs_count(cavs: *const CavtreeCavs) -> usize {
    cavs.as_ref().map_or(0, |c| c.all.len())
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_cavs_kept_count(cavs: *const CavtreeCavs) -> usize {
    cavs.as_ref().map_or(0, |c| c.kept.len())
}

/// Serialize the trained set as the cavs.json document body.
#[no_mangle]
pub unsafe extern "C" fn cavtree_cavs_to_json(cavs: *const CavtreeCavs) -> *mut c_char {
    let Some(cavs) = cavs.as_ref() else {
        set_error("null cavs");
        return std::ptr::null_mut();
    };
    let set = cav::CavSet {
        dim: cavs.dim,
        accuracy_threshold: cavs.accuracy_threshold,
        concepts: cavs.all.clone(),
    };
    to_owned_c_string(serde_json::to_string_pretty(&set).expect("cavs serialize"))
}

/// Similarity matrix over the kept concepts.
#[no_mangle]
pub unsafe extern "C" fn cavtree_similarity(
    cavs: *const CavtreeCavs,
    catalog: *const CavtreeCatalog,
    store: *const CavtreeStore,
) -> *mut CavtreeSimilarity {
    let (Some(cavs), Some(catalog), Some(store)) =
        (cavs.as_ref(), catalog.as_ref(), store.as_ref())
    else {
        set_error("null argument");
        return std::ptr::null_mut();
    };
    match similarity_matrix(&cavs.kept, &catalog.inner, &store.inner) {
        Ok(inner) => {
            clear_error();
            Box::into_raw(Box::new(CavtreeSimilarity { inner }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_similarity_free(sim: *mut CavtreeSimilarity) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_similarity_k(sim: *const CavtreeSimilarity) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.k())
}

/// `S[i][j]`; NaN when the handle is null or indices are out of range.
#[no_mangle]
pub unsafe extern "C" fn cavtree_similarity_get(
    sim: *const CavtreeSimilarity,
    i: usize,
    j: usize,
) -> f64 {
    match sim.as_ref() {
        Some(s) if i < s.inner.k() && j < s.inner.k() => s.inner.get(i, j),
        _ => f64::NAN,
    }
}

/// Extract the hierarchy from a similarity matrix (betweenness ordering on
/// the undirected adjacency, most-similar attachment).
#[no_mangle]
pub unsafe extern "C" fn cavtree_extract_tree(
    sim: *const CavtreeSimilarity,
) -> *mut CavtreeTree {
    let Some(sim) = sim.as_ref() else {
        set_error("null similarity");
        return std::ptr::null_mut();
    };
    let sym = sim.inner.symmetric();
    let graph = undirected_adjacency(&sim.inner);
    match extract_hierarchy(&sym, &graph) {
        Ok(inner) => {
            clear_error();
            Box::into_raw(Box::new(CavtreeTree { inner }))
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn cavtree_tree_free(tree: *mut CavtreeTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Serialize the tree as the tree.json document body.
#[no_mangle]
pub unsafe extern "C" fn cavtree_tree_to_json(tree: *const CavtreeTree) -> *mut c_char {
    let Some(tree) = tree.as_ref() else {
        set_error("null tree");
        return std::ptr::null_mut();
    };
    let file = TreeFile::from_hierarchy(&tree.inner);
    to_owned_c_string(serde_json::to_string_pretty(&file).expect("tree serialize"))
}

/// Render the tree in DOT format; node labels fall back to concept ids.
#[no_mangle]
pub unsafe extern "C" fn cavtree_tree_to_dot(tree: *const CavtreeTree) -> *mut c_char {
    let Some(tree) = tree.as_ref() else {
        set_error("null tree");
        return std::ptr::null_mut();
    };
    to_owned_c_string(tree_to_dot(&tree.inner, &Default::default()))
}

/// Run the whole pipeline from a JSON config document (same schema as the
/// CLI config file).
#[no_mangle]
pub unsafe extern "C" fn cavtree_pipeline_run(config_json: *const c_char) -> c_int {
    let Ok(config) = parse_config(config_json) else {
        return CavtreeStatus::ValidationFailed as c_int;
    };
    match pipeline::cmd_pipeline(&config) {
        Ok(()) => {
            clear_error();
            CavtreeStatus::Ok as c_int
        }
        Err(e) => {
            let status = match e.exit_code() {
                2 => CavtreeStatus::MissingInput,
                3 => CavtreeStatus::ValidationFailed,
                _ => CavtreeStatus::RuntimeError,
            };
            set_error(e.to_string());
            status as c_int
        }
    }
}
