//! C ABI over the specrag core.
//!
//! Every function returns a [`SpecragStatus`]. On failure the message is
//! available from [`specrag_last_error`] on the same thread. Strings
//! returned through `char **` are owned by the caller and must be released
//! with [`specrag_string_free`]; handles with their matching `_free`.
//!
//! Chunking and retrieval through this interface use the reference
//! tokenizer and the local hashing embedder, so no network access or
//! credentials are involved.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use specrag::chunking::{chunk_spec, Chunk, ChunkingStrategy, Refinement, Splitting};
use specrag::config::{local_model_name, parse_local_model_name};
use specrag::eval::compute_metrics;
use specrag::index::{build_index, load_index_from_path, save_index_to_path, VectorIndex};
use specrag::openapi::{parse_spec, serialize_endpoint, EndpointId, SpecDocument};
use specrag::providers::LocalHashEmbedder;
use specrag::retrieval::retrieve;
use specrag::tokenizer::ReferenceTokenizer;
use specrag::Error;

/// Result of every call. Values 1 to 10 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecragStatus {
    Ok = 0,
    Io = 1,
    InvalidInput = 2,
    Document = 3,
    Strategy = 4,
    Provider = 5,
    ProviderMismatch = 6,
    Index = 7,
    Benchmark = 8,
    Protocol = 9,
    NotFound = 10,
    NullArgument = 20,
    InvalidUtf8 = 21,
    Panic = 22,
}

impl SpecragStatus {
    fn from_error(e: &Error) -> Self {
        match e.exit_code() {
            1 => SpecragStatus::Io,
            3 => SpecragStatus::Document,
            4 => SpecragStatus::Strategy,
            5 => SpecragStatus::Provider,
            6 => SpecragStatus::ProviderMismatch,
            7 => SpecragStatus::Index,
            8 => SpecragStatus::Benchmark,
            9 => SpecragStatus::Protocol,
            10 => SpecragStatus::NotFound,
            _ => SpecragStatus::InvalidInput,
        }
    }
}

/// Parsed OpenAPI document.
pub struct SpecragDocument {
    doc: SpecDocument,
}

/// Vector index built with the local embedder.
pub struct SpecragIndex {
    index: VectorIndex,
    embedder: LocalHashEmbedder,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Status(SpecragStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SpecragStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpecragStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(format!("{}: {e}", e.code()));
            SpecragStatus::from_error(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SpecragStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(SpecragStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(SpecragStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure::Status(SpecragStatus::InvalidInput, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn specrag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn specrag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON or YAML OpenAPI document of `len` bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes, `source_name` to a C string
/// and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn specrag_document_parse(
    bytes: *const u8,
    len: usize,
    source_name: *const c_char,
    out: *mut *mut SpecragDocument,
) -> SpecragStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(source_name, "source_name")?;
        let doc = parse_spec(std::slice::from_raw_parts(bytes, len), name)?;
        *out = Box::into_raw(Box::new(SpecragDocument { doc }));
        Ok(())
    })
}

/// # Safety
/// `doc` must be NULL or a handle from [`specrag_document_parse`].
#[no_mangle]
pub unsafe extern "C" fn specrag_document_free(doc: *mut SpecragDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// # Safety
/// `doc` must be a live document handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_document_endpoint_count(
    doc: *const SpecragDocument,
    out: *mut usize,
) -> SpecragStatus {
    guard(|| {
        let d = deref(doc, "doc")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = d.doc.endpoints().len();
        Ok(())
    })
}

/// JSON array of `"VERB /path"` strings in document order.
///
/// # Safety
/// `doc` must be a live document handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_document_endpoints_json(
    doc: *const SpecragDocument,
    out: *mut *mut c_char,
) -> SpecragStatus {
    guard(|| {
        let d = deref(doc, "doc")?;
        let ids: Vec<String> = d.doc.endpoint_ids().map(ToString::to_string).collect();
        write_string(out, serde_json::to_string(&ids).map_err(Error::from)?)
    })
}

/// Serialized endpoint for a verb (any case) and exact path.
///
/// # Safety
/// `doc` must be a live document handle, `verb` and `path` C strings and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_document_endpoint_details(
    doc: *const SpecragDocument,
    verb: *const c_char,
    path: *const c_char,
    out: *mut *mut c_char,
) -> SpecragStatus {
    guard(|| {
        let d = deref(doc, "doc")?;
        let ep = d.doc.find_endpoint(read_str(verb, "verb")?, read_str(path, "path")?)?;
        write_string(out, serialize_endpoint(ep))
    })
}

/// Chunks a document and returns the chunks as a JSON array. `splitting` is
/// `none`, `endpoint` or `json`; `refinement` one of `token-chunking`,
/// `remove-examples` or `relevant-fields`. `chunk_size` and `overlap` are
/// only read for token chunking. Chunks record the local embedder of
/// `dimension` as their embedding model.
///
/// # Safety
/// `doc` must be a live document handle, the strings C strings and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_chunk_json(
    doc: *const SpecragDocument,
    splitting: *const c_char,
    refinement: *const c_char,
    chunk_size: usize,
    overlap: usize,
    dimension: usize,
    out: *mut *mut c_char,
) -> SpecragStatus {
    guard(|| {
        let d = deref(doc, "doc")?;
        let splitting: Splitting = read_str(splitting, "splitting")?.parse()?;
        let refinement: Refinement = read_str(refinement, "refinement")?.parse()?;
        if matches!(refinement, Refinement::LlmSummary | Refinement::LlmQuery) {
            return Err(Failure::Status(
                SpecragStatus::InvalidInput,
                format!("{refinement} refinement needs an LLM and is not available here"),
            ));
        }
        let params = (refinement == Refinement::TokenChunking).then_some((chunk_size, overlap));
        let strategy = ChunkingStrategy::new(
            splitting,
            refinement,
            params.map(|p| p.0),
            params.map(|p| p.1),
            local_model_name(dimension),
        )?;
        let chunks = chunk_spec(&d.doc, &strategy, &ReferenceTokenizer, None)?;
        write_string(out, serde_json::to_string(&chunks).map_err(Error::from)?)
    })
}

/// Builds an index from a JSON array of chunks with the local embedder.
///
/// # Safety
/// `chunks_json` must be a C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_build_local(
    chunks_json: *const c_char,
    dimension: usize,
    out: *mut *mut SpecragIndex,
) -> SpecragStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dimension == 0 {
            return Err(Failure::Status(SpecragStatus::InvalidInput, "dimension must be at least 1".into()));
        }
        let chunks: Vec<Chunk> = serde_json::from_str(read_str(chunks_json, "chunks_json")?).map_err(Error::from)?;
        let embedder = LocalHashEmbedder::new(dimension);
        let index = build_index(chunks, &embedder)?;
        *out = Box::into_raw(Box::new(SpecragIndex { index, embedder }));
        Ok(())
    })
}

/// # Safety
/// `index` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_free(index: *mut SpecragIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// # Safety
/// `index` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_len(index: *const SpecragIndex, out: *mut usize) -> SpecragStatus {
    guard(|| {
        let i = deref(index, "index")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = i.index.len();
        Ok(())
    })
}

/// Top-`k` retrieval; the result is a JSON retrieval record.
///
/// # Safety
/// `index` must be a live handle, `query` a C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_query_json(
    index: *const SpecragIndex,
    query: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> SpecragStatus {
    guard(|| {
        let i = deref(index, "index")?;
        let r = retrieve(&i.index, &i.embedder, &ReferenceTokenizer, read_str(query, "query")?, k)?;
        write_string(out, serde_json::to_string(&r).map_err(Error::from)?)
    })
}

/// # Safety
/// `index` must be a live handle and `path` a C string.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_save(index: *const SpecragIndex, path: *const c_char) -> SpecragStatus {
    guard(|| {
        let i = deref(index, "index")?;
        save_index_to_path(&i.index, read_str(path, "path")?)?;
        Ok(())
    })
}

/// Loads an index file written by a local embedder.
///
/// # Safety
/// `path` must be a C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_index_load(path: *const c_char, out: *mut *mut SpecragIndex) -> SpecragStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let index = load_index_from_path(read_str(path, "path")?)?;
        let dim = parse_local_model_name(index.provider_name()).ok_or_else(|| Error::ProviderMismatch {
            index: index.provider_name().to_string(),
            query: "local-hash".into(),
        })?;
        *out = Box::into_raw(Box::new(SpecragIndex { index, embedder: LocalHashEmbedder::new(dim) }));
        Ok(())
    })
}

/// Recall, precision and F1 of two JSON arrays of `"VERB /path"` strings.
///
/// # Safety
/// Both inputs must be C strings and the three outputs writable.
#[no_mangle]
pub unsafe extern "C" fn specrag_compute_metrics(
    predicted_json: *const c_char,
    gold_json: *const c_char,
    recall: *mut f64,
    precision: *mut f64,
    f1: *mut f64,
) -> SpecragStatus {
    guard(|| {
        if recall.is_null() || precision.is_null() || f1.is_null() {
            return Err(null("metric output"));
        }
        let predicted = parse_ids(read_str(predicted_json, "predicted_json")?)?;
        let gold = parse_ids(read_str(gold_json, "gold_json")?)?;
        let m = compute_metrics(&predicted, &gold)?;
        *recall = m.recall;
        *precision = m.precision;
        *f1 = m.f1;
        Ok(())
    })
}

fn parse_ids(json: &str) -> FfiResult<Vec<EndpointId>> {
    let items: Vec<String> = serde_json::from_str(json).map_err(Error::from)?;
    Ok(items.iter().map(|s| s.parse()).collect::<Result<_, Error>>()?)
}
