//! C ABI for ctrltree.
//!
//! Objects are opaque handles created by `ct_*` constructors and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`CtStatus`]; on failure [`ct_last_error_message`] and
//! [`ct_last_error_kind`] describe the error on the calling thread.
//! Strings returned through `char **` out-parameters are owned by the
//! caller and must be released with [`ct_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctrltree::export::{export, import_json, ExportFormat};
use ctrltree::ingest::{parse_controller_csv, parse_metadata, parse_strategy_json};
use ctrltree::{build_tree, BuildConfig, Controller, DecisionTree, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Controller, metadata, tree or expression text could not be parsed.
    ParseError = 3,
    /// The configuration was rejected.
    InvalidConfig = 4,
    /// Tree construction failed.
    BuildFailed = 5,
    /// The state could not be evaluated by the tree.
    EvalFailed = 6,
    /// The tree could not be exported in the requested format.
    ExportFailed = 7,
    /// The output buffer is too small; the required size was still written.
    BufferTooSmall = 8,
    /// An internal panic was caught at the boundary.
    Internal = 9,
}

/// Export format for [`ct_tree_export`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtFormat {
    Json = 0,
    Dot = 1,
    C = 2,
}

/// Size statistics of a tree.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CtTreeStats {
    pub total_nodes: usize,
    pub inner_nodes: usize,
    pub leaves: usize,
    pub depth: usize,
    pub inexact_leaves: usize,
}

/// Opaque controller handle.
pub struct CtController {
    inner: Controller,
}

/// Opaque tree handle.
pub struct CtTree {
    inner: DecisionTree,
}

struct LastError {
    kind: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(kind: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = Some(LastError {
            kind: clean(kind),
            message: clean(message),
        })
    });
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(CtStatus, String, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(
            CtStatus::NullArgument,
            "NullArgument".into(),
            format!("`{what}` is NULL"),
        )
    }

    fn from_error(status: CtStatus, err: Error) -> Self {
        let status = match err {
            Error::Parse { .. }
            | Error::MalformedJson(_)
            | Error::ArityMismatch { .. }
            | Error::DuplicateStateInDeterministicFile { .. }
            | Error::UnknownCategoricalToken { .. }
            | Error::OverlappingColumnTypes(_)
            | Error::GapInColumnCoverage(_)
            | Error::EmptyActionList(_)
            | Error::SchemaVersionMismatch(_)
            | Error::UndeclaredCoefficient(_) => CtStatus::ParseError,
            Error::InvalidConfig(_) => CtStatus::InvalidConfig,
            _ => status,
        };
        Failure(status, err.kind().to_string(), err.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_error();
            CtStatus::Ok
        }
        Ok(Err(Failure(status, kind, message))) => {
            set_error(&kind, &message);
            status
        }
        Err(_) => {
            set_error("Internal", "panic inside ctrltree");
            CtStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            CtStatus::InvalidUtf8,
            "InvalidUtf8".into(),
            format!("`{what}` is not valid UTF-8"),
        )
    })
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

fn out_string(text: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|_| {
        Failure(
            CtStatus::ExportFailed,
            "Internal".into(),
            "output contains NUL".into(),
        )
    })?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next `ct_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null(), |e| e.message.as_ptr())
    })
}

/// Error kind identifier (e.g. `ParseError`) of the last failed call, or NULL.
#[no_mangle]
pub extern "C" fn ct_last_error_kind() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.kind.as_ptr()))
}

/// Parses a controller CSV. `metadata_json` may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_controller_from_csv(
    csv: *const c_char,
    metadata_json: *const c_char,
    out: *mut *mut CtController,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let csv = str_arg(csv, "csv")?;
        let meta = opt_str_arg(metadata_json, "metadata_json")?
            .map(parse_metadata)
            .transpose()
            .map_err(|e| Failure::from_error(CtStatus::ParseError, e))?;
        let inner = parse_controller_csv(csv, meta.as_deref())
            .map_err(|e| Failure::from_error(CtStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(CtController { inner }));
        Ok(())
    })
}

/// Parses a strategy JSON document. `metadata_json` may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_controller_from_strategy_json(
    json: *const c_char,
    metadata_json: *const c_char,
    out: *mut *mut CtController,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let json = str_arg(json, "json")?;
        let meta = opt_str_arg(metadata_json, "metadata_json")?
            .map(parse_metadata)
            .transpose()
            .map_err(|e| Failure::from_error(CtStatus::ParseError, e))?;
        let inner = parse_strategy_json(json, meta.as_deref())
            .map_err(|e| Failure::from_error(CtStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(CtController { inner }));
        Ok(())
    })
}

/// Number of states in the controller; 0 for NULL.
///
/// # Safety
/// `controller` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_controller_num_states(controller: *const CtController) -> usize {
    controller.as_ref().map_or(0, |c| c.inner.len())
}

/// Number of state variables; 0 for NULL.
///
/// # Safety
/// `controller` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_controller_num_variables(controller: *const CtController) -> usize {
    controller.as_ref().map_or(0, |c| c.inner.variables().len())
}

/// Releases a controller. NULL is ignored.
///
/// # Safety
/// `controller` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ct_controller_free(controller: *mut CtController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// Learns a tree. `config_json` is a configuration document such as
/// `{"impurity":"entropy","determinize":"none"}`; NULL means defaults.
///
/// # Safety
/// `controller` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_build_tree(
    controller: *const CtController,
    config_json: *const c_char,
    out: *mut *mut CtTree,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let controller = controller
            .as_ref()
            .ok_or_else(|| Failure::null("controller"))?;
        let config: BuildConfig = match opt_str_arg(config_json, "config_json")? {
            Some(text) => serde_json::from_str(text).map_err(|e| {
                Failure(
                    CtStatus::InvalidConfig,
                    "InvalidConfig".into(),
                    e.to_string(),
                )
            })?,
            None => BuildConfig::default(),
        };
        let inner = build_tree(&controller.inner, &config)
            .map_err(|e| Failure::from_error(CtStatus::BuildFailed, e))?;
        *out = Box::into_raw(Box::new(CtTree { inner }));
        Ok(())
    })
}

/// Reads a tree from its JSON export.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_from_json(json: *const c_char, out: *mut *mut CtTree) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let inner = import_json(str_arg(json, "json")?)
            .map_err(|e| Failure::from_error(CtStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(CtTree { inner }));
        Ok(())
    })
}

/// Releases a tree. NULL is ignored.
///
/// # Safety
/// `tree` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_free(tree: *mut CtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_stats(tree: *const CtTree, out: *mut CtTreeStats) -> CtStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| Failure::null("tree"))?;
        let out = out.as_mut().ok_or_else(|| Failure::null("out"))?;
        let s = tree.inner.stats();
        *out = CtTreeStats {
            total_nodes: s.total_nodes,
            inner_nodes: s.inner_nodes,
            leaves: s.leaves,
            depth: s.depth,
            inexact_leaves: s.inexact_leaves,
        };
        Ok(())
    })
}

/// Number of action labels of the tree; 0 for NULL.
///
/// # Safety
/// `tree` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_num_actions(tree: *const CtTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.labels().len())
}

/// Copies the label of action `id` into a new string.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_action_label(
    tree: *const CtTree,
    id: u32,
    out: *mut *mut c_char,
) -> CtStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| Failure::null("tree"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let label = tree.inner.labels().get(id as usize).ok_or_else(|| {
            Failure(
                CtStatus::EvalFailed,
                "UnknownAction".into(),
                format!("no action {id}"),
            )
        })?;
        out_string(label.clone(), out)
    })
}

/// Evaluates the tree on `state[0..len]` and writes the allowed action ids
/// into `actions_out[0..capacity]`. `*count_out` receives the number of
/// allowed actions even when it exceeds `capacity`, in which case
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `state` must point to `len` doubles, `actions_out` to `capacity`
/// writable slots (may be NULL when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn ct_tree_evaluate(
    tree: *const CtTree,
    state: *const f64,
    len: usize,
    actions_out: *mut u32,
    capacity: usize,
    count_out: *mut usize,
) -> CtStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| Failure::null("tree"))?;
        let count_out = count_out
            .as_mut()
            .ok_or_else(|| Failure::null("count_out"))?;
        let state: &[f64] = if len == 0 {
            &[]
        } else if state.is_null() {
            return Err(Failure::null("state"));
        } else {
            std::slice::from_raw_parts(state, len)
        };
        if len != tree.inner.variables().len() {
            let err = Error::StateShape {
                expected: tree.inner.variables().len(),
                found: len,
            };
            return Err(Failure::from_error(CtStatus::EvalFailed, err));
        }
        let set = tree
            .inner
            .evaluate(state)
            .map_err(|e| Failure::from_error(CtStatus::EvalFailed, e))?;
        *count_out = set.len();
        if set.len() > capacity {
            return Err(Failure(
                CtStatus::BufferTooSmall,
                "BufferTooSmall".into(),
                format!("{} actions, capacity {capacity}", set.len()),
            ));
        }
        if !set.is_empty() && actions_out.is_null() {
            return Err(Failure::null("actions_out"));
        }
        for (i, id) in set.ids().iter().enumerate() {
            *actions_out.add(i) = *id;
        }
        Ok(())
    })
}

/// Serializes the tree; `*out` receives a new string.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_tree_export(
    tree: *const CtTree,
    format: CtFormat,
    out: *mut *mut c_char,
) -> CtStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| Failure::null("tree"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let format = match format {
            CtFormat::Json => ExportFormat::Json,
            CtFormat::Dot => ExportFormat::Dot,
            CtFormat::C => ExportFormat::C,
        };
        let text = export(&tree.inner, format)
            .map_err(|e| Failure::from_error(CtStatus::ExportFailed, e))?;
        out_string(text, out)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from a `ct_*` out-parameter not freed before.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
