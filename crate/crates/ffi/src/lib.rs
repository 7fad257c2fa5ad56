//! C ABI over `psyfeat`.
//!
//! Every fallible function returns a [`PsyStatus`]; on failure a
//! description is available from [`psy_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned to the caller are owned by the caller and released with
//! [`psy_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use psyfeat::corpus::{clean_text, CleanConfig, UserDocument};
use psyfeat::lda::{infer, load_model, InferParams, TopicModel};
use psyfeat::lexicon::{load_lexicon, parse_lexicon, Lexicon};
use psyfeat::stats::{pearson, rmse};
use psyfeat::Error;

/// Result codes shared by every function in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    ModelFormat = 6,
    EmptyDocument = 7,
    ZeroVariance = 8,
    LengthMismatch = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Internal = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

struct Failure(PsyStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => PsyStatus::Io,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) | Error::Config(_) => {
                PsyStatus::Parse
            }
            Error::ModelFormat(_) | Error::ModelVersion { .. } => PsyStatus::ModelFormat,
            Error::EmptyDocument { .. } | Error::EmptyVocabulary => PsyStatus::EmptyDocument,
            Error::ZeroVariance(_) => PsyStatus::ZeroVariance,
            Error::LengthMismatch { .. } => PsyStatus::LengthMismatch,
            Error::InvalidArgument(_) | Error::RankDeficient { .. } => PsyStatus::InvalidArgument,
            _ => PsyStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PsyStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsyStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            PsyStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PsyStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            PsyStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PsyStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn tokens_arg(
    tokens: *const *const c_char,
    n_tokens: usize,
) -> Result<Vec<String>, Failure> {
    slice_arg(tokens, n_tokens, "tokens")?
        .iter()
        .map(|&t| str_arg(t, "tokens[i]").map(str::to_owned))
        .collect()
}

unsafe fn write_out<T: Copy>(
    out: *mut T,
    len: usize,
    values: &[T],
    name: &str,
) -> Result<(), Failure> {
    if len < values.len() {
        return Err(fail(
            PsyStatus::BufferTooSmall,
            format!("`{name}` holds {len} values, {} needed", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(fail(PsyStatus::NullPointer, format!("`{name}` is null")));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn document(tokens: Vec<String>) -> UserDocument {
    UserDocument {
        user_id: String::new(),
        tokens,
        raw_byte_length: 0,
        score: None,
    }
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn psy_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn psy_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn psy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loaded lexicon.
pub struct PsyLexicon {
    inner: Lexicon,
    names: Vec<CString>,
}

impl PsyLexicon {
    fn new(inner: Lexicon) -> Box<Self> {
        let names = inner
            .category_names()
            .map(|n| CString::new(n.replace('\0', " ")).expect("NULs replaced"))
            .collect();
        Box::new(PsyLexicon { inner, names })
    }
}

/// Loads a `.dic` lexicon file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_load(
    path: *const c_char,
    out: *mut *mut PsyLexicon,
) -> PsyStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`out` is null"));
        }
        let lex = load_lexicon(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(PsyLexicon::new(lex));
        Ok(())
    })
}

/// Parses lexicon text held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_parse(
    text: *const c_char,
    out: *mut *mut PsyLexicon,
) -> PsyStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`out` is null"));
        }
        let lex = parse_lexicon(str_arg(text, "text")?, "<memory>")?;
        *out = Box::into_raw(PsyLexicon::new(lex));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from a `psy_lexicon_*` constructor and not have been
/// freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_free(lexicon: *mut PsyLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Number of categories, or 0 for NULL.
///
/// # Safety
/// `lexicon` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_num_categories(lexicon: *const PsyLexicon) -> usize {
    lexicon.as_ref().map_or(0, |l| l.names.len())
}

/// Name of category `index`, borrowed from the handle; NULL when out of range.
///
/// # Safety
/// `lexicon` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_category_name(
    lexicon: *const PsyLexicon,
    index: usize,
) -> *const c_char {
    lexicon
        .as_ref()
        .and_then(|l| l.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Category frequencies (count / token count) of a token list, written in
/// category order to `out`, which must hold `psy_lexicon_num_categories`
/// values.
///
/// # Safety
/// `tokens` must point to `n_tokens` NUL-terminated strings; `out` must
/// point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn psy_lexicon_features(
    lexicon: *const PsyLexicon,
    tokens: *const *const c_char,
    n_tokens: usize,
    out: *mut f64,
    out_len: usize,
) -> PsyStatus {
    guard(|| {
        let lex = lexicon
            .as_ref()
            .ok_or_else(|| fail(PsyStatus::NullPointer, "`lexicon` is null"))?;
        let doc = document(tokens_arg(tokens, n_tokens)?);
        let values = lex.inner.extract_features(&doc).values;
        write_out(out, out_len, &values, "out")
    })
}

/// Loaded topic model.
pub struct PsyTopicModel {
    inner: TopicModel,
}

/// Loads a model saved by `psyfeat topics train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psy_model_load(
    path: *const c_char,
    out: *mut *mut PsyTopicModel,
) -> PsyStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`out` is null"));
        }
        let inner = load_model(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(PsyTopicModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`psy_model_load`] and not have been freed. NULL
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn psy_model_free(model: *mut PsyTopicModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of topics, or 0 for NULL.
///
/// # Safety
/// `model` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn psy_model_num_topics(model: *const PsyTopicModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_topics())
}

/// Infers topic proportions of a token list under the frozen model and
/// writes them to `theta_out`, which must hold `psy_model_num_topics`
/// values. Pass 0 for `iterations` and `burn_in` to use the defaults.
///
/// # Safety
/// `tokens` must point to `n_tokens` NUL-terminated strings; `theta_out`
/// must point to `theta_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn psy_model_infer(
    model: *const PsyTopicModel,
    tokens: *const *const c_char,
    n_tokens: usize,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    theta_out: *mut f64,
    theta_len: usize,
) -> PsyStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| fail(PsyStatus::NullPointer, "`model` is null"))?;
        let params = if iterations == 0 && burn_in == 0 {
            InferParams::default()
        } else {
            InferParams {
                iterations,
                burn_in,
            }
        };
        let theta = infer(
            &m.inner,
            &document(tokens_arg(tokens, n_tokens)?),
            params,
            seed,
        )?
        .theta;
        write_out(theta_out, theta_len, &theta, "theta_out")
    })
}

/// Strips retweet chains, reply prefixes, URLs, hashtags, mentions and
/// emoticon codes from a message. The result is stored in `*out` and must
/// be released with [`psy_string_free`].
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psy_clean_text(
    text: *const c_char,
    keep_hashtag_text: bool,
    out: *mut *mut c_char,
) -> PsyStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`out` is null"));
        }
        let cleaned = clean_text(str_arg(text, "text")?, &CleanConfig { keep_hashtag_text });
        *out = CString::new(cleaned)
            .map_err(|_| fail(PsyStatus::Internal, "cleaned text contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// Pearson correlation of two length-`n` series with its two-tailed p-value.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `r` and `p_value` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn psy_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    r: *mut f64,
    p_value: *mut f64,
) -> PsyStatus {
    guard(|| {
        if r.is_null() || p_value.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`r` or `p_value` is null"));
        }
        let c = pearson(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        *r = c.r;
        *p_value = c.p_value;
        Ok(())
    })
}

/// Root mean squared error of `predicted` against `actual`.
///
/// # Safety
/// Both arrays must hold `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psy_rmse(
    predicted: *const f64,
    actual: *const f64,
    n: usize,
    out: *mut f64,
) -> PsyStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PsyStatus::NullPointer, "`out` is null"));
        }
        *out = rmse(
            slice_arg(predicted, n, "predicted")?,
            slice_arg(actual, n, "actual")?,
        )?;
        Ok(())
    })
}
