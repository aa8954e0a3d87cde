//! C interface to the corpus loader, prompt builder, output parsers and
//! scorer.
//!
//! Every fallible function returns an [`AbsaStatus`]; on anything but
//! `ABSA_STATUS_OK` the message is available from [`absa_last_error`] on the
//! same thread. Strings handed out by the library are owned by the caller and
//! must be released with [`absa_string_free`]; corpus handles with
//! [`absa_corpus_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::str::FromStr;

use absa_core::corpus::{corpus_stats, load_semeval_xml, read_corpus_jsonl, ConflictPolicy, Corpus, Domain, Split};
use absa_core::decoding::{read_predictions_jsonl, DecodeOptions, ParsedOutput};
use absa_core::metrics::{score_predictions, Averaging};
use absa_core::prompting::{
    build_dataset, build_eval_dataset, write_dataset_jsonl, PromptConfig, SubtaskKind, Variant,
};
use absa_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsaStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8 or an unknown enum name.
    InvalidArgument = 1,
    Io = 2,
    MalformedInput = 3,
    SchemaViolation = 4,
    Unrepresentable = 5,
    Mismatch = 6,
    Backend = 7,
    Internal = 99,
}

/// A loaded corpus.
pub struct AbsaCorpus {
    inner: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AbsaStatus {
    match err {
        Error::Io { .. } => AbsaStatus::Io,
        Error::MalformedXml { .. } | Error::Json { .. } | Error::Template { .. } => AbsaStatus::MalformedInput,
        Error::SchemaViolation { .. } | Error::DuplicateId(_) => AbsaStatus::SchemaViolation,
        Error::UnrepresentableTerm { .. } | Error::TooManyUnrepresentable { .. } => AbsaStatus::Unrepresentable,
        Error::IdMismatch(_) | Error::LengthMismatch { .. } | Error::SplitMismatch { .. } | Error::MixedSubtasks => {
            AbsaStatus::Mismatch
        }
        Error::NotTrainable(_) | Error::ResourceExhausted(_) | Error::BackendUnavailable(_) | Error::EmptyDataset => {
            AbsaStatus::Backend
        }
        Error::Config(_) | Error::EmptyInput => AbsaStatus::InvalidArgument,
        Error::Experiment { source, .. } => status_of(source),
    }
}

struct Failure(AbsaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(AbsaStatus::InvalidArgument, message.into())
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AbsaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbsaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AbsaStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn named<T: FromStr>(p: *const c_char, what: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    let s = text(p, what)?;
    s.parse().map_err(|e| invalid(format!("{what}: {e}")))
}

unsafe fn corpus<'a>(p: *const AbsaCorpus) -> Result<&'a Corpus, Failure> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| invalid("corpus handle is null"))
}

unsafe fn hand_out(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    let c = CString::new(s).map_err(|_| Failure(AbsaStatus::Internal, "output contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json(value: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure(AbsaStatus::Internal, e.to_string()))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread; do not free.
#[no_mangle]
pub extern "C" fn absa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn absa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn absa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a SemEval XML gold file. `domain` is `laptops` or `restaurants`,
/// `split` is `train` or `test`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn absa_corpus_load_xml(
    path: *const c_char,
    domain: *const c_char,
    split: *const c_char,
    out: *mut *mut AbsaCorpus,
) -> AbsaStatus {
    guard(|| {
        let path = text(path, "path")?;
        let domain: Domain = named(domain, "domain")?;
        let split: Split = named(split, "split")?;
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let inner = load_semeval_xml(path, domain, split)?;
        *out = Box::into_raw(Box::new(AbsaCorpus { inner }));
        Ok(())
    })
}

/// Loads a corpus saved as JSONL.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn absa_corpus_load_jsonl(path: *const c_char, out: *mut *mut AbsaCorpus) -> AbsaStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let inner = read_corpus_jsonl(path)?;
        *out = Box::into_raw(Box::new(AbsaCorpus { inner }));
        Ok(())
    })
}

/// Frees a corpus handle. Null is ignored.
///
/// # Safety
/// `corpus` must come from a load function and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn absa_corpus_free(corpus: *mut AbsaCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of sentences; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn absa_corpus_len(corpus: *const AbsaCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.len())
}

/// Corpus statistics as a JSON object.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn absa_corpus_stats_json(corpus: *const AbsaCorpus, out: *mut *mut c_char) -> AbsaStatus {
    guard(|| {
        let c = self::corpus(corpus)?;
        hand_out(out, to_json(&corpus_stats(c))?)
    })
}

/// Renders the corpus into prompted examples and writes them as JSONL to
/// `out_path`. With `eval` false, sentences whose gold cannot be rendered are
/// left out and counted in `excluded` (which may be null).
///
/// # Safety
/// `corpus` must be a live handle; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn absa_build_prompts(
    corpus: *const AbsaCorpus,
    subtask: *const c_char,
    variant: *const c_char,
    eval: bool,
    out_path: *const c_char,
    examples: *mut usize,
    excluded: *mut usize,
) -> AbsaStatus {
    guard(|| {
        let c = self::corpus(corpus)?;
        let subtask: SubtaskKind = named(subtask, "subtask")?;
        let variant: Variant = named(variant, "variant")?;
        let out_path = text(out_path, "out_path")?;
        let config = PromptConfig::builtin(variant);
        let built = if eval {
            build_eval_dataset(&config, subtask, c)?
        } else {
            build_dataset(&config, subtask, c)?
        };
        write_dataset_jsonl(&built.examples, out_path)?;
        if let Some(n) = examples.as_mut() {
            *n = built.examples.len();
        }
        if let Some(n) = excluded.as_mut() {
            *n = built.excluded.len();
        }
        Ok(())
    })
}

/// Parses one raw model output into its JSON prediction.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn absa_parse_output(
    subtask: *const c_char,
    raw: *const c_char,
    out: *mut *mut c_char,
) -> AbsaStatus {
    guard(|| {
        let subtask: SubtaskKind = named(subtask, "subtask")?;
        let raw = text(raw, "raw")?;
        let parsed = ParsedOutput::parse(subtask, raw, &DecodeOptions::default());
        hand_out(out, to_json(&parsed)?)
    })
}

/// Scores a predictions JSONL file against the gold corpus (micro
/// averaging, conflict aspects dropped) and returns the report as JSON.
///
/// # Safety
/// `gold` must be a live handle; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn absa_score(
    gold: *const AbsaCorpus,
    subtask: *const c_char,
    predictions_path: *const c_char,
    out: *mut *mut c_char,
) -> AbsaStatus {
    guard(|| {
        let c = self::corpus(gold)?;
        let subtask: SubtaskKind = named(subtask, "subtask")?;
        let path = text(predictions_path, "predictions_path")?;
        let records = read_predictions_jsonl(path, &DecodeOptions::default())?;
        let report = score_predictions(subtask, c, &records, ConflictPolicy::default(), Averaging::Micro)?;
        hand_out(out, to_json(&report)?)
    })
}
