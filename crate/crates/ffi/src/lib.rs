//! C interface to the comorbid library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_load` and released by the matching `*_free`. Every fallible function
//! returns a [`CmbStatus`]; on failure a description is kept per thread and
//! can be read with [`cmb_last_error`]. Strings returned to the caller are
//! owned by the caller and released with [`cmb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use comorbid::annotation::{cohens_kappa, AgreementTable};
use comorbid::context::TriggerSet;
use comorbid::evaluation::f1_score;
use comorbid::filtermodel::{predict, FeatureVector, ForestModel, Label};
use comorbid::interface::{Document, Extractor};
use comorbid::matcher::build_index;
use comorbid::terminology::{load_lexicon, load_mapping};
use comorbid::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Argument = 6,
    Degenerate = 7,
    Version = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmbLabel {
    NotMention = 0,
    TrueMention = 1,
}

/// Opaque extraction pipeline.
pub struct CmbExtractor(Extractor);

/// Opaque trained filter model for one condition.
pub struct CmbModel(ForestModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> CmbStatus {
    match e {
        Error::Io { .. } | Error::Network(_) => CmbStatus::Io,
        Error::Parse { .. } | Error::Format(_) => CmbStatus::Parse,
        Error::Argument(_) => CmbStatus::Argument,
        Error::Degenerate(_) | Error::EmptyScope(_) => CmbStatus::Degenerate,
        Error::Version { .. } => CmbStatus::Version,
        _ => CmbStatus::Validation,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CmbStatus, String)>) -> CmbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CmbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CmbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CmbStatus, String) {
    (CmbStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CmbStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CmbStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cmb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cmb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an extractor from a lexicon TSV and an ICD mapping CSV.
/// `triggers_path` may be null to use the bundled trigger list.
///
/// # Safety
/// Path arguments must be null or nul-terminated strings; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmb_extractor_new(
    lexicon_path: *const c_char,
    mapping_path: *const c_char,
    triggers_path: *const c_char,
    out: *mut *mut CmbExtractor,
) -> CmbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lexicon = PathBuf::from(str_arg(lexicon_path, "lexicon_path")?);
        let mapping = PathBuf::from(str_arg(mapping_path, "mapping_path")?);
        let triggers = if triggers_path.is_null() {
            TriggerSet::bundled().clone()
        } else {
            TriggerSet::load(str_arg(triggers_path, "triggers_path")?).map_err(lib_err)?
        };
        let mapping = load_mapping(mapping).map_err(lib_err)?;
        let lexicon = load_lexicon(lexicon, &mapping).map_err(lib_err)?;
        let index = build_index(&lexicon).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CmbExtractor(Extractor::new(index, triggers))));
        Ok(())
    })
}

/// # Safety
/// `ext` must be null or a handle from [`cmb_extractor_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmb_extractor_free(ext: *mut CmbExtractor) {
    if !ext.is_null() {
        drop(Box::from_raw(ext));
    }
}

/// Extracts mentions from one document and writes them to `out_json` as a
/// JSON array of mention records (char offsets). Release the string with
/// [`cmb_string_free`].
///
/// # Safety
/// `ext` must be a live extractor handle; string arguments nul-terminated;
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmb_extract_json(
    ext: *const CmbExtractor,
    doc_id: *const c_char,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> CmbStatus {
    guard(|| {
        if ext.is_null() {
            return Err(null("ext"));
        }
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let doc_id = str_arg(doc_id, "doc_id")?;
        let text = str_arg(text, "text")?;
        let date = chrono::NaiveDate::default();
        let doc = Document::new(doc_id, "", date, text);
        let records = (*ext).0.extract(&doc);
        let json = serde_json::to_string(&records).expect("records serialize");
        *out_json = CString::new(json).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// Loads a binary filter model file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmb_model_load(path: *const c_char, out: *mut *mut CmbModel) -> CmbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = ForestModel::load(str_arg(path, "path")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CmbModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`cmb_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmb_model_free(model: *mut CmbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of features in the model's vocabulary.
///
/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn cmb_model_n_features(model: *const CmbModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).0.vocab.len()
}

/// Classifies one feature vector given as present feature ids.
/// `out_score` receives the TrueMention vote share.
///
/// # Safety
/// `model` must be a live model handle; `ids` must point to `n_ids` values
/// (or be null when `n_ids` is 0); outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cmb_model_predict(
    model: *const CmbModel,
    ids: *const u32,
    n_ids: usize,
    out_label: *mut CmbLabel,
    out_score: *mut f64,
) -> CmbStatus {
    guard(|| {
        if model.is_null() {
            return Err(null("model"));
        }
        if out_label.is_null() || out_score.is_null() {
            return Err(null("output pointer"));
        }
        let ids: Vec<u32> = if n_ids == 0 {
            Vec::new()
        } else if ids.is_null() {
            return Err(null("ids"));
        } else {
            std::slice::from_raw_parts(ids, n_ids).to_vec()
        };
        let n = (*model).0.vocab.len();
        if let Some(bad) = ids.iter().find(|&&i| i as usize >= n) {
            return Err((
                CmbStatus::Argument,
                format!("feature id {bad} outside vocabulary of size {n}"),
            ));
        }
        let p = predict(&(*model).0, &FeatureVector::from_ids(ids));
        *out_label = match p.label {
            Label::TrueMention => CmbLabel::TrueMention,
            Label::NotMention => CmbLabel::NotMention,
        };
        *out_score = p.score;
        Ok(())
    })
}

/// Cohen's kappa of a 2x2 agreement table.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmb_cohens_kappa(
    both_true: u64,
    a_true_b_false: u64,
    a_false_b_true: u64,
    both_false: u64,
    out: *mut f64,
) -> CmbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let table = AgreementTable::new(both_true, a_true_b_false, a_false_b_true, both_false);
        *out = cohens_kappa(&table).map_err(lib_err)?;
        Ok(())
    })
}

/// Harmonic mean of precision and recall; 0 when both are 0.
#[no_mangle]
pub extern "C" fn cmb_f1_score(precision: f64, recall: f64) -> f64 {
    f1_score(precision, recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_status_mapping() {
        assert_eq!(status_of(&Error::Argument("x".into())), CmbStatus::Argument);
        assert_eq!(status_of(&Error::Format("x".into())), CmbStatus::Parse);
        assert_eq!(status_of(&Error::Version { expected: 1, found: 2 }), CmbStatus::Version);
        assert_eq!(status_of(&Error::DuplicateCui("C1".into())), CmbStatus::Validation);
    }

    #[test]
    fn panic_becomes_status() {
        assert_eq!(guard(|| panic!("boom")), CmbStatus::Panic);
        assert_eq!(
            unsafe { CStr::from_ptr(cmb_last_error()) }.to_str().unwrap(),
            "internal panic"
        );
    }
}
