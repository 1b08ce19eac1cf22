//! C interface to the analyzer.
//!
//! Every function returns an [`IacsStatus`]; on failure the message is
//! available from [`iacs_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use iacsmell::parsers::{corpus_from_source, load_corpus, Corpus};
use iacsmell::pruner::{
    prune, rank_findings, BuiltinModel, BuiltinScorer, PassthroughScorer, PrunerError, Scorer, ScoredFinding,
    TargetedSmellSet, DEFAULT_BATCH_SIZE, DEFAULT_THRESHOLD,
};
use iacsmell::rules::{detect, RuleConfig, SmellType};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IacsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    ParseError = 4,
    IoError = 5,
    ModelError = 6,
    ScorerError = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Analyzer settings: rule keywords, optional builtin model, threshold.
pub struct IacsAnalyzer {
    config: RuleConfig,
    model: Option<BuiltinModel>,
    threshold: f64,
}

struct Entry {
    scored: ScoredFinding,
    kept: bool,
    file_path: CString,
    rationale: CString,
}

/// Ranked kept findings followed by ranked dropped findings.
pub struct IacsReport {
    entries: Vec<Entry>,
    kept: usize,
}

/// One finding. String pointers stay valid until the report is freed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IacsFinding {
    pub file_path: *const c_char,
    pub line: usize,
    /// Index into the smell list, see `iacs_smell_name`.
    pub smell: u32,
    pub confidence: f64,
    pub fp_probability: f64,
    /// 1 when the finding survived pruning.
    pub kept: u8,
    pub rationale: *const c_char,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut cur = err.source();
    while let Some(e) = cur {
        out.push_str(": ");
        out.push_str(&e.to_string());
        cur = e.source();
    }
    out
}

fn fail(status: IacsStatus, err: &dyn std::error::Error) -> IacsStatus {
    set_error(chain(err));
    status
}

fn guard(f: impl FnOnce() -> IacsStatus) -> IacsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == IacsStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => {
            set_error("internal panic");
            IacsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, IacsStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(IacsStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(IacsStatus::InvalidUtf8, &e))
}

macro_rules! check {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

fn null_error(what: &str) -> IacsStatus {
    set_error(format!("{what} is null"));
    IacsStatus::NullPointer
}

/// Creates an analyzer with default keyword lists and no model.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyzer_new(out: *mut *mut IacsAnalyzer) -> IacsStatus {
    guard(|| {
        if out.is_null() {
            return null_error("out");
        }
        let analyzer = IacsAnalyzer {
            config: RuleConfig::default(),
            model: None,
            threshold: DEFAULT_THRESHOLD,
        };
        *out = Box::into_raw(Box::new(analyzer));
        IacsStatus::Ok
    })
}

/// # Safety
/// `analyzer` must come from `iacs_analyzer_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyzer_free(analyzer: *mut IacsAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

/// Replaces the keyword lists with those in the config file at `path`.
///
/// # Safety
/// `analyzer` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyzer_load_config(analyzer: *mut IacsAnalyzer, path: *const c_char) -> IacsStatus {
    guard(|| {
        let Some(a) = analyzer.as_mut() else { return null_error("analyzer") };
        let path = check!(read_str(path));
        match RuleConfig::load(Path::new(path)) {
            Ok(c) => {
                a.config = c;
                IacsStatus::Ok
            }
            Err(e) => fail(IacsStatus::ConfigError, &e),
        }
    })
}

/// Loads a builtin model; targeted findings are scored with it from now on.
///
/// # Safety
/// `analyzer` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyzer_load_model(analyzer: *mut IacsAnalyzer, path: *const c_char) -> IacsStatus {
    guard(|| {
        let Some(a) = analyzer.as_mut() else { return null_error("analyzer") };
        let path = check!(read_str(path));
        match BuiltinModel::load(Path::new(path)) {
            Ok(m) => {
                a.model = Some(m);
                IacsStatus::Ok
            }
            Err(e) => fail(IacsStatus::ModelError, &e),
        }
    })
}

/// # Safety
/// `analyzer` must be live.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyzer_set_threshold(analyzer: *mut IacsAnalyzer, threshold: f64) -> IacsStatus {
    guard(|| {
        let Some(a) = analyzer.as_mut() else { return null_error("analyzer") };
        if !(0.0..=1.0).contains(&threshold) {
            set_error(format!("threshold {threshold} is outside [0, 1]"));
            return IacsStatus::OutOfRange;
        }
        a.threshold = threshold;
        IacsStatus::Ok
    })
}

fn run(a: &IacsAnalyzer, corpus: &Corpus) -> Result<IacsReport, IacsStatus> {
    let findings = detect(&corpus.project, &a.config);
    let mut scorer: Box<dyn Scorer> = match &a.model {
        Some(m) => Box::new(BuiltinScorer::new(m.clone())),
        None => Box::new(PassthroughScorer),
    };
    let sources: &BTreeMap<String, String> = &corpus.sources;
    let outcome = prune(
        &findings,
        sources,
        scorer.as_mut(),
        &TargetedSmellSet::default(),
        a.threshold,
        DEFAULT_BATCH_SIZE,
    )
    .map_err(|e: PrunerError| fail(IacsStatus::ScorerError, &e))?;
    let kept = rank_findings(outcome.kept);
    let n_kept = kept.len();
    let entries = kept
        .into_iter()
        .map(|s| (s, true))
        .chain(rank_findings(outcome.dropped).into_iter().map(|s| (s, false)))
        .map(|(scored, kept)| Entry {
            file_path: CString::new(scored.finding.file_path.replace('\0', "")).unwrap_or_default(),
            rationale: CString::new(scored.finding.rationale.replace('\0', "")).unwrap_or_default(),
            scored,
            kept,
        })
        .collect();
    Ok(IacsReport { entries, kept: n_kept })
}

/// Analyzes one file held in memory. The technology is taken from the
/// extension of `path`, or sniffed from `content`.
///
/// # Safety
/// `analyzer` must be live, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyze_source(
    analyzer: *const IacsAnalyzer,
    path: *const c_char,
    content: *const c_char,
    out: *mut *mut IacsReport,
) -> IacsStatus {
    guard(|| {
        let Some(a) = analyzer.as_ref() else { return null_error("analyzer") };
        if out.is_null() {
            return null_error("out");
        }
        let path = check!(read_str(path));
        let content = check!(read_str(content));
        let corpus = match corpus_from_source(path, content, None) {
            Ok(c) => c,
            Err(e) => return fail(IacsStatus::ParseError, &e),
        };
        let report = check!(run(a, &corpus));
        *out = Box::into_raw(Box::new(report));
        IacsStatus::Ok
    })
}

/// Analyzes every supported file below `root`. Files that fail to parse are
/// skipped.
///
/// # Safety
/// `analyzer` must be live, `root` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iacs_analyze_dir(
    analyzer: *const IacsAnalyzer,
    root: *const c_char,
    out: *mut *mut IacsReport,
) -> IacsStatus {
    guard(|| {
        let Some(a) = analyzer.as_ref() else { return null_error("analyzer") };
        if out.is_null() {
            return null_error("out");
        }
        let root = check!(read_str(root));
        let corpus = match load_corpus(Path::new(root), None) {
            Ok(c) => c,
            Err(e) => return fail(IacsStatus::IoError, &e),
        };
        let report = check!(run(a, &corpus));
        *out = Box::into_raw(Box::new(report));
        IacsStatus::Ok
    })
}

/// Total number of findings, kept and dropped. Zero for a null report.
///
/// # Safety
/// `report` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn iacs_report_len(report: *const IacsReport) -> usize {
    report.as_ref().map_or(0, |r| r.entries.len())
}

/// Number of kept findings; they occupy the first positions.
///
/// # Safety
/// `report` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn iacs_report_kept_len(report: *const IacsReport) -> usize {
    report.as_ref().map_or(0, |r| r.kept)
}

/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iacs_report_get(report: *const IacsReport, index: usize, out: *mut IacsFinding) -> IacsStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return null_error("report") };
        if out.is_null() {
            return null_error("out");
        }
        let Some(e) = r.entries.get(index) else {
            set_error(format!("index {index} out of range for {} findings", r.entries.len()));
            return IacsStatus::OutOfRange;
        };
        *out = IacsFinding {
            file_path: e.file_path.as_ptr(),
            line: e.scored.finding.line,
            smell: e.scored.finding.smell.index() as u32,
            confidence: e.scored.smell_confidence,
            fp_probability: e.scored.fp_probability,
            kept: u8::from(e.kept),
            rationale: e.rationale.as_ptr(),
        };
        IacsStatus::Ok
    })
}

/// # Safety
/// `report` must come from an analyze call or be null.
#[no_mangle]
pub unsafe extern "C" fn iacs_report_free(report: *mut IacsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Message for the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn iacs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

static SMELL_NAMES: [&CStr; 9] = [
    c"AdminByDefault",
    c"EmptyPassword",
    c"HardCodedSecret",
    c"MissingDefaultCase",
    c"NoIntegrityCheck",
    c"SuspiciousComment",
    c"InvalidIpBinding",
    c"HttpWithoutTls",
    c"WeakCrypto",
];

/// Static name of smell `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn iacs_smell_name(index: u32) -> *const c_char {
    SMELL_NAMES.get(index as usize).map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of smell types.
#[no_mangle]
pub extern "C" fn iacs_smell_count() -> u32 {
    SmellType::ALL.len() as u32
}

#[no_mangle]
pub extern "C" fn iacs_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smell_names_follow_core_order() {
        for (i, s) in SmellType::ALL.iter().enumerate() {
            assert_eq!(SMELL_NAMES[i].to_str().unwrap(), s.name());
        }
    }
}
