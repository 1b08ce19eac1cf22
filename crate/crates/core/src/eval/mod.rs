//! Accuracy and effort-aware metrics against a line-level oracle.

mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::ir::Technology;
use crate::rules::{Finding, SmellType};

pub use oracle::{load_oracle, oracle_to_text, parse_oracle, OracleEntry, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("the oracle is empty")]
    EmptyOracle,
    #[error("total LOC must be positive")]
    ZeroTotalLoc,
    #[error("no F1 score for {0}")]
    MissingTechnology(Technology),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_smell: BTreeMap<SmellType, Counts>,
}

impl MatchCounts {
    pub fn totals(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

type Key<'a> = (&'a str, usize, SmellType);

fn oracle_multiset(oracle: &[OracleEntry]) -> HashMap<Key<'_>, usize> {
    let mut m = HashMap::new();
    for e in oracle {
        *m.entry((e.file_path.as_str(), e.line, e.smell)).or_insert(0) += 1;
    }
    m
}

/// Exact (file, line, smell) matching; every oracle entry and every
/// prediction is used at most once.
pub fn match_findings(predictions: &[Finding], oracle: &[OracleEntry]) -> MatchCounts {
    let mut remaining = oracle_multiset(oracle);
    let mut counts = MatchCounts::default();
    for p in predictions {
        let row = counts.per_smell.entry(p.smell).or_default();
        match remaining.get_mut(&p.key()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                row.tp += 1;
            }
            _ => row.fp += 1,
        }
    }
    for ((_, _, smell), n) in remaining {
        counts.per_smell.entry(smell).or_default().fn_ += n;
    }
    for row in counts.per_smell.values() {
        counts.tp += row.tp;
        counts.fp += row.fp;
        counts.fn_ += row.fn_;
    }
    counts
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1; any empty denominator yields 0.
pub fn prf1(counts: Counts) -> (f64, f64, f64) {
    let p = ratio(counts.tp, counts.tp + counts.fp);
    let r = ratio(counts.tp, counts.tp + counts.fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Unweighted mean over the three technologies.
pub fn macro_f1(f1s: &BTreeMap<Technology, f64>) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    for tech in Technology::ALL {
        sum += f1s.get(&tech).ok_or(EvalError::MissingTechnology(tech))?;
    }
    Ok(sum / Technology::ALL.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "percent")]
pub enum Effort {
    Reached(f64),
    Unreached,
}

/// Percentage of `total_loc` inspected, walking the ranking from the top,
/// until `ceil(target_recall * |oracle|)` oracle entries have been matched.
/// Each distinct (file, line) costs one line however many smells it carries.
pub fn effort_at_recall<'a>(
    ranking: impl IntoIterator<Item = &'a Finding>,
    oracle: &[OracleEntry],
    target_recall: f64,
    total_loc: usize,
) -> Result<Effort, EvalError> {
    if oracle.is_empty() {
        return Err(EvalError::EmptyOracle);
    }
    if total_loc == 0 {
        return Err(EvalError::ZeroTotalLoc);
    }
    let needed = (target_recall * oracle.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    if needed == 0 {
        return Ok(Effort::Reached(0.0));
    }
    let mut remaining = oracle_multiset(oracle);
    let mut inspected: HashSet<(&str, usize)> = HashSet::new();
    let mut matched = 0;
    for f in ranking {
        inspected.insert((f.file_path.as_str(), f.line));
        if let Some(n) = remaining.get_mut(&f.key()) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
        if matched >= needed {
            return Ok(Effort::Reached(100.0 * inspected.len() as f64 / total_loc as f64));
        }
    }
    Ok(Effort::Unreached)
}

/// F1 over the ranking prefix that fits in `floor(budget_fraction *
/// total_loc)` distinct lines (at least one).
pub fn f1_at_loc<'a>(
    ranking: impl IntoIterator<Item = &'a Finding>,
    oracle: &[OracleEntry],
    budget_fraction: f64,
    total_loc: usize,
) -> Result<f64, EvalError> {
    if oracle.is_empty() {
        return Err(EvalError::EmptyOracle);
    }
    if total_loc == 0 {
        return Err(EvalError::ZeroTotalLoc);
    }
    let budget = ((budget_fraction * total_loc as f64 + 1e-9).floor() as usize).max(1);
    let mut remaining = oracle_multiset(oracle);
    let mut inspected: HashSet<(&str, usize)> = HashSet::new();
    let mut counts = Counts::default();
    for f in ranking {
        let spot = (f.file_path.as_str(), f.line);
        if !inspected.contains(&spot) {
            if inspected.len() == budget {
                break;
            }
            inspected.insert(spot);
        }
        match remaining.get_mut(&f.key()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                counts.tp += 1;
            }
            _ => counts.fp += 1,
        }
    }
    counts.fn_ = oracle.len() - counts.tp;
    Ok(prf1(counts).2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ReportRow {
    fn new(label: &str, c: Counts) -> ReportRow {
        let (precision, recall, f1) = prf1(c);
        ReportRow {
            label: label.to_string(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
        }
    }
}

pub const NO_SMELL: &str = "NoSmell";

/// One row per smell type (all nine, absent ones as zeros) plus the no-smell
/// row over files.
///
/// A file counts toward the no-smell row as TP when it is oracle-clean and
/// receives no prediction, FP when it is oracle-clean but predicted smelly,
/// and FN when it is oracle-smelly but receives no prediction.
pub fn per_smell_report(
    counts: &MatchCounts,
    clean_files: &[String],
    smelly_files: &[String],
    predictions: &[Finding],
) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = SmellType::ALL
        .iter()
        .map(|s| ReportRow::new(s.name(), counts.per_smell.get(s).copied().unwrap_or_default()))
        .collect();
    let predicted: BTreeSet<&str> = predictions.iter().map(|f| f.file_path.as_str()).collect();
    let mut none = Counts::default();
    for f in clean_files {
        if predicted.contains(f.as_str()) {
            none.fp += 1;
        } else {
            none.tp += 1;
        }
    }
    for f in smelly_files {
        if !predicted.contains(f.as_str()) {
            none.fn_ += 1;
        }
    }
    rows.push(ReportRow::new(NO_SMELL, none));
    rows
}

/// Comma-delimited table with three-decimal ratios.
pub fn report_table(rows: &[ReportRow]) -> String {
    let mut out = String::from("smell,tp,fp,fn,precision,recall,f1\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.3}",
            r.label, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechnologySummary {
    pub technology: Technology,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub total_loc: usize,
    pub effort_at_60_recall: Option<Effort>,
    pub f1_at_1_percent_loc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub technologies: Vec<TechnologySummary>,
    /// Absent when some technology has no files in the corpus.
    pub macro_f1: Option<f64>,
}

/// Files of the evaluated corpus, with their technology and line count.
#[derive(Debug, Clone, Default)]
pub struct CorpusFiles {
    pub files: BTreeMap<String, (Technology, usize)>,
}

impl CorpusFiles {
    pub fn loc_for(&self, tech: Technology) -> usize {
        self.files.values().filter(|(t, _)| *t == tech).map(|(_, n)| n).sum()
    }

    pub fn technology_of(&self, path: &str) -> Option<Technology> {
        self.files.get(path).map(|(t, _)| *t)
    }

    /// Corpus files without any oracle entry, and those with one.
    pub fn partition_clean<'a>(&'a self, oracle: &[OracleEntry]) -> (Vec<String>, Vec<String>) {
        let smelly: BTreeSet<&str> = oracle.iter().map(|e| e.file_path.as_str()).collect();
        let (dirty, clean): (Vec<&'a String>, Vec<&'a String>) =
            self.files.keys().partition(|f| smelly.contains(f.as_str()));
        (
            clean.into_iter().cloned().collect(),
            dirty.into_iter().cloned().collect(),
        )
    }
}

/// Per-technology accuracy and effort metrics. `ranking` must already be in
/// rank order; technology membership comes from `corpus`, falling back to
/// the finding's own technology for files outside it.
pub fn summarize(ranking: &[Finding], oracle: &[OracleEntry], corpus: &CorpusFiles) -> EvalSummary {
    let tech_of_finding = |f: &Finding| corpus.technology_of(&f.file_path).unwrap_or(f.technology);
    let mut technologies = Vec::new();
    let mut f1s = BTreeMap::new();
    for tech in Technology::ALL {
        let preds: Vec<Finding> = ranking.iter().filter(|f| tech_of_finding(f) == tech).cloned().collect();
        let truth: Vec<OracleEntry> = oracle
            .iter()
            .filter(|e| corpus.technology_of(&e.file_path) == Some(tech))
            .cloned()
            .collect();
        let loc = corpus.loc_for(tech);
        if loc == 0 && preds.is_empty() && truth.is_empty() {
            continue;
        }
        let counts = match_findings(&preds, &truth);
        let (precision, recall, f1) = prf1(counts.totals());
        f1s.insert(tech, f1);
        technologies.push(TechnologySummary {
            technology: tech,
            tp: counts.tp,
            fp: counts.fp,
            fn_: counts.fn_,
            precision,
            recall,
            f1,
            total_loc: loc,
            effort_at_60_recall: effort_at_recall(&preds, &truth, 0.60, loc).ok(),
            f1_at_1_percent_loc: f1_at_loc(&preds, &truth, 0.01, loc).ok(),
        });
    }
    EvalSummary {
        technologies,
        macro_f1: macro_f1(&f1s).ok(),
    }
}

/// Comma-delimited per-technology table for the summary.
pub fn summary_table(summary: &EvalSummary) -> String {
    let mut out = String::from("technology,tp,fp,fn,precision,recall,f1,effort_at_60_recall,f1_at_1_percent_loc\n");
    for t in &summary.technologies {
        let effort = match t.effort_at_60_recall {
            Some(Effort::Reached(p)) => format!("{p:.2}"),
            Some(Effort::Unreached) => "unreached".into(),
            None => "n/a".into(),
        };
        let f1_loc = t.f1_at_1_percent_loc.map_or("n/a".into(), |v| format!("{v:.3}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.3},{},{}",
            t.technology, t.tp, t.fp, t.fn_, t.precision, t.recall, t.f1, effort, f1_loc
        );
    }
    match summary.macro_f1 {
        Some(m) => {
            let _ = writeln!(out, "macro_f1,{m:.3}");
        }
        None => out.push_str("macro_f1,n/a\n"),
    }
    out
}
