//! Pseudo-label corpus construction: mining, prompts, teacher replies,
//! deduplication and splitting.

mod dedup;
mod instance;
mod prompt;
mod split;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::eval::OracleEntry;
use crate::ir::line_count;
use crate::parsers::{load_corpus, LoadError};
use crate::rules::{detect, Finding, RuleConfig, SmellType};

pub use dedup::{dedup_files, dedup_snippets, SnippetDedup};
pub use instance::{
    instance_id, instances_to_jsonl, make_instance, normalize_snippet, read_instances, write_instances, Instance,
    InstanceIoError, Label,
};
pub use prompt::{build_prompt, parse_teacher_response, UnparseableResponse};
pub use split::{make_splits, Shortfall, SplitOutcome, SplitSpec, Stratum};

pub const DEFAULT_MIN_WARNINGS: usize = 20;
pub const DEFAULT_MAX_LINES: usize = 200;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MineResult {
    pub instances: Vec<Instance>,
    /// Files that could not be read or parsed, with the reason.
    pub warnings: Vec<(String, String)>,
}

/// Instances for every targeted finding in files that have at least
/// `min_warnings` targeted findings and at most `max_lines` lines.
pub fn mine_candidates(
    corpus_root: &Path,
    config: &RuleConfig,
    targeted: &BTreeSet<SmellType>,
    min_warnings: usize,
    max_lines: usize,
) -> Result<MineResult, LoadError> {
    let corpus = load_corpus(corpus_root, None)?;
    let findings = detect(&corpus.project, config);
    let mut by_file: BTreeMap<&str, Vec<&Finding>> = BTreeMap::new();
    for f in findings.iter().filter(|f| targeted.contains(&f.smell)) {
        by_file.entry(f.file_path.as_str()).or_default().push(f);
    }
    let mut out = MineResult {
        warnings: corpus.failures.clone(),
        ..MineResult::default()
    };
    for (file, found) in by_file {
        let source = &corpus.sources[file];
        if found.len() < min_warnings || line_count(source) > max_lines {
            continue;
        }
        for f in found {
            match make_instance(f, source) {
                Ok(inst) => out.instances.push(inst),
                Err(e) => out.warnings.push((file.to_string(), e.to_string())),
            }
        }
    }
    Ok(out)
}

/// TP when the (file, line, smell) triple is in the oracle, FP otherwise.
/// Findings whose file text is missing from `sources` are skipped.
pub fn label_oracle_detections(
    findings: &[Finding],
    oracle: &[OracleEntry],
    sources: &BTreeMap<String, String>,
) -> Vec<Instance> {
    let truth: HashMap<(&str, usize, SmellType), ()> = oracle
        .iter()
        .map(|e| ((e.file_path.as_str(), e.line, e.smell), ()))
        .collect();
    findings
        .iter()
        .filter_map(|f| {
            let source = sources.get(&f.file_path)?;
            let inst = make_instance(f, source).ok()?;
            let label = if truth.contains_key(&f.key()) { Label::TP } else { Label::FP };
            Some(inst.with_label(label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Technology;

    #[test]
    fn labels_follow_exact_triples() {
        let sources: BTreeMap<String, String> = [("a.pp".to_string(), "$user = 'x'\n$key = 'y'\n".to_string())].into();
        let finding = |line, smell| Finding {
            file_path: "a.pp".into(),
            line,
            smell,
            rationale: "r".into(),
            confidence: 1.0,
            technology: Technology::Puppet,
        };
        let findings = [finding(1, SmellType::HardCodedSecret), finding(2, SmellType::HardCodedSecret)];
        let oracle = [
            OracleEntry::new("a.pp", 1, SmellType::HardCodedSecret),
            OracleEntry::new("a.pp", 2, SmellType::WeakCrypto),
        ];
        let labeled = label_oracle_detections(&findings, &oracle, &sources);
        let labels: Vec<_> = labeled.iter().map(|i| i.label).collect();
        assert_eq!(labels, [Some(Label::TP), Some(Label::FP)]);
    }
}
