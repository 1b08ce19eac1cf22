use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ir::{line_at, line_count, LocationError, Technology};
use crate::rules::{Finding, SmellType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    TP,
    FP,
}

impl Label {
    /// Training target: a false positive is the positive class.
    pub fn target(self) -> f64 {
        match self {
            Label::TP => 0.0,
            Label::FP => 1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::TP => "TP",
            Label::FP => "FP",
        })
    }
}

/// One pruner example: a flagged line with its surrounding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub technology: Technology,
    pub file_path: String,
    pub line: usize,
    pub smell: SmellType,
    pub target: String,
    pub context: String,
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

/// Trims and collapses whitespace runs to one space; case and quotes stay.
pub fn normalize_snippet(code: &str) -> String {
    code.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Hex SHA-256 of the normalized target and the smell name.
pub fn instance_id(target: &str, smell: SmellType) -> String {
    let mut hasher = Sha256::new();
    hasher.update(normalize_snippet(target).as_bytes());
    hasher.update([0x1f]);
    hasher.update(smell.name().as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Instance {
    pub fn new(
        technology: Technology,
        file_path: impl Into<String>,
        line: usize,
        smell: SmellType,
        target: impl Into<String>,
        context: impl Into<String>,
        rationale: impl Into<String>,
    ) -> Instance {
        let target = target.into();
        Instance {
            id: instance_id(&target, smell),
            technology,
            file_path: file_path.into(),
            line,
            smell,
            target,
            context: context.into(),
            rationale: rationale.into(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Instance {
        self.label = Some(label);
        self
    }

    /// Dedup key: normalized target plus smell.
    pub fn snippet_key(&self) -> (String, SmellType) {
        (normalize_snippet(&self.target), self.smell)
    }

    /// First source line covered by `context`.
    pub fn context_start(&self) -> usize {
        self.line.saturating_sub(2).max(1)
    }
}

/// Builds the instance for `finding` from the text of its file.
///
/// The context holds lines `line-2 ..= line+2`, clipped to the file.
pub fn make_instance(finding: &Finding, file_text: &str) -> Result<Instance, LocationError> {
    let total = line_count(file_text);
    let out_of_range = || LocationError {
        file_path: finding.file_path.clone(),
        line: finding.line,
        line_count: total,
    };
    if finding.line == 0 || finding.line > total {
        return Err(out_of_range());
    }
    let target = line_at(file_text, finding.line).ok_or_else(out_of_range)?;
    let first = finding.line.saturating_sub(2).max(1);
    let last = (finding.line + 2).min(total);
    let context = (first..=last)
        .filter_map(|n| line_at(file_text, n))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Instance::new(
        finding.technology,
        finding.file_path.clone(),
        finding.line,
        finding.smell,
        target,
        context,
        finding.rationale.clone(),
    ))
}

#[derive(Debug, Error)]
pub enum InstanceIoError {
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

/// Reads newline-delimited instance records; blank lines are ignored.
pub fn read_instances(path: &Path) -> Result<Vec<Instance>, InstanceIoError> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| InstanceIoError::Io {
        path: name.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| InstanceIoError::Io {
            path: name.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = serde_json::from_str(&line).map_err(|e| InstanceIoError::Format {
            path: name.clone(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}

pub fn instances_to_jsonl(instances: &[Instance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instances serialize"));
        out.push('\n');
    }
    out
}

pub fn write_instances(path: &Path, instances: &[Instance]) -> Result<(), InstanceIoError> {
    let io = |source| InstanceIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(instances_to_jsonl(instances).as_bytes()).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finding(line: usize) -> Finding {
        Finding {
            file_path: "a.pp".into(),
            line,
            smell: SmellType::HardCodedSecret,
            rationale: "r".into(),
            confidence: 1.0,
            technology: Technology::Puppet,
        }
    }

    #[test]
    fn window_is_clipped() {
        let inst = make_instance(&finding(1), "one\ntwo\n").unwrap();
        assert_eq!(inst.context, "one\ntwo");
        assert_eq!(inst.target, "one");
        let inst = make_instance(&finding(3), "1\n2\n3\n4\n5\n6\n7").unwrap();
        assert_eq!(inst.context, "1\n2\n3\n4\n5");
        assert!(make_instance(&finding(3), "1\n2\n").is_err());
        assert!(make_instance(&finding(0), "1\n").is_err());
    }

    #[test]
    fn ids_ignore_whitespace_layout() {
        assert_eq!(
            instance_id("  $a =   'x'", SmellType::WeakCrypto),
            instance_id("$a = 'x'", SmellType::WeakCrypto)
        );
        assert_ne!(
            instance_id("$a = 'x'", SmellType::WeakCrypto),
            instance_id("$a = 'x'", SmellType::HardCodedSecret)
        );
        assert_eq!(instance_id("x", SmellType::WeakCrypto).len(), 64);
    }

    #[test]
    fn label_field_is_optional_on_disk() {
        let inst = make_instance(&finding(1), "$u = 'x'\n").unwrap();
        let line = serde_json::to_string(&inst).unwrap();
        assert!(!line.contains("label"));
        let labeled = inst.clone().with_label(Label::FP);
        let line = serde_json::to_string(&labeled).unwrap();
        assert!(line.contains("\"label\":\"FP\""));
        let back: Instance = serde_json::from_str(&line).unwrap();
        assert_eq!(back, labeled);
    }
}
